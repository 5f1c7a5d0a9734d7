//! Stable numeric output: every float leaves the crate rounded to 12
//! significant digits so regression diffs do not churn on the last ulp.

pub const SIGNIFICANT_DIGITS: usize = 12;

pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

pub fn fmt_num(x: f64) -> String {
    let r = round_sig(x);
    // normalize -0
    if r == 0.0 {
        "0".to_string()
    } else {
        r.to_string()
    }
}
