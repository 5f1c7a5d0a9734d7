//! Dense revised simplex for `min c·x` subject to `A x = b`,
//! `0 ≤ x ≤ u` (`u` may be infinite).
//!
//! Nonbasic variables sit at either bound, so finite upper bounds cost no
//! extra rows. The basis is refactored from the original rows on every
//! iteration, so round-off never accumulates across pivots. Entering and
//! leaving variables follow Bland's smallest-index rule, and basic values
//! within tolerance of a bound are snapped onto it, which keeps degenerate
//! ties exact and rules out cycling.

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    /// Constraint rows, each of length `c.len()`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Upper bounds; `f64::INFINITY` for none.
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    IterationLimit,
    /// A basis matrix was numerically singular.
    Singular,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Bound violation tolerated on basic variables; phase one declares
    /// infeasibility above this times `1 + max|b|`.
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    /// Smallest pivot accepted, relative to the largest entry of the
    /// entering column (or 1 if that is smaller).
    pub pivot_tol: f64,
    pub max_iter: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iter: 50_000,
        }
    }
}

/// `P B = L U` with partial pivoting, dense and row-major.
struct Lu {
    m: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(m: usize, mut lu: Vec<f64>) -> Option<Self> {
        let scale = lu.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let p = (k..m)
                .max_by(|&i, &j| lu[i * m + k].abs().total_cmp(&lu[j * m + k].abs()))
                .expect("nonempty range");
            if lu[p * m + k].abs() <= 1e-14 * scale {
                return None;
            }
            if p != k {
                for c in 0..m {
                    lu.swap(p * m + c, k * m + c);
                }
                perm.swap(p, k);
            }
            let piv = lu[k * m + k];
            for i in k + 1..m {
                let f = lu[i * m + k] / piv;
                lu[i * m + k] = f;
                if f != 0.0 {
                    for c in k + 1..m {
                        lu[i * m + c] -= f * lu[k * m + c];
                    }
                }
            }
        }
        Some(Self { m, lu, perm })
    }

    /// Solves `B x = r`.
    fn solve(&self, r: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| r[p]).collect();
        for i in 0..m {
            let s: f64 = (0..i).map(|k| self.lu[i * m + k] * x[k]).sum();
            x[i] -= s;
        }
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|k| self.lu[i * m + k] * x[k]).sum();
            x[i] = (x[i] - s) / self.lu[i * m + i];
        }
        x
    }

    /// Solves `Bᵀ y = r`.
    fn solve_transpose(&self, r: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut z = r.to_vec();
        for i in 0..m {
            let s: f64 = (0..i).map(|k| self.lu[k * m + i] * z[k]).sum();
            z[i] = (z[i] - s) / self.lu[i * m + i];
        }
        for i in (0..m).rev() {
            let s: f64 = (i + 1..m).map(|k| self.lu[k * m + i] * z[k]).sum();
            z[i] -= s;
        }
        let mut y = vec![0.0; m];
        for (i, &p) in self.perm.iter().enumerate() {
            y[p] = z[i];
        }
        y
    }
}

enum Phase {
    Optimal,
    Unbounded,
    IterationLimit,
    Singular,
}

struct Simplex {
    m: usize,
    cols: usize,
    /// `[A | I]` with rows signed so that `b ≥ 0`, row-major.
    a: Vec<f64>,
    b: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    /// Row of each basic column, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    at_upper: Vec<bool>,
    /// Basic values from the latest factorization.
    xb: Vec<f64>,
}

impl Simplex {
    fn factor(&self) -> Option<Lu> {
        let m = self.m;
        let mut bm = vec![0.0; m * m];
        for i in 0..m {
            for (k, &j) in self.basis.iter().enumerate() {
                bm[i * m + k] = self.a[i * self.cols + j];
            }
        }
        Lu::factor(m, bm)
    }

    fn column(&self, j: usize) -> Vec<f64> {
        (0..self.m).map(|i| self.a[i * self.cols + j]).collect()
    }

    fn basic_values(&self, lu: &Lu, tol: f64) -> Vec<f64> {
        let mut rhs = self.b.clone();
        for j in 0..self.cols {
            if self.row_of[j] == usize::MAX && self.at_upper[j] {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r -= self.a[i * self.cols + j] * self.upper[j];
                }
            }
        }
        let mut xb = lu.solve(&rhs);
        for (x, &j) in xb.iter_mut().zip(&self.basis) {
            if x.abs() <= tol {
                *x = 0.0;
            } else if (*x - self.upper[j]).abs() <= tol {
                *x = self.upper[j];
            }
        }
        xb
    }

    /// Runs simplex iterations on costs `c`. Columns at or beyond
    /// `enter_limit` never enter. When the objective is known to be bounded
    /// below, an improving column that nothing blocks is round-off and is
    /// skipped until the basis changes.
    fn run(&mut self, c: &[f64], enter_limit: usize, bounded: bool, opts: &SimplexOptions, iterations: &mut usize) -> Phase {
        let mut blocked = vec![false; enter_limit];
        loop {
            let Some(lu) = self.factor() else {
                return Phase::Singular;
            };
            self.xb = self.basic_values(&lu, opts.feasibility_tol);
            if *iterations >= opts.max_iter {
                return Phase::IterationLimit;
            }
            *iterations += 1;

            let cb: Vec<f64> = self.basis.iter().map(|&j| c[j]).collect();
            let y = lu.solve_transpose(&cb);
            let entering = (0..enter_limit).find_map(|j| {
                if self.row_of[j] != usize::MAX || blocked[j] {
                    return None;
                }
                let d = c[j] - (0..self.m).map(|i| y[i] * self.a[i * self.cols + j]).sum::<f64>();
                if !self.at_upper[j] && d < -opts.optimality_tol && self.upper[j] > 0.0 {
                    Some((j, 1.0))
                } else if self.at_upper[j] && d > opts.optimality_tol {
                    Some((j, -1.0))
                } else {
                    None
                }
            });
            let Some((j, dir)) = entering else {
                return Phase::Optimal;
            };

            // x_B moves by -dir * t * alpha
            let alpha = lu.solve(&self.column(j));
            let piv = opts.pivot_tol * alpha.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            let mut step = f64::INFINITY;
            let mut leave: Option<(usize, bool)> = None;
            for r in 0..self.m {
                let a = dir * alpha[r];
                let b = self.basis[r];
                let (t, to_upper) = if a > piv {
                    (self.xb[r].max(0.0) / a, false)
                } else if a < -piv && self.upper[b].is_finite() {
                    ((self.upper[b] - self.xb[r]).max(0.0) / -a, true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if t < step => true,
                    Some((r0, _)) if t == step => b < self.basis[r0],
                    _ => false,
                };
                if better {
                    step = t;
                    leave = Some((r, to_upper));
                }
            }

            if self.upper[j].is_finite() && self.upper[j] <= step {
                self.at_upper[j] = !self.at_upper[j];
            } else if let Some((r, to_upper)) = leave {
                let b = self.basis[r];
                self.row_of[b] = usize::MAX;
                self.at_upper[b] = to_upper;
                self.basis[r] = j;
                self.row_of[j] = r;
                self.at_upper[j] = false;
            } else if bounded {
                blocked[j] = true;
                continue;
            } else {
                return Phase::Unbounded;
            }
            blocked.fill(false);
        }
    }
}

/// Row and column factors, powers of two, that pull every nonzero of `a`
/// toward magnitude one by alternating geometric-mean passes.
fn equilibrate(a: &[Vec<f64>], n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = a.len();
    let mut row = vec![1.0; m];
    let mut col = vec![1.0; n];
    let pow2 = |v: f64| 2f64.powi(v.log2().round() as i32);
    let spread = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        (hi > 0.0).then(|| pow2(1.0 / (lo * hi).sqrt()))
    };
    for _ in 0..8 {
        for i in 0..m {
            let mut it = (0..n).filter(|&j| a[i][j] != 0.0).map(|j| (a[i][j] * col[j]).abs());
            if let Some(f) = spread(&mut it) {
                row[i] = f;
            }
        }
        for j in 0..n {
            let mut it = (0..m).filter(|&i| a[i][j] != 0.0).map(|i| (a[i][j] * row[i]).abs());
            if let Some(f) = spread(&mut it) {
                col[j] = f;
            }
        }
    }
    (row, col)
}

pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> LpOutcome {
    let n = lp.c.len();
    let m = lp.a.len();
    assert_eq!(lp.b.len(), m, "one right-hand side per row");
    assert_eq!(lp.upper.len(), n, "one upper bound per variable");
    for row in &lp.a {
        assert_eq!(row.len(), n, "constraint row width");
    }
    // solve in scaled variables x = col * x', rows multiplied by `row`
    let (row, col) = equilibrate(&lp.a, n);
    let scaled = LinearProgram {
        c: lp.c.iter().zip(&col).map(|(c, s)| c * s).collect(),
        a: lp
            .a
            .iter()
            .zip(&row)
            .map(|(r, f)| r.iter().zip(&col).map(|(v, s)| v * f * s).collect())
            .collect(),
        b: lp.b.iter().zip(&row).map(|(b, f)| b * f).collect(),
        upper: lp.upper.iter().zip(&col).map(|(u, s)| u / s).collect(),
    };
    match solve_scaled(&scaled, opts) {
        LpOutcome::Optimal { x, .. } => {
            let x: Vec<f64> = x
                .iter()
                .zip(&col)
                .zip(&lp.upper)
                .map(|((x, s), &u)| (x * s).clamp(0.0, u))
                .collect();
            let objective = x.iter().zip(&lp.c).map(|(x, c)| x * c).sum();
            LpOutcome::Optimal { x, objective }
        }
        other => other,
    }
}

fn solve_scaled(lp: &LinearProgram, opts: &SimplexOptions) -> LpOutcome {
    let n = lp.c.len();
    let m = lp.a.len();
    let cols = n + m;

    let mut a = vec![0.0; m * cols];
    let mut b = vec![0.0; m];
    for (r, row) in lp.a.iter().enumerate() {
        let sign = if lp.b[r] < 0.0 { -1.0 } else { 1.0 };
        for (j, &v) in row.iter().enumerate() {
            a[r * cols + j] = sign * v;
        }
        a[r * cols + n + r] = 1.0;
        b[r] = sign * lp.b[r];
    }
    let mut upper = lp.upper.clone();
    upper.extend(std::iter::repeat(f64::INFINITY).take(m));
    let mut row_of = vec![usize::MAX; cols];
    for r in 0..m {
        row_of[n + r] = r;
    }
    let mut s = Simplex {
        m,
        cols,
        a,
        b,
        upper,
        basis: (n..cols).collect(),
        row_of,
        at_upper: vec![false; cols],
        xb: Vec::new(),
    };
    let mut iterations = 0;

    let mut phase_one = vec![0.0; cols];
    phase_one[n..].iter_mut().for_each(|c| *c = 1.0);
    match s.run(&phase_one, cols, true, opts, &mut iterations) {
        Phase::Optimal => {}
        Phase::IterationLimit => return LpOutcome::IterationLimit,
        Phase::Singular => return LpOutcome::Singular,
        Phase::Unbounded => unreachable!("phase one never reports unbounded"),
    }
    let residual: f64 = s.basis.iter().zip(&s.xb).filter(|(&j, _)| j >= n).map(|(_, x)| x).sum();
    let scale = 1.0 + lp.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if residual > opts.feasibility_tol * scale {
        return LpOutcome::Infeasible;
    }

    // Artificials are pinned at zero from here on; basic ones on redundant
    // rows simply remain in the basis.
    s.upper[n..].iter_mut().for_each(|u| *u = 0.0);
    let mut cost = lp.c.clone();
    cost.extend(std::iter::repeat(0.0).take(m));
    // with nonnegative costs the objective is bounded below by zero
    let bounded = lp.c.iter().all(|&c| c >= 0.0);
    match s.run(&cost, n, bounded, opts, &mut iterations) {
        Phase::Optimal => {}
        Phase::Unbounded => return LpOutcome::Unbounded,
        Phase::IterationLimit => return LpOutcome::IterationLimit,
        Phase::Singular => return LpOutcome::Singular,
    }

    let mut x: Vec<f64> = (0..n).map(|j| if s.at_upper[j] { lp.upper[j] } else { 0.0 }).collect();
    for (&j, &v) in s.basis.iter().zip(&s.xb) {
        if j < n {
            x[j] = v.clamp(0.0, lp.upper[j]);
        }
    }
    let objective = x.iter().zip(&lp.c).map(|(x, c)| x * c).sum();
    LpOutcome::Optimal { x, objective }
}
