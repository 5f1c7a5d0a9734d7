//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p binmarket --test acceptance`. Every random
//! instance comes from a fixed ChaCha seed, so reruns are identical.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use binmarket::arbitrage::{ftap_cross_check, Verdict, DEFAULT_FTAP_MARGIN, DEFAULT_LP_CAP};
use binmarket::cps::{construct_cps, verify_cps, CpsTolerance, DEFAULT_DELTA_TOL};
use binmarket::measure::{GridMeasures, DEFAULT_GRID_CAP};
use binmarket::solver::{
    brute_force_sup_rho, characterize_m_lambda_c, m_lambda_membership, solve_lambda_c, MembershipStatus, Method,
    SolverConfig,
};
use binmarket::{one_step_lambda_c, MarketTree, Selection, SemiHomogeneousSpec};
use common::*;
use proptest::strategy::Strategy;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn forced_numeric() -> SolverConfig {
    SolverConfig {
        seed_one_step: false,
        ..SolverConfig::default().numeric_only()
    }
}

fn closed_form_reproduction(alpha: f64, beta: f64, n: usize, exact: f64) -> Outcome {
    let tree = MarketTree::homogeneous(n, 1.0, alpha, beta).unwrap();
    let start = Instant::now();
    let report = solve_lambda_c(&tree, &forced_numeric()).unwrap();
    let elapsed = start.elapsed();
    let err = (report.lambda_c - exact).abs();
    outcome(
        report.method == Method::GridRefine && err <= 1e-4 && elapsed < Duration::from_secs(60),
        format!(
            "lambda_c={:.9} exact={exact:.9} err={err:.1e} method={:?} solve={:.2}s",
            report.lambda_c,
            report.method,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_1() -> Outcome {
    closed_form_reproduction(0.9, 0.5, 5, 1.0 - 0.9f64.powi(5))
}

fn criterion_2() -> Outcome {
    closed_form_reproduction(1.5, 1.05, 4, 1.0 - 1.05f64.powi(-4))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < 1000 {
        let alpha = rng.gen_range(0.0..3.0);
        let beta = rng.gen_range(0.0..alpha);
        if !(beta > 0.0 && beta < alpha) {
            continue;
        }
        done += 1;
        let tree = MarketTree::homogeneous(1, 1.0, alpha, beta).unwrap();
        let expected = oracle_one_step(alpha, beta);
        let library = one_step_lambda_c(alpha, beta).unwrap();
        for cfg in [SolverConfig::default(), SolverConfig::default().numeric_only()] {
            let got = solve_lambda_c(&tree, &cfg).unwrap().lambda_c;
            worst = worst.max((got - expected).abs()).max((got - library).abs());
        }
    }
    outcome(worst <= 1e-10, format!("1000 markets, default and numeric paths, max err={worst:.1e}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut bad = 0;
    for i in 0..200 {
        let spec = random_semi_spec(&mut rng, 1 + i % 4);
        let tree = spec.to_tree(1.0).unwrap();
        let (lower, upper) = (oracle_lower(&tree), oracle_upper(&spec));
        for cfg in [SolverConfig::default(), SolverConfig::default().numeric_only()] {
            let est = solve_lambda_c(&tree, &cfg).unwrap().lambda_c;
            if !(lower - 1e-9 <= est && est <= upper + 1e-9) {
                bad += 1;
            }
        }
    }
    let spec = SemiHomogeneousSpec::new(vec![0.9, 1.5], vec![0.5, 1.2]).unwrap();
    let tree = spec.to_tree(1.0).unwrap();
    let r = solve_lambda_c(&tree, &SolverConfig::default()).unwrap();
    let tight = (oracle_upper(&spec) - oracle_lower(&tree)).abs() <= 1e-12;
    let fixture = tight && r.method == Method::SandwichExact && (r.lambda_c - 1.0 / 6.0).abs() <= 1e-15;
    outcome(
        bad == 0 && fixture,
        format!(
            "200 semi-homogeneous markets, {bad} outside the sandwich; fixture lambda_c={} method={:?}",
            r.lambda_c, r.method
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut behind, mut degraded) = (0.0f64, 0.0f64, 0);
    for _ in 0..50 {
        let tree = random_node_market(&mut rng, 2, 0.3, 2.5);
        let report = solve_lambda_c(&tree, &SolverConfig::default().numeric_only()).unwrap();
        let (best, _) = brute_force_sup_rho(&tree, 64, DEFAULT_GRID_CAP).unwrap();
        let gap = report.lambda_c - (1.0 - best);
        worst = worst.max(gap.abs());
        behind = behind.max(gap);
        // the refined maximizer, rescored, may trail the grid by one rounding
        let refined = OracleRho::new(&tree, &report.argmax_measure).score();
        if refined < report.grid_rho.unwrap() - 1e-15 {
            degraded += 1;
        }
    }
    outcome(
        worst <= 0.02 && degraded == 0,
        format!(
            "50 markets, max |solver - brute force|={worst:.1e}, max shortfall vs brute force={behind:.1e}, refined below grid: {degraded}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut done, mut resampled, mut failures) = (0, 0, Vec::new());
    while done < 100 {
        let n = 1 + done % 4;
        let tree = random_node_market(&mut rng, n, 0.3, 2.5);
        let report = solve_lambda_c(&tree, &SolverConfig::default()).unwrap();
        let lambda = report.lambda_c + 0.02;
        if lambda >= 1.0 {
            resampled += 1;
            continue;
        }
        let q = report.argmax_measure.interiorized(1e-6);
        let member = m_lambda_membership(&tree, &q, lambda, 0.0).unwrap();
        if member.status != MembershipStatus::Member {
            resampled += 1;
            continue;
        }
        done += 1;
        match construct_cps(&tree, &q, lambda, Selection::Midpoint, DEFAULT_DELTA_TOL) {
            Ok(cps) => {
                let v = verify_cps(&tree, &q, &cps, lambda, CpsTolerance::default()).unwrap();
                if !v.is_empty() {
                    failures.push(format!("N={n}: {}", v[0]));
                }
            }
            Err(e) => failures.push(format!("N={n}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "100 triples ({resampled} resampled), {} failures{}",
            failures.len(),
            failures.first().map(|f| format!(", first: {f}")).unwrap_or_default()
        ),
    )
}

fn criterion_7() -> Outcome {
    fn run<S: Strategy>(
        name: &str,
        strategy: S,
        check: impl Fn(S::Value) -> Result<(), TestCaseError>,
    ) -> Result<(), String> {
        let config = Config {
            cases: 256,
            failure_persistence: None,
            ..Config::default()
        };
        let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
        runner.run(&strategy, check).map_err(|e| format!("{name}: {e}"))
    }
    let results = [
        run("chain", market_and_measure(5, 3.0), |(t, q)| check_chain(&t, &q)),
        run("unit rho characterization", exact_instance(4), |(a, b, q)| check_unit_rho_characterization(&a, &b, &q)),
        run("Q* ladder equalities", semi_spec(8), |s| check_q_star_ladder(&s)),
        run("nesting", semi_spec(10), |s| check_nesting(&s)),
        run(
            "locality",
            (market_and_measure(5, 3.0), 0usize..64, proptest::collection::vec(0.0f64..=1.0, 1..8)),
            |((t, q), pick, noise)| check_locality(&t, &q, pick, &noise),
        ),
        run("metric", three_measures(4), |(a, b, c)| check_metric(&a, &b, &c)),
    ];
    let failed: Vec<&String> = results.iter().filter_map(|r| r.as_ref().err()).collect();
    outcome(
        failed.is_empty(),
        match failed.first() {
            None => "6 properties x 256 cases, 0 failures".to_string(),
            Some(f) => format!("{} failing properties, first: {f}", failed.len()),
        },
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = Vec::new();
    for i in 0..100 {
        let n = 1 + i % 3;
        let tree = random_node_market(&mut rng, n, 0.3, 2.5);
        let report = solve_lambda_c(&tree, &SolverConfig::default()).unwrap();
        for shift in [-0.05, 0.05] {
            let lambda = (report.lambda_c + shift).clamp(0.0, 1.0 - 1e-9);
            let check = ftap_cross_check(&tree, lambda, &report, DEFAULT_FTAP_MARGIN, DEFAULT_LP_CAP).unwrap();
            if check.verdict != Verdict::Consistent {
                failures.push(format!("market {i} lambda={lambda:.4} {:?}", check.verdict));
            }
        }
    }
    let fixtures = [
        MarketTree::homogeneous(2, 1.0, 0.9, 0.5).unwrap(),
        MarketTree::homogeneous(3, 1.0, 1.5, 1.05).unwrap(),
        MarketTree::homogeneous(3, 1.0, 1.2, 0.9).unwrap(),
        MarketTree::semi_homogeneous(1.0, &[1.0, 1.3], &[0.8, 0.9]).unwrap(),
        MarketTree::semi_homogeneous(1.0, &[1.5], &[1.0]).unwrap(),
        MarketTree::semi_homogeneous(1.0, &[0.9, 1.5], &[0.5, 1.2]).unwrap(),
    ];
    for (i, tree) in fixtures.iter().enumerate() {
        let report = solve_lambda_c(tree, &SolverConfig::default()).unwrap();
        let check = ftap_cross_check(tree, report.lambda_c, &report, DEFAULT_FTAP_MARGIN, DEFAULT_LP_CAP).unwrap();
        let expected = !tree.frictionless_no_arbitrage();
        if check.verdict != Verdict::Consistent || check.arbitrage_found != Some(expected) {
            failures.push(format!("fixture {i} at lambda_c: {check:?}"));
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "100 markets x 2 costs + {} fixtures at lambda_c, {} failures{}",
            fixtures.len(),
            failures.len(),
            failures.first().map(|f| format!(", first: {f}")).unwrap_or_default()
        ),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();
    for i in 0..20 {
        let tree = random_na_market(&mut rng, 1 + i % 3);
        match characterize_m_lambda_c(&tree) {
            Some(q0) => {
                let m = m_lambda_membership(&tree, &q0, 0.0, 1e-12).unwrap();
                let martingale = (1..=tree.horizon()).all(|n| {
                    (0..1 << (n - 1)).all(|x| {
                        let q = q0.get(n, x);
                        (q * tree.alpha(n, x) + (1.0 - q) * tree.beta(n, x) - 1.0).abs() <= 1e-12
                    })
                });
                if m.status != MembershipStatus::Member || !martingale {
                    failures.push(format!("NA market {i}: {:?}", m.status));
                }
            }
            None => failures.push(format!("NA market {i}: empty")),
        }
    }

    let mut closest: f64 = f64::INFINITY;
    let mut found = 0;
    while found < 20 {
        let n = 1 + found % 2;
        let mut spec = random_semi_spec(&mut rng, n);
        if rng.gen_bool(0.3) {
            let (mut a, mut b) = (spec.alpha().to_vec(), spec.beta().to_vec());
            let k = rng.gen_range(0..n);
            if rng.gen_bool(0.5) {
                a[k] = 1.0;
                b[k] = b[k].min(0.9);
            } else {
                b[k] = 1.0;
                a[k] = a[k].max(1.1);
            }
            spec = SemiHomogeneousSpec::new(a, b).unwrap();
        }
        let tree = spec.to_tree(1.0).unwrap();
        let report = solve_lambda_c(&tree, &SolverConfig::default()).unwrap();
        let certified = matches!(report.method, Method::ClosedForm | Method::SandwichExact);
        if tree.frictionless_no_arbitrage() || !certified {
            continue;
        }
        found += 1;
        if characterize_m_lambda_c(&tree).is_some() {
            failures.push(format!("violating market {found}: nonempty"));
        }
        let target = 1.0 - report.lambda_c;
        for q in GridMeasures::new(tree.horizon(), 32, DEFAULT_GRID_CAP).unwrap() {
            let m = m_lambda_membership(&tree, &q, report.lambda_c, 1e-9).unwrap();
            if m.status == MembershipStatus::Member {
                failures.push(format!("violating market {found}: grid member {:?}", q.coords()));
                break;
            }
            if q.equivalent_to_p() {
                closest = closest.min(target - m.rho);
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "20 NA markets, 20 certified violating markets; smallest interior gap to 1 - lambda_c: {closest:.2e}; {} failures{}",
            failures.len(),
            failures.first().map(|f| format!(", first: {f}")).unwrap_or_default()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("closed form, alpha <= 1, N=5 numeric", criterion_1),
        ("closed form, beta >= 1, N=4 numeric", criterion_2),
        ("one-step exactness", criterion_3),
        ("sandwich bounds", criterion_4),
        ("brute-force oracle agreement", criterion_5),
        ("CPS soundness", criterion_6),
        ("invariant properties", criterion_7),
        ("FTAP cross-check", criterion_8),
        ("M(lambda_c) characterization", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
