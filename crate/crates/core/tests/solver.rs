mod common;

use binmarket::solver::{solve_lambda_c, LambdaCReport, Method, SolverConfig};
use binmarket::MarketTree;
use common::random_node_market;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn closed_form(alpha: &[f64], beta: &[f64]) -> f64 {
    if alpha.iter().all(|&a| a <= 1.0) {
        1.0 - alpha.iter().product::<f64>()
    } else if beta.iter().all(|&b| b >= 1.0) {
        1.0 - beta.iter().map(|b| 1.0 / b).product::<f64>()
    } else {
        0.0
    }
}

#[test]
fn numeric_path_matches_closed_forms_on_small_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..60 {
        let n = 1 + i % 2;
        let (alpha, beta): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|_| match i % 3 {
                0 => {
                    let a = rng.gen_range(0.3..1.0);
                    (a, a * rng.gen_range(0.1..0.98))
                }
                1 => {
                    let b = rng.gen_range(1.0..2.0);
                    (b * rng.gen_range(1.05..2.0), b)
                }
                _ => (rng.gen_range(1.0..2.5), rng.gen_range(0.3..1.0)),
            })
            .unzip();
        let tree = MarketTree::semi_homogeneous(1.0, &alpha, &beta).unwrap();
        let report = solve_lambda_c(&tree, &SolverConfig::default().numeric_only()).unwrap();
        let exact = closed_form(&alpha, &beta);
        assert!(
            (report.lambda_c - exact).abs() <= 1e-6,
            "alpha={alpha:?} beta={beta:?}: {} vs {exact}",
            report.lambda_c
        );
    }
}

#[test]
fn reports_are_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for n in 1..=4 {
        let tree = random_node_market(&mut rng, n, 0.3, 2.5);
        for config in [SolverConfig::default(), SolverConfig { seed: 7, ..SolverConfig::default().numeric_only() }] {
            let a = solve_lambda_c(&tree, &config).unwrap();
            let b = solve_lambda_c(&tree, &config).unwrap();
            assert_eq!(a, b);
            let back: LambdaCReport = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
            assert_eq!(back, a);
        }
    }
}

#[test]
fn random_scan_beyond_grid_dimensions() {
    // dimension 15 takes the random-scan seed instead of a lattice
    let tree = MarketTree::homogeneous(4, 1.0, 0.9, 0.5).unwrap();
    let report = solve_lambda_c(&tree, &SolverConfig::default().numeric_only()).unwrap();
    assert_eq!(report.method, Method::GridRefine);
    assert_eq!(report.grid_step, None);
    assert!((report.lambda_c - (1.0 - 0.9f64.powi(4))).abs() <= 1e-6);
    assert!(report.lower - 1e-12 <= report.lambda_c && report.lambda_c <= report.upper + 1e-12);
}
