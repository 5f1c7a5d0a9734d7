//! Shared fixtures for the integration tests: random market generators, an
//! independent recursive `ρ` oracle, and property checks reused by both the
//! proptest suite and the acceptance harness.

#![allow(dead_code)]

use std::collections::HashMap;

use binmarket::rho::exact::{self, ExactTables};
use binmarket::{
    compute_rho, gamma_ladder, q_star, GammaLadder, MarketTree, Measure, Move, NodePath, SemiHomogeneousSpec,
};
use num_rational::BigRational;
use num_traits::One;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::Rng;

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Node-heterogeneous market with `α ∈ (lo, hi)` and `β ∈ (0.1 α, 0.98 α)`.
pub fn random_node_market<R: Rng>(rng: &mut R, horizon: usize, lo: f64, hi: f64) -> MarketTree {
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for k in 0..horizon {
        let a: Vec<f64> = (0..1 << k).map(|_| rng.gen_range(lo..hi)).collect();
        let b = a.iter().map(|&x| x * rng.gen_range(0.1..0.98)).collect();
        alpha.push(a);
        beta.push(b);
    }
    MarketTree::new(1.0, alpha, beta).unwrap()
}

pub fn random_semi_spec<R: Rng>(rng: &mut R, horizon: usize) -> SemiHomogeneousSpec {
    let alpha: Vec<f64> = (0..horizon).map(|_| rng.gen_range(0.3..2.5)).collect();
    let beta = alpha.iter().map(|&a| a * rng.gen_range(0.1..0.98)).collect();
    SemiHomogeneousSpec::new(alpha, beta).unwrap()
}

/// `β < 1 < α` at every node.
pub fn random_na_market<R: Rng>(rng: &mut R, horizon: usize) -> MarketTree {
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    for k in 0..horizon {
        alpha.push((0..1 << k).map(|_| rng.gen_range(1.01..2.5)).collect());
        beta.push((0..1 << k).map(|_| rng.gen_range(0.2..0.99)).collect());
    }
    MarketTree::new(1.0, alpha, beta).unwrap()
}

pub fn random_measure<R: Rng>(rng: &mut R, horizon: usize) -> Measure {
    let q = (0..(1 << horizon) - 1).map(|_| rng.gen_range(0.0..=1.0)).collect();
    Measure::from_flat(horizon, q).unwrap()
}

/// Proptest strategy for a market and a measure on it, `N ∈ 1..=max_n`.
pub fn market_and_measure(max_n: usize, alpha_hi: f64) -> impl Strategy<Value = (MarketTree, Measure)> {
    (1..=max_n).prop_flat_map(move |n| {
        let count = (1usize << n) - 1;
        (
            prop::collection::vec((0.05..alpha_hi, 0.02f64..0.98), count),
            prop::collection::vec(0.0f64..=1.0, count),
        )
            .prop_map(move |(ab, q)| {
                let alpha: Vec<f64> = ab.iter().map(|p| p.0).collect();
                let beta: Vec<f64> = ab.iter().map(|p| p.0 * p.1).collect();
                let tree = MarketTree::new(1.0, split(n, &alpha), split(n, &beta)).unwrap();
                (tree, Measure::from_flat(n, q).unwrap())
            })
    })
}

pub fn semi_spec(max_n: usize) -> impl Strategy<Value = SemiHomogeneousSpec> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec((0.2f64..3.0, 0.05f64..0.98), n).prop_map(|ab| {
            let alpha = ab.iter().map(|p| p.0).collect();
            let beta = ab.iter().map(|p| p.0 * p.1).collect();
            SemiHomogeneousSpec::new(alpha, beta).unwrap()
        })
    })
}

pub fn split(horizon: usize, flat: &[f64]) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(horizon);
    let mut start = 0;
    for k in 0..horizon {
        out.push(flat[start..start + (1 << k)].to_vec());
        start += 1 << k;
    }
    out
}

// ---------------------------------------------------------------------------
// Oracles
// ---------------------------------------------------------------------------

/// `(ρ⁺, ρ⁻, r⁺, r⁻)` per `(level n, node)`, computed by plain recursion over
/// paths using only the public `(n, node)` accessors.
pub struct OracleRho {
    pub horizon: usize,
    pub table: HashMap<(usize, usize), (f64, f64, f64, f64)>,
}

impl OracleRho {
    pub fn new(tree: &MarketTree, q: &Measure) -> Self {
        let mut table = HashMap::new();
        fn walk(
            tree: &MarketTree,
            q: &Measure,
            path: NodePath,
            table: &mut HashMap<(usize, usize), (f64, f64, f64, f64)>,
        ) -> (f64, f64) {
            let n = path.level() + 1;
            if n == tree.horizon() + 1 {
                return (1.0, 1.0);
            }
            let x = path.index();
            let (up_p, up_m) = walk(tree, q, path.child(Move::Up), table);
            let (dn_p, dn_m) = walk(tree, q, path.child(Move::Down), table);
            let (p, a, b) = (q.get(n, x), tree.alpha(n, x), tree.beta(n, x));
            let rp = p * a * up_p + (1.0 - p) * b * dn_p;
            let rm = p * a * up_m + (1.0 - p) * b * dn_m;
            let out = (rp.min(1.0), rm.max(1.0));
            table.insert((n, x), (out.0, out.1, rp, rm));
            out
        }
        walk(tree, q, NodePath::root(), &mut table);
        Self {
            horizon: tree.horizon(),
            table,
        }
    }

    pub fn score(&self) -> f64 {
        self.table
            .values()
            .map(|(p, m, _, _)| p / m)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `1 - (α ∧ 1/β ∧ 1)`.
pub fn oracle_one_step(alpha: f64, beta: f64) -> f64 {
    let best = [alpha, 1.0 / beta, 1.0].into_iter().fold(f64::INFINITY, f64::min);
    1.0 - best
}

pub fn oracle_gamma(alpha: f64, beta: f64) -> f64 {
    if alpha <= 1.0 {
        alpha
    } else if beta >= 1.0 {
        beta
    } else {
        1.0
    }
}

/// `Λ_n⁰` as an unsorted list of every contiguous product inside `n..=N`.
pub fn oracle_lambda0(gamma: &[f64], n: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for p in n - 1..gamma.len() {
        for k in p..gamma.len() {
            out.push(gamma[p..=k].iter().product());
        }
    }
    out
}

/// `1 - (1 ∧ min Λ₁⁰ ∧ 1/max Λ₁⁰)` by direct enumeration.
pub fn oracle_upper(spec: &SemiHomogeneousSpec) -> f64 {
    let gamma: Vec<f64> = spec.alpha().iter().zip(spec.beta()).map(|(&a, &b)| oracle_gamma(a, b)).collect();
    let set = oracle_lambda0(&gamma, 1);
    let lo = set.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = set.iter().cloned().fold(0.0, f64::max);
    1.0 - lo.min(1.0 / hi).min(1.0)
}

/// `1 - λ_*` computed node by node.
pub fn oracle_lower(tree: &MarketTree) -> f64 {
    let mut worst: f64 = 1.0;
    for n in 1..=tree.horizon() {
        for x in 0..1 << (n - 1) {
            worst = worst.min(tree.alpha(n, x)).min(1.0 / tree.beta(n, x));
        }
    }
    1.0 - worst
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

// ---------------------------------------------------------------------------
// Property checks
// ---------------------------------------------------------------------------

/// `ρ⁺ ≤ r⁺ ≤ r⁻ ≤ ρ⁻` at every interior node, plus agreement with the
/// recursive oracle and `ρ(Q) ∈ (0, 1]`.
pub fn check_chain(tree: &MarketTree, q: &Measure) -> Result<(), TestCaseError> {
    let t = compute_rho(tree, q).unwrap();
    let oracle = OracleRho::new(tree, q);
    for n in 1..=tree.horizon() {
        for x in 0..1 << (n - 1) {
            let (p, m, rp, rm) = (t.rho_plus(n, x), t.rho_minus(n, x), t.r_plus(n, x), t.r_minus(n, x));
            let tol = 1e-12 * m.max(1.0);
            prop_assert!(p <= rp + tol && rp <= rm + tol && rm <= m + tol, "chain at ({n},{x}): {p} {rp} {rm} {m}");
            let o = oracle.table[&(n, x)];
            prop_assert!(close(p, o.0, 1e-12) && close(m, o.1, 1e-12), "oracle mismatch at ({n},{x})");
        }
    }
    let score = t.score();
    prop_assert!(score > 0.0 && score <= 1.0);
    prop_assert!(close(score, oracle.score(), 1e-12));
    Ok(())
}

/// Rational instance for the exact checks: coordinates on a 1/20 grid, with
/// the martingale weight planted at nodes where `β < 1 < α` so the equality
/// hypotheses are actually reached.
pub fn exact_instance(max_n: usize) -> impl Strategy<Value = (Vec<BigRational>, Vec<BigRational>, Vec<BigRational>)> {
    (1..=max_n).prop_flat_map(|n| {
        let count = (1usize << n) - 1;
        prop::collection::vec((2i64..=30, 1i64..=29, 1i64..=19, any::<bool>()), count).prop_map(|nodes| {
            let mut alpha = Vec::new();
            let mut beta = Vec::new();
            let mut q = Vec::new();
            for (a, b, qn, plant) in nodes {
                let b = b.min(a - 1);
                let (ar, br) = (exact::ratio(a, 10), exact::ratio(b, 10));
                let qr = if plant && b < 10 && 10 < a {
                    exact::ratio(10 - b, a - b)
                } else {
                    exact::ratio(qn, 20)
                };
                alpha.push(ar);
                beta.push(br);
                q.push(qr);
            }
            (alpha, beta, q)
        })
    })
}

pub fn check_unit_rho_characterization(alpha: &[BigRational], beta: &[BigRational], q: &[BigRational]) -> Result<(), TestCaseError> {
    let one = BigRational::one();
    let t: ExactTables = exact::compute(alpha, beta, q);
    for i in 0..q.len() {
        let (p, m) = (&t.rho_plus[i], &t.rho_minus[i]);
        if *p == one {
            prop_assert!(alpha[i] > one, "rho+ = 1 but alpha <= 1 at {i}");
        }
        if *m == one {
            prop_assert!(beta[i] < one, "rho- = 1 but beta >= 1 at {i}");
        }
        if *p == one && *m == one {
            for c in [2 * i + 1, 2 * i + 2] {
                prop_assert!(t.rho_plus[c] == one && t.rho_minus[c] == one);
            }
            let q0 = (&one - &beta[i]) / (&alpha[i] - &beta[i]);
            prop_assert_eq!(&q[i], &q0);
        }
    }
    Ok(())
}

/// `ρ±(Q*)` is space-constant and equals `ϱ±`, which equal `min/max Λ_n`.
pub fn check_q_star_ladder(spec: &SemiHomogeneousSpec) -> Result<(), TestCaseError> {
    let ladder: GammaLadder = gamma_ladder(spec);
    let tree = spec.to_tree(1.0).unwrap();
    let t = compute_rho(&tree, &q_star(spec).unwrap()).unwrap();
    let n_max = spec.horizon();
    let gamma: Vec<f64> = spec.alpha().iter().zip(spec.beta()).map(|(&a, &b)| oracle_gamma(a, b)).collect();
    for n in 1..=n_max + 1 {
        for x in 0..1 << (n - 1) {
            prop_assert!(close(t.rho_plus(n, x), ladder.varrho_plus[n - 1], 1e-12));
            prop_assert!(close(t.rho_minus(n, x), ladder.varrho_minus[n - 1], 1e-12));
        }
        if n <= n_max {
            let mut set = vec![1.0];
            let mut acc = 1.0;
            for g in &gamma[n - 1..] {
                acc *= g;
                set.push(acc);
            }
            let lo = set.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = set.iter().cloned().fold(0.0, f64::max);
            prop_assert!(close(ladder.varrho_plus[n - 1], lo, 1e-12));
            prop_assert!(close(ladder.varrho_minus[n - 1], hi, 1e-12));
        }
    }
    prop_assert!(close(binmarket::upper_bound_semi_homogeneous(spec), oracle_upper(spec), 1e-12));
    Ok(())
}

/// `Λ_N⁰ ⊆ ... ⊆ Λ₁⁰`, by enumeration.
pub fn check_nesting(spec: &SemiHomogeneousSpec) -> Result<(), TestCaseError> {
    let ladder = gamma_ladder(spec);
    let n_max = spec.horizon();
    for n in 1..n_max {
        let inner = ladder.lambda0_set(n + 1);
        let outer = ladder.lambda0_set(n);
        for v in &inner {
            prop_assert!(outer.iter().any(|w| close(*v, *w, 1e-12)), "{v} missing from level {n}");
        }
        let expected = oracle_lambda0(&ladder.gamma, n);
        for v in &expected {
            prop_assert!(outer.iter().any(|w| close(*v, *w, 1e-12)));
        }
    }
    Ok(())
}

/// Changing `q` off the subtree of `(n, x)` leaves `ρ±_n(x)` untouched.
pub fn check_locality(tree: &MarketTree, q: &Measure, pick: usize, noise: &[f64]) -> Result<(), TestCaseError> {
    let horizon = tree.horizon();
    let nodes: Vec<(usize, usize)> = (1..=horizon).flat_map(|n| (0..1usize << (n - 1)).map(move |x| (n, x))).collect();
    let (n, x) = nodes[pick % nodes.len()];
    let in_subtree = |m: usize, y: usize| m >= n && (y >> (m - n)) == x;
    let mut levels = q.levels();
    let mut k = 0;
    for m in 1..=horizon {
        for y in 0..1usize << (m - 1) {
            if !in_subtree(m, y) {
                levels[m - 1][y] = noise[k % noise.len()];
            }
            k += 1;
        }
    }
    let q2 = Measure::from_levels(levels).unwrap();
    let a = compute_rho(tree, q).unwrap();
    let b = compute_rho(tree, &q2).unwrap();
    prop_assert_eq!(a.rho_plus(n, x), b.rho_plus(n, x));
    prop_assert_eq!(a.rho_minus(n, x), b.rho_minus(n, x));
    Ok(())
}

pub fn check_metric(a: &Measure, b: &Measure, c: &Measure) -> Result<(), TestCaseError> {
    let ab = a.d_infinity(b).unwrap();
    prop_assert_eq!(ab, b.d_infinity(a).unwrap());
    prop_assert_eq!(a.d_infinity(a).unwrap(), 0.0);
    prop_assert!(ab >= 0.0 && ab <= 1.0);
    prop_assert!(ab > 0.0 || a == b);
    prop_assert!(a.d_infinity(c).unwrap() <= ab + b.d_infinity(c).unwrap() + 1e-15);
    Ok(())
}

pub fn three_measures(max_n: usize) -> impl Strategy<Value = (Measure, Measure, Measure)> {
    (1..=max_n).prop_flat_map(|n| {
        let count = (1usize << n) - 1;
        let m = move || prop::collection::vec(0.0f64..=1.0, count).prop_map(move |q| Measure::from_flat(n, q).unwrap());
        (m(), m(), m())
    })
}
