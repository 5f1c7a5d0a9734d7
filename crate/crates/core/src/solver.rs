//! Critical transaction cost `λ_c = 1 - sup ρ(Q)` over the closed cube of
//! measures, membership in `M(λ)`, and the shape of `M(λ_c)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    closed_form_lambda_c, lower_bound_lambda_star, q_star, upper_bound_semi_homogeneous, ClosedForm,
};
use crate::error::Result;
use crate::measure::{GridMeasures, Measure, DEFAULT_GRID_CAP};
use crate::optimize::{compass_search, NelderMead};
use crate::rho::{compute_rho, MinRatio, RhoEvaluator};
use crate::tree::MarketTree;

/// Bounds closer than this are treated as equal.
pub const SANDWICH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Grid resolution for the seed scan; `None` picks it from the dimension.
    pub grid_m: Option<u32>,
    /// Iteration budget per Nelder-Mead run; 0 skips refinement entirely.
    pub refine_budget: usize,
    /// Random starting points for the local search.
    pub starts: usize,
    pub seed: u64,
    /// Points drawn when the dimension is too large for a grid.
    pub random_scan: usize,
    pub grid_cap: u64,
    pub use_closed_form: bool,
    pub use_sandwich: bool,
    /// Also start a local search from the node-wise one-step measure.
    pub seed_one_step: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            grid_m: None,
            refine_budget: 2000,
            starts: 16,
            seed: 0,
            random_scan: 100_000,
            grid_cap: DEFAULT_GRID_CAP,
            use_closed_form: true,
            use_sandwich: true,
            seed_one_step: true,
        }
    }
}

impl SolverConfig {
    /// Skip the closed form and the sandwich shortcut.
    pub fn numeric_only(mut self) -> Self {
        self.use_closed_form = false;
        self.use_sandwich = false;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "closed_form")]
    ClosedForm,
    #[serde(rename = "grid")]
    Grid,
    #[serde(rename = "grid+refine")]
    GridRefine,
    #[serde(rename = "sandwich_exact")]
    SandwichExact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaCReport {
    pub lambda_c: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: Method,
    pub grid_step: Option<f64>,
    pub seed: u64,
    pub certified_gap: f64,
    /// Best `ρ` found by the seed scan, before refinement.
    pub grid_rho: Option<f64>,
    pub argmax_measure: Measure,
}

impl LambdaCReport {
    /// Whether `lambda_c` is exact rather than a search result.
    pub fn is_certified(&self) -> bool {
        matches!(self.method, Method::ClosedForm | Method::SandwichExact)
            || self.lambda_c <= self.lower + SANDWICH_TOL
    }
}

/// Upper bound on `λ_c`: the semi-homogeneous bound when it applies,
/// otherwise `1 - ρ` of the node-wise one-step measure. The two agree on
/// semi-homogeneous trees.
pub fn upper_bound(tree: &MarketTree) -> f64 {
    match tree.as_semi_homogeneous() {
        Some(spec) => upper_bound_semi_homogeneous(&spec),
        None => 1.0 - RhoEvaluator::new(tree).score(tree.one_step_measure().coords()),
    }
}

/// Exact maximum of `ρ` over the grid `{0, 1/m, ..., 1}^(2^N - 1)`. Ties go
/// to the first point in enumeration order.
pub fn brute_force_sup_rho(tree: &MarketTree, m: u32, cap: u64) -> Result<(f64, Measure)> {
    let mut eval = RhoEvaluator::new(tree);
    let mut best = f64::NEG_INFINITY;
    let mut best_q = Vec::new();
    GridMeasures::for_each_point(tree.horizon(), m, cap, |q| {
        let v = eval.score(q);
        if v > best {
            best = v;
            best_q.clear();
            best_q.extend_from_slice(q);
        }
    })?;
    Ok((best, Measure::from_flat(tree.horizon(), best_q)?))
}

/// Grid resolution used for the seed scan, or `None` for a random scan.
pub fn adaptive_grid(dimension: usize) -> Option<u32> {
    match dimension {
        0..=3 => Some(16),
        4..=7 => Some(4),
        _ => None,
    }
}

#[derive(Debug, Clone)]
struct Best {
    value: f64,
    q: Vec<f64>,
}

impl Best {
    fn new() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            q: Vec::new(),
        }
    }

    /// Higher score wins; equal scores go to the lexicographically smaller
    /// coordinate vector.
    fn offer(&mut self, value: f64, q: &[f64]) {
        let better = value > self.value
            || (value == self.value && q.iter().partial_cmp(self.q.iter()) == Some(std::cmp::Ordering::Less));
        if better {
            self.value = value;
            self.q.clear();
            self.q.extend_from_slice(q);
        }
    }
}

pub fn solve_lambda_c(tree: &MarketTree, config: &SolverConfig) -> Result<LambdaCReport> {
    let lower = lower_bound_lambda_star(tree);
    let upper = upper_bound(tree);
    let semi = tree.as_semi_homogeneous();
    let report = |lambda_c: f64, method, argmax_measure, grid_step, grid_rho| LambdaCReport {
        lambda_c,
        lower,
        upper,
        method,
        grid_step,
        seed: config.seed,
        certified_gap: upper - lower,
        grid_rho,
        argmax_measure,
    };

    if config.use_closed_form {
        if let Some(spec) = &semi {
            if let ClosedForm::Covered { lambda_c, .. } = closed_form_lambda_c(spec) {
                return Ok(report(lambda_c, Method::ClosedForm, q_star(spec)?, None, None));
            }
        }
    }
    if config.use_sandwich && (upper - lower).abs() <= SANDWICH_TOL {
        return Ok(report(upper, Method::SandwichExact, tree.one_step_measure(), None, None));
    }

    let mut eval = RhoEvaluator::new(tree);
    let dim = eval.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best = Best::new();

    let grid_m = config.grid_m.or_else(|| adaptive_grid(dim));
    match grid_m {
        Some(m) => GridMeasures::for_each_point(tree.horizon(), m, config.grid_cap, |q| {
            best.offer(eval.score(q), q)
        })?,
        None => {
            let mut q = vec![0.0; dim];
            for _ in 0..config.random_scan {
                q.iter_mut().for_each(|x| *x = rng.gen());
                best.offer(eval.score(&q), &q);
            }
        }
    }
    let grid_rho = best.value;
    let grid_step = grid_m.map(|m| 1.0 / m as f64);

    if config.refine_budget == 0 {
        let q = Measure::from_flat(tree.horizon(), best.q)?;
        return Ok(report(1.0 - best.value, Method::Grid, q, grid_step, Some(grid_rho)));
    }

    let mut starts = vec![best.q.clone()];
    if config.seed_one_step {
        starts.push(tree.one_step_measure().coords().to_vec());
    }
    for _ in 0..config.starts {
        starts.push((0..dim).map(|_| rng.gen()).collect());
    }

    let nm = NelderMead {
        max_iter: config.refine_budget,
        ..NelderMead::default()
    };
    let mut f = |q: &[f64]| eval.score(q);
    for start in starts {
        let (x, v) = nm.maximize(&mut f, &start);
        let (x, v) = compass_search(&mut f, x, v, 0.05, 1e-10);
        best.offer(v, &x);
    }

    let q = Measure::from_flat(tree.horizon(), best.q)?;
    Ok(report(1.0 - best.value, Method::GridRefine, q, grid_step, Some(grid_rho)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipStatus {
    Member,
    /// The score condition holds but some coordinate sits on {0, 1}.
    BoundaryOnly,
    NonMember,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub status: MembershipStatus,
    pub rho: f64,
    /// Node with the smallest ratio; it violates the condition for non-members.
    pub witness: MinRatio,
}

/// Classifies `q` against `M(λ) = {Q ∼ P : ρ(Q) ≥ 1 - λ}`.
pub fn m_lambda_membership(tree: &MarketTree, q: &Measure, lambda: f64, tol: f64) -> Result<Membership> {
    let tables = compute_rho(tree, q)?;
    let witness = tables.min_ratio();
    let rho = witness.ratio;
    let status = if rho < 1.0 - lambda - tol {
        MembershipStatus::NonMember
    } else if q.equivalent_to_p() {
        MembershipStatus::Member
    } else {
        MembershipStatus::BoundaryOnly
    };
    Ok(Membership { status, rho, witness })
}

/// `M(λ_c)`: the frictionless martingale measure when `β < 1 < α` holds
/// everywhere, empty otherwise.
pub fn characterize_m_lambda_c(tree: &MarketTree) -> Option<Measure> {
    tree.emm_q0().ok()
}
