//! Closed forms and bounds for the critical transaction cost.
//!
//! The general lower bound pastes together one-step markets. For
//! semi-homogeneous markets (`α_n`, `β_n` depend on the step only) the
//! node-wise best one-step measure `Q*` yields space-constant bounds
//! `ϱ±_n` driven by
//!
//! ```text
//! γ_n = α_n 1{α_n ≤ 1} + β_n 1{β_n ≥ 1} + 1{β_n < 1 < α_n}
//! ```
//!
//! and the upper bound `1 - (1 ∧ min Λ⁰ ∧ 1/max Λ⁰)` over the set `Λ⁰` of
//! contiguous products of the `γ_n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::Measure;
use crate::tree::{node_count, MarketTree};

/// Space-homogeneous, step-dependent gross returns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiHomogeneousSpec {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl SemiHomogeneousSpec {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() || alpha.len() != beta.len() {
            return Err(Error::Domain(format!(
                "need matching non-empty step sequences (alpha: {}, beta: {})",
                alpha.len(),
                beta.len()
            )));
        }
        for (i, (&a, &b)) in alpha.iter().zip(&beta).enumerate() {
            if !(b > 0.0 && b < a && a.is_finite()) {
                return Err(Error::Domain(format!(
                    "step {}: need 0 < beta < alpha (alpha={a}, beta={b})",
                    i + 1
                )));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn homogeneous(horizon: usize, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(vec![alpha; horizon], vec![beta; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn to_tree(&self, s0: f64) -> Result<MarketTree> {
        MarketTree::semi_homogeneous(s0, &self.alpha, &self.beta)
    }
}

/// `1 - (α ∧ 1/β ∧ 1)`.
pub fn one_step_lambda_c(alpha: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < alpha) {
        return Err(Error::Domain(format!(
            "need 0 < beta < alpha (alpha={alpha}, beta={beta})"
        )));
    }
    Ok(1.0 - alpha.min(1.0 / beta).min(1.0))
}

/// `λ_* = 1 - min over all nodes of (α ∧ 1/β ∧ 1)`.
pub fn lower_bound_lambda_star(tree: &MarketTree) -> f64 {
    let worst = (1..=tree.horizon())
        .flat_map(|n| tree.alpha_level(n).iter().zip(tree.beta_level(n)))
        .map(|(&a, &b)| a.min(1.0 / b).min(1.0))
        .fold(1.0, f64::min);
    1.0 - worst
}

fn q_star_step(alpha: f64, beta: f64) -> f64 {
    if alpha <= 1.0 {
        1.0
    } else if beta < 1.0 {
        (1.0 - beta) / (alpha - beta)
    } else {
        0.0
    }
}

/// The space-constant measure `Q*`.
pub fn q_star(spec: &SemiHomogeneousSpec) -> Result<Measure> {
    let n = spec.horizon();
    let mut q = Vec::with_capacity(node_count(n.min(crate::tree::MAX_DEPTH)));
    for (i, (&a, &b)) in spec.alpha.iter().zip(&spec.beta).enumerate() {
        if i >= crate::tree::MAX_DEPTH {
            return Err(Error::Horizon(n));
        }
        q.extend(std::iter::repeat(q_star_step(a, b)).take(1 << i));
    }
    Measure::from_flat(n, q)
}

fn gamma_step(alpha: f64, beta: f64) -> f64 {
    if alpha <= 1.0 {
        alpha
    } else if beta >= 1.0 {
        beta
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GammaLadder {
    pub gamma: Vec<f64>,
    /// `ϱ⁺_n` for `n = 1..=N+1` (entry `n - 1`).
    pub varrho_plus: Vec<f64>,
    pub varrho_minus: Vec<f64>,
    /// `Λ₁⁰`: contiguous products of `γ`, sorted, duplicates removed.
    pub lambda1_0: Vec<f64>,
}

/// Products beyond this range are taken in log space.
const LOG_SPACE_LOW: f64 = 1e-8;
const LOG_SPACE_HIGH: f64 = 1e8;

fn contiguous_products(gamma: &[f64]) -> Vec<f64> {
    let log_space = gamma
        .iter()
        .any(|&g| g < LOG_SPACE_LOW || g > LOG_SPACE_HIGH);
    let mut out = Vec::with_capacity(gamma.len() * (gamma.len() + 1) / 2);
    for p in 0..gamma.len() {
        if log_space {
            let mut acc = 0.0;
            for g in &gamma[p..] {
                acc += g.ln();
                out.push(acc.exp());
            }
        } else {
            let mut acc = 1.0;
            for g in &gamma[p..] {
                acc *= g;
                out.push(acc);
            }
        }
    }
    out
}

fn sorted_dedup(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

impl GammaLadder {
    pub fn horizon(&self) -> usize {
        self.gamma.len()
    }

    /// `Λ_n = {1} ∪ {γ_n, γ_n γ_{n+1}, ..., γ_n ⋯ γ_N}`, sorted.
    pub fn lambda_set(&self, n: usize) -> Vec<f64> {
        let mut out = vec![1.0];
        let mut acc = 1.0;
        for g in &self.gamma[n - 1..] {
            acc *= g;
            out.push(acc);
        }
        sorted_dedup(out)
    }

    /// `Λ_n⁰`: products of contiguous runs inside steps `n..=N`.
    pub fn lambda0_set(&self, n: usize) -> Vec<f64> {
        sorted_dedup(contiguous_products(&self.gamma[n - 1..]))
    }
}

pub fn gamma_ladder(spec: &SemiHomogeneousSpec) -> GammaLadder {
    let gamma: Vec<f64> = spec
        .alpha
        .iter()
        .zip(&spec.beta)
        .map(|(&a, &b)| gamma_step(a, b))
        .collect();
    let n = gamma.len();
    let mut varrho_plus = vec![1.0; n + 1];
    let mut varrho_minus = vec![1.0; n + 1];
    for i in (0..n).rev() {
        varrho_plus[i] = (gamma[i] * varrho_plus[i + 1]).min(1.0);
        varrho_minus[i] = (gamma[i] * varrho_minus[i + 1]).max(1.0);
    }
    let lambda1_0 = sorted_dedup(contiguous_products(&gamma));
    let ladder = GammaLadder {
        gamma,
        varrho_plus,
        varrho_minus,
        lambda1_0,
    };
    debug_assert!((1..=n).all(|k| {
        let set = ladder.lambda_set(k);
        let (lo, hi) = (set[0], set[set.len() - 1]);
        (ladder.varrho_plus[k - 1] - lo).abs() <= 1e-12 * lo.max(1e-300)
            && (ladder.varrho_minus[k - 1] - hi).abs() <= 1e-12 * hi
    }));
    ladder
}

/// `1 - (1 ∧ min Λ₁⁰ ∧ 1/max Λ₁⁰)`.
pub fn upper_bound_semi_homogeneous(spec: &SemiHomogeneousSpec) -> f64 {
    let ladder = gamma_ladder(spec);
    let lo = ladder.lambda1_0[0];
    let hi = ladder.lambda1_0[ladder.lambda1_0.len() - 1];
    1.0 - lo.min(1.0 / hi).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormCase {
    /// Every `α_n ≤ 1`.
    AlphaAtMostOne,
    /// Every `β_n ≥ 1`.
    BetaAtLeastOne,
    /// Every `β_n ≤ 1 ≤ α_n`.
    Straddle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClosedForm {
    Covered { lambda_c: f64, case: ClosedFormCase },
    NotCovered,
}

impl ClosedForm {
    pub fn value(self) -> Option<f64> {
        match self {
            ClosedForm::Covered { lambda_c, .. } => Some(lambda_c),
            ClosedForm::NotCovered => None,
        }
    }
}

pub fn closed_form_lambda_c(spec: &SemiHomogeneousSpec) -> ClosedForm {
    let (alpha, beta) = (&spec.alpha, &spec.beta);
    if alpha.iter().all(|&a| a <= 1.0) {
        ClosedForm::Covered {
            lambda_c: 1.0 - alpha.iter().product::<f64>(),
            case: ClosedFormCase::AlphaAtMostOne,
        }
    } else if beta.iter().all(|&b| b >= 1.0) {
        ClosedForm::Covered {
            lambda_c: 1.0 - beta.iter().map(|b| 1.0 / b).product::<f64>(),
            case: ClosedFormCase::BetaAtLeastOne,
        }
    } else if alpha.iter().zip(beta).all(|(&a, &b)| b <= 1.0 && 1.0 <= a) {
        ClosedForm::Covered {
            lambda_c: 0.0,
            case: ClosedFormCase::Straddle,
        }
    } else {
        ClosedForm::NotCovered
    }
}
