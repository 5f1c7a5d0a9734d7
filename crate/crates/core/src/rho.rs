//! Backward recursion for the effective bid-ask bounds `ρ⁺`, `ρ⁻`.
//!
//! For step `n` at node `x`,
//!
//! ```text
//! r⁺_n(x) = q α ρ⁺_{n+1}(x⋆u) + (1 - q) β ρ⁺_{n+1}(x⋆d)
//! r⁻_n(x) = q α ρ⁻_{n+1}(x⋆u) + (1 - q) β ρ⁻_{n+1}(x⋆d)
//! ρ⁺_n = 1 ∧ r⁺_n,   ρ⁻_n = 1 ∨ r⁻_n,   ρ±_{N+1} ≡ 1
//! ```
//!
//! and the score of a measure is `ρ(Q) = min ρ⁺/ρ⁻` over all interior nodes.
//! The recursion is written once over [`RhoScalar`] so the exact-rational
//! path in [`exact`] runs the same arithmetic as the floating-point one.

use std::io::{self, Write};
use std::ops::{Add, Mul, Sub};

use num_traits::One;

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::measure::{locate, Measure};
use crate::tree::{level_offset, node_count, MarketTree};

pub trait RhoScalar:
    Clone + PartialOrd + One + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
}

impl<T> RhoScalar for T where
    T: Clone + PartialOrd + One + Add<Output = T> + Sub<Output = T> + Mul<Output = T>
{
}

/// Fills `rho_*` (length `2^(N+1) - 1`) and `r_*` (length `2^N - 1`).
pub(crate) fn backward<T: RhoScalar>(
    alpha: &[T],
    beta: &[T],
    q: &[T],
    rho_plus: &mut [T],
    rho_minus: &mut [T],
    r_plus: &mut [T],
    r_minus: &mut [T],
) {
    let interior = q.len();
    for i in interior..rho_plus.len() {
        rho_plus[i] = T::one();
        rho_minus[i] = T::one();
    }
    for i in (0..interior).rev() {
        let (d, u) = (2 * i + 1, 2 * i + 2);
        let up = q[i].clone() * alpha[i].clone();
        let down = (T::one() - q[i].clone()) * beta[i].clone();
        let rp = up.clone() * rho_plus[u].clone() + down.clone() * rho_plus[d].clone();
        let rm = up * rho_minus[u].clone() + down * rho_minus[d].clone();
        rho_plus[i] = if rp < T::one() { rp.clone() } else { T::one() };
        rho_minus[i] = if rm > T::one() { rm.clone() } else { T::one() };
        r_plus[i] = rp;
        r_minus[i] = rm;
    }
}

/// `ρ±_n` for `n = 1..=N+1` and `r±_n` for `n = 1..=N`, heap-ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct RhoTables {
    horizon: usize,
    rho_plus: Vec<f64>,
    rho_minus: Vec<f64>,
    r_plus: Vec<f64>,
    r_minus: Vec<f64>,
}

fn check_shapes(tree: &MarketTree, q: &Measure) -> Result<()> {
    if tree.horizon() != q.horizon() {
        return Err(Error::Domain(format!(
            "measure horizon {} does not match tree horizon {}",
            q.horizon(),
            tree.horizon()
        )));
    }
    Ok(())
}

pub fn compute_rho(tree: &MarketTree, q: &Measure) -> Result<RhoTables> {
    check_shapes(tree, q)?;
    let n = tree.horizon();
    let mut t = RhoTables {
        horizon: n,
        rho_plus: vec![1.0; node_count(n + 1)],
        rho_minus: vec![1.0; node_count(n + 1)],
        r_plus: vec![0.0; node_count(n)],
        r_minus: vec![0.0; node_count(n)],
    };
    backward(
        tree.alpha_flat(),
        tree.beta_flat(),
        q.coords(),
        &mut t.rho_plus,
        &mut t.rho_minus,
        &mut t.r_plus,
        &mut t.r_minus,
    );
    Ok(t)
}

/// Location and value of the smallest ratio `ρ⁺/ρ⁻`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinRatio {
    pub level: usize,
    pub node: usize,
    pub ratio: f64,
}

impl RhoTables {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `ρ⁺_n(x)` for `n` in `1..=N+1`.
    pub fn rho_plus(&self, n: usize, node: usize) -> f64 {
        self.rho_plus[level_offset(n - 1) + node]
    }

    pub fn rho_minus(&self, n: usize, node: usize) -> f64 {
        self.rho_minus[level_offset(n - 1) + node]
    }

    /// `r⁺_n(x)` for `n` in `1..=N`.
    pub fn r_plus(&self, n: usize, node: usize) -> f64 {
        self.r_plus[level_offset(n - 1) + node]
    }

    pub fn r_minus(&self, n: usize, node: usize) -> f64 {
        self.r_minus[level_offset(n - 1) + node]
    }

    pub(crate) fn rho_plus_flat(&self) -> &[f64] {
        &self.rho_plus
    }

    pub(crate) fn rho_minus_flat(&self) -> &[f64] {
        &self.rho_minus
    }

    pub(crate) fn r_plus_flat(&self) -> &[f64] {
        &self.r_plus
    }

    pub(crate) fn interior(&self) -> usize {
        self.r_plus.len()
    }

    pub fn ratio(&self, n: usize, node: usize) -> f64 {
        self.rho_plus(n, node) / self.rho_minus(n, node)
    }

    /// `Δ_n^λ(x) = ρ⁺_n(x) - (1 - λ) ρ⁻_n(x)`.
    pub fn delta(&self, lambda: f64, n: usize, node: usize) -> f64 {
        self.rho_plus(n, node) - (1.0 - lambda) * self.rho_minus(n, node)
    }

    pub(crate) fn delta_flat(&self, lambda: f64, i: usize) -> f64 {
        self.rho_plus[i] - (1.0 - lambda) * self.rho_minus[i]
    }

    /// `ρ(Q)`: the smallest ratio over all interior nodes.
    pub fn score(&self) -> f64 {
        self.min_ratio().ratio
    }

    /// The first node (in heap order) attaining the smallest ratio.
    pub fn min_ratio(&self) -> MinRatio {
        let mut best = (0, f64::INFINITY);
        for i in 0..self.interior() {
            let r = self.rho_plus[i] / self.rho_minus[i];
            if r < best.1 {
                best = (i, r);
            }
        }
        let (level, node) = locate(best.0);
        MinRatio {
            level,
            node,
            ratio: best.1,
        }
    }

    /// CSV dump: `level,node_index,rho_plus,rho_minus,r_plus,r_minus`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "level,node_index,rho_plus,rho_minus,r_plus,r_minus")?;
        for i in 0..self.interior() {
            let (level, node) = locate(i);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                level,
                node,
                fmt_num(self.rho_plus[i]),
                fmt_num(self.rho_minus[i]),
                fmt_num(self.r_plus[i]),
                fmt_num(self.r_minus[i])
            )?;
        }
        Ok(())
    }
}

pub fn rho_score(tables: &RhoTables) -> f64 {
    tables.score()
}

pub fn delta(tables: &RhoTables, lambda: f64, n: usize, node: usize) -> f64 {
    tables.delta(lambda, n, node)
}

/// Scores many measures against one tree without reallocating.
#[derive(Debug, Clone)]
pub struct RhoEvaluator<'a> {
    tree: &'a MarketTree,
    rho_plus: Vec<f64>,
    rho_minus: Vec<f64>,
    r_plus: Vec<f64>,
    r_minus: Vec<f64>,
}

impl<'a> RhoEvaluator<'a> {
    pub fn new(tree: &'a MarketTree) -> Self {
        let n = tree.horizon();
        Self {
            tree,
            rho_plus: vec![1.0; node_count(n + 1)],
            rho_minus: vec![1.0; node_count(n + 1)],
            r_plus: vec![0.0; node_count(n)],
            r_minus: vec![0.0; node_count(n)],
        }
    }

    pub fn dimension(&self) -> usize {
        self.r_plus.len()
    }

    /// `ρ(Q)` for flat coordinates `q` (length `2^N - 1`).
    pub fn score(&mut self, q: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), self.dimension());
        backward(
            self.tree.alpha_flat(),
            self.tree.beta_flat(),
            q,
            &mut self.rho_plus,
            &mut self.rho_minus,
            &mut self.r_plus,
            &mut self.r_minus,
        );
        self.rho_plus[..q.len()]
            .iter()
            .zip(&self.rho_minus)
            .map(|(p, m)| p / m)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Nodes attaining the critical ratio, and the gap to the next-best ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// `A_n(Q)` for `n = 1..=N` (entry `n - 1`), as node indices.
    pub a: Vec<Vec<usize>>,
    /// `ν(Q) = Σ |A_n(Q)|`.
    pub nu: usize,
    /// Deepest level with a non-empty `A_n(Q)`.
    pub k_q: Option<usize>,
    pub rho: f64,
    pub rho_tilde: f64,
    /// `η(Q) = ρ̃(Q) - ρ(Q)`.
    pub eta: f64,
    /// Relative tolerance used for every equality test.
    pub tol: f64,
}

/// `A_n` collects nodes with `|ρ⁺ - (1 - λ_c) ρ⁻| ≤ tol·ρ⁻`. `ρ̃` is the
/// smallest ratio among nodes whose ratio differs from `ρ(Q)` by more than
/// `tol`, or `ρ(Q)` itself when no such node exists.
pub fn diagnostics(tables: &RhoTables, lambda_c: f64, tol: f64) -> Diagnostics {
    let n = tables.horizon;
    let rho = tables.score();
    let mut a = vec![Vec::new(); n];
    let mut rho_tilde = f64::INFINITY;
    for i in 0..tables.interior() {
        let (level, node) = locate(i);
        let (p, m) = (tables.rho_plus[i], tables.rho_minus[i]);
        if (p - (1.0 - lambda_c) * m).abs() <= tol * m {
            a[level - 1].push(node);
        }
        let ratio = p / m;
        if (ratio - rho).abs() > tol {
            rho_tilde = rho_tilde.min(ratio);
        }
    }
    if rho_tilde == f64::INFINITY {
        rho_tilde = rho;
    }
    let nu = a.iter().map(Vec::len).sum();
    let k_q = a.iter().rposition(|s| !s.is_empty()).map(|i| i + 1);
    Diagnostics {
        a,
        nu,
        k_q,
        rho,
        rho_tilde,
        eta: rho_tilde - rho,
        tol,
    }
}

/// Exact rational evaluation of the recursion, for checking statements whose
/// hypotheses are exact equalities.
pub mod exact {
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::{One, Zero};

    use super::backward;
    use crate::tree::node_count;

    #[derive(Debug, Clone, PartialEq)]
    pub struct ExactTables {
        pub rho_plus: Vec<BigRational>,
        pub rho_minus: Vec<BigRational>,
        pub r_plus: Vec<BigRational>,
        pub r_minus: Vec<BigRational>,
    }

    pub fn ratio(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    /// Heap-ordered inputs of length `2^N - 1`.
    pub fn compute(alpha: &[BigRational], beta: &[BigRational], q: &[BigRational]) -> ExactTables {
        let interior = q.len();
        assert_eq!(alpha.len(), interior);
        assert_eq!(beta.len(), interior);
        let horizon = (interior + 1).trailing_zeros() as usize;
        assert_eq!(node_count(horizon), interior, "coordinate count must be 2^N - 1");
        let mut t = ExactTables {
            rho_plus: vec![BigRational::one(); node_count(horizon + 1)],
            rho_minus: vec![BigRational::one(); node_count(horizon + 1)],
            r_plus: vec![BigRational::zero(); interior],
            r_minus: vec![BigRational::zero(); interior],
        };
        backward(
            alpha,
            beta,
            q,
            &mut t.rho_plus,
            &mut t.rho_minus,
            &mut t.r_plus,
            &mut t.r_minus,
        );
        t
    }
}
