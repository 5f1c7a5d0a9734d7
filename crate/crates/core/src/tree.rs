//! Binary market trees.
//!
//! Nodes are kept in heap order: the node reached after `k` moves with
//! path index `j` sits at flat position `2^k - 1 + j`, so its down child is
//! `2i + 1` and its up child `2i + 2`. The path index reads the moves
//! root-first as binary digits (most significant digit = first move,
//! `U` = 1), which makes the children of index `j` at depth `k` the indices
//! `2j` and `2j + 1` at depth `k + 1`.
//!
//! All quantities are expressed in units of the bond; interest rates are
//! folded into the gross returns when a tree is built from a drift
//! parametrization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bounds::SemiHomogeneousSpec;
use crate::error::{Error, Result};
use crate::measure::Measure;

/// Deepest tree the crate will materialize (2^20 - 1 interior nodes).
pub const MAX_DEPTH: usize = 20;

#[inline]
pub(crate) fn level_offset(depth: usize) -> usize {
    (1usize << depth) - 1
}

/// Number of interior nodes (one coordinate per one-step sub-market).
#[inline]
pub fn node_count(horizon: usize) -> usize {
    (1usize << horizon) - 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    Up,
    Down,
}

/// A node of the tree, identified by the moves leading to it from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct NodePath {
    moves: Vec<Move>,
}

impl NodePath {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn new(moves: Vec<Move>) -> Self {
        Self { moves }
    }

    /// Rebuilds the path from its depth and canonical index.
    pub fn from_index(level: usize, index: usize) -> Result<Self> {
        if level >= usize::BITS as usize || index >> level != 0 {
            return Err(Error::Domain(format!(
                "node index {index} out of range for level {level}"
            )));
        }
        let moves = (0..level)
            .map(|i| {
                if (index >> (level - 1 - i)) & 1 == 1 {
                    Move::Up
                } else {
                    Move::Down
                }
            })
            .collect();
        Ok(Self { moves })
    }

    pub fn level(&self) -> usize {
        self.moves.len()
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn index(&self) -> usize {
        self.moves
            .iter()
            .fold(0, |acc, m| (acc << 1) | usize::from(*m == Move::Up))
    }

    pub fn child(&self, m: Move) -> Self {
        let mut moves = self.moves.clone();
        moves.push(m);
        Self { moves }
    }

    /// Position in the heap-ordered flat arrays such as `spot_prices`.
    pub fn flat(&self) -> usize {
        level_offset(self.level()) + self.index()
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.moves.is_empty() {
            return f.write_str("root");
        }
        for m in &self.moves {
            f.write_str(if *m == Move::Up { "U" } else { "D" })?;
        }
        Ok(())
    }
}

impl FromStr for NodePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("root") {
            return Ok(Self::root());
        }
        s.chars()
            .map(|c| match c {
                'U' | 'u' => Ok(Move::Up),
                'D' | 'd' => Ok(Move::Down),
                other => Err(Error::Domain(format!("invalid move '{other}' in node path"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NonPositiveSpot,
    NonFinite,
    NonPositiveBeta,
    /// β ≥ α
    Ordering,
}

/// A node at which the market parameters break a model assumption.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Step `n` in 1..=N (0 for the initial price).
    pub level: usize,
    pub node: usize,
    pub kind: ViolationKind,
    pub alpha: f64,
    pub beta: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::NonPositiveSpot => write!(f, "initial price s0={} is not positive", self.alpha),
            ViolationKind::NonFinite => write!(
                f,
                "level {}, node {}: non-finite parameter (alpha={}, beta={})",
                self.level, self.node, self.alpha, self.beta
            ),
            ViolationKind::NonPositiveBeta => write!(
                f,
                "level {}, node {}: beta={} is not strictly positive",
                self.level, self.node, self.beta
            ),
            ViolationKind::Ordering => write!(
                f,
                "level {}, node {}: beta >= alpha (beta={}, alpha={})",
                self.level, self.node, self.beta, self.alpha
            ),
        }
    }
}

/// Gross up/down returns on a depth-N binary tree, plus the initial price.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketTree {
    horizon: usize,
    s0: f64,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

fn flatten_levels(levels: &[Vec<f64>]) -> Result<Vec<f64>> {
    let mut flat = Vec::with_capacity(node_count(levels.len()));
    for (i, row) in levels.iter().enumerate() {
        let expected = 1usize << i;
        if row.len() != expected {
            return Err(Error::Shape {
                level: i + 1,
                expected,
                found: row.len(),
            });
        }
        flat.extend_from_slice(row);
    }
    Ok(flat)
}

pub(crate) fn split_levels(horizon: usize, flat: &[f64]) -> Vec<Vec<f64>> {
    (0..horizon)
        .map(|k| flat[level_offset(k)..level_offset(k + 1)].to_vec())
        .collect()
}

pub(crate) fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 || horizon > MAX_DEPTH {
        Err(Error::Horizon(horizon))
    } else {
        Ok(())
    }
}

impl MarketTree {
    /// Builds a tree from per-level arrays (`alpha[n-1]` holds the 2^(n-1)
    /// up-returns of step n). Only shapes are checked; see [`validate`].
    ///
    /// [`validate`]: MarketTree::validate
    pub fn from_levels(s0: f64, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<Self> {
        let horizon = alpha.len();
        check_horizon(horizon)?;
        if beta.len() != horizon {
            return Err(Error::Domain(format!(
                "alpha has {} levels but beta has {}",
                horizon,
                beta.len()
            )));
        }
        let alpha = flatten_levels(&alpha)?;
        let beta = flatten_levels(&beta)?;
        Ok(Self {
            horizon,
            s0,
            alpha,
            beta,
        })
    }

    /// Shape-checked and validated construction.
    pub fn new(s0: f64, alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_levels(s0, alpha, beta)?.validated()
    }

    pub fn homogeneous(horizon: usize, s0: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::semi_homogeneous(s0, &vec![alpha; horizon], &vec![beta; horizon])
    }

    pub fn semi_homogeneous(s0: f64, alpha: &[f64], beta: &[f64]) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::Domain(format!(
                "alpha has {} steps but beta has {}",
                alpha.len(),
                beta.len()
            )));
        }
        check_horizon(alpha.len())?;
        let expand = |xs: &[f64]| -> Vec<Vec<f64>> {
            xs.iter()
                .enumerate()
                .map(|(i, &x)| vec![x; 1 << i])
                .collect()
        };
        Self::new(s0, expand(alpha), expand(beta))
    }

    pub(crate) fn validated(self) -> Result<Self> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidMarket(violations))
        }
    }

    /// Every node violating `0 < β < α`, plus a non-positive initial price.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.s0 > 0.0) || !self.s0.is_finite() {
            out.push(Violation {
                level: 0,
                node: 0,
                kind: ViolationKind::NonPositiveSpot,
                alpha: self.s0,
                beta: self.s0,
            });
        }
        for n in 1..=self.horizon {
            for (node, (&a, &b)) in self
                .alpha_level(n)
                .iter()
                .zip(self.beta_level(n))
                .enumerate()
            {
                let kind = if !a.is_finite() || !b.is_finite() {
                    Some(ViolationKind::NonFinite)
                } else if b <= 0.0 {
                    Some(ViolationKind::NonPositiveBeta)
                } else if b >= a {
                    Some(ViolationKind::Ordering)
                } else {
                    None
                };
                if let Some(kind) = kind {
                    out.push(Violation {
                        level: n,
                        node,
                        kind,
                        alpha: a,
                        beta: b,
                    });
                }
            }
        }
        out
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    /// Up-returns of step `n` (1-based), one per node at depth `n - 1`.
    pub fn alpha_level(&self, n: usize) -> &[f64] {
        &self.alpha[level_offset(n - 1)..level_offset(n)]
    }

    pub fn beta_level(&self, n: usize) -> &[f64] {
        &self.beta[level_offset(n - 1)..level_offset(n)]
    }

    pub fn alpha(&self, n: usize, node: usize) -> f64 {
        self.alpha_level(n)[node]
    }

    pub fn beta(&self, n: usize, node: usize) -> f64 {
        self.beta_level(n)[node]
    }

    pub(crate) fn alpha_flat(&self) -> &[f64] {
        &self.alpha
    }

    pub(crate) fn beta_flat(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_levels(&self) -> Vec<Vec<f64>> {
        split_levels(self.horizon, &self.alpha)
    }

    pub fn beta_levels(&self) -> Vec<Vec<f64>> {
        split_levels(self.horizon, &self.beta)
    }

    pub fn spot_price(&self, node: &NodePath) -> Result<f64> {
        if node.level() > self.horizon {
            return Err(Error::Domain(format!(
                "node level {} exceeds horizon {}",
                node.level(),
                self.horizon
            )));
        }
        let mut flat = 0;
        let mut price = self.s0;
        for m in node.moves() {
            match m {
                Move::Up => {
                    price *= self.alpha[flat];
                    flat = 2 * flat + 2;
                }
                Move::Down => {
                    price *= self.beta[flat];
                    flat = 2 * flat + 1;
                }
            }
        }
        Ok(price)
    }

    /// Spot prices at every node of depth 0..=N, heap-ordered.
    pub fn spot_prices(&self) -> Vec<f64> {
        let mut s = vec![0.0; node_count(self.horizon + 1)];
        s[0] = self.s0;
        for i in 0..node_count(self.horizon) {
            s[2 * i + 1] = s[i] * self.beta[i];
            s[2 * i + 2] = s[i] * self.alpha[i];
        }
        s
    }

    /// `β < 1 < α` at every node, tested exactly.
    pub fn frictionless_no_arbitrage(&self) -> bool {
        self.alpha
            .iter()
            .zip(&self.beta)
            .all(|(&a, &b)| b < 1.0 && 1.0 < a)
    }

    /// The unique equivalent martingale measure of the frictionless market.
    pub fn emm_q0(&self) -> Result<Measure> {
        if !self.frictionless_no_arbitrage() {
            return Err(Error::FrictionlessArbitrage);
        }
        let q = self
            .alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| (1.0 - b) / (a - b))
            .collect();
        Measure::from_flat(self.horizon, q)
    }

    /// The node-wise best one-step measure: `q = 1` where `α ≤ 1`, the
    /// martingale weight where `β < 1 < α`, `q = 0` where `β ≥ 1`.
    /// On semi-homogeneous markets this is the measure `Q*`.
    pub fn one_step_measure(&self) -> Measure {
        let q = self
            .alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| {
                if a <= 1.0 {
                    1.0
                } else if b < 1.0 {
                    (1.0 - b) / (a - b)
                } else {
                    0.0
                }
            })
            .collect();
        Measure::from_flat(self.horizon, q).expect("one-step weights lie in [0, 1]")
    }

    /// Step-wise parameters when the tree is space-homogeneous (exact
    /// equality within each level).
    pub fn as_semi_homogeneous(&self) -> Option<SemiHomogeneousSpec> {
        let mut alpha = Vec::with_capacity(self.horizon);
        let mut beta = Vec::with_capacity(self.horizon);
        for n in 1..=self.horizon {
            let (a, b) = (self.alpha_level(n), self.beta_level(n));
            if a.iter().any(|&x| x != a[0]) || b.iter().any(|&x| x != b[0]) {
                return None;
            }
            alpha.push(a[0]);
            beta.push(b[0]);
        }
        SemiHomogeneousSpec::new(alpha, beta).ok()
    }

    /// Reads the tree back as a drift parametrization with zero drift and
    /// zero rates: `u = α - 1`, `d = β - 1`, `x0 = s0 - 1`.
    pub fn to_drift(&self) -> DriftParametrization {
        let shift = |levels: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            levels
                .into_iter()
                .map(|row| row.into_iter().map(|x| x - 1.0).collect())
                .collect()
        };
        DriftParametrization {
            horizon: self.horizon,
            x0: self.s0 - 1.0,
            a: vec![0.0; self.horizon + 1],
            u: shift(self.alpha_levels()),
            d: shift(self.beta_levels()),
            r: None,
        }
    }
}

/// `S_n = (a_n + 1 + X_n) S_{n-1}`, `S_0 = 1 + a_0 + x_0`, with optional
/// per-step bond rates `r_1..r_N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftParametrization {
    #[serde(rename = "N")]
    pub horizon: usize,
    pub x0: f64,
    /// Drifts `a_0..a_N`.
    pub a: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
}

impl DriftParametrization {
    pub fn to_tree(&self) -> Result<MarketTree> {
        from_drift(self)
    }
}

/// `α_n(y) = (1 + a_n + u_n(y)) / (1 + r_n)`, likewise for β; `s0 = 1 + a_0 + x_0`.
pub fn from_drift(p: &DriftParametrization) -> Result<MarketTree> {
    let horizon = p.horizon;
    check_horizon(horizon)?;
    if p.a.len() != horizon + 1 {
        return Err(Error::Shape {
            level: 0,
            expected: horizon + 1,
            found: p.a.len(),
        });
    }
    if p.u.len() != horizon || p.d.len() != horizon {
        return Err(Error::Domain(format!(
            "expected {horizon} levels of u and d, found {} and {}",
            p.u.len(),
            p.d.len()
        )));
    }
    let rates = match &p.r {
        Some(r) if r.len() != horizon => {
            return Err(Error::Shape {
                level: 0,
                expected: horizon,
                found: r.len(),
            })
        }
        Some(r) => r.clone(),
        None => vec![0.0; horizon],
    };
    if let Some((i, r)) = rates.iter().enumerate().find(|(_, r)| !(**r > -1.0)) {
        return Err(Error::Domain(format!(
            "interest rate r_{} = {r} must exceed -1",
            i + 1
        )));
    }

    let s0 = 1.0 + p.a[0] + p.x0;
    if !(s0 > 0.0) {
        return Err(Error::Domain(format!("initial price s0 = 1 + a_0 + x_0 = {s0} is not positive")));
    }
    let mut alpha = Vec::with_capacity(horizon);
    let mut beta = Vec::with_capacity(horizon);
    for n in 1..=horizon {
        let (u, d) = (&p.u[n - 1], &p.d[n - 1]);
        let expected = 1usize << (n - 1);
        for row in [u, d] {
            if row.len() != expected {
                return Err(Error::Shape {
                    level: n,
                    expected,
                    found: row.len(),
                });
            }
        }
        let growth = 1.0 + p.a[n];
        let disc = 1.0 + rates[n - 1];
        let mut a_row = Vec::with_capacity(expected);
        let mut b_row = Vec::with_capacity(expected);
        for (node, (&un, &dn)) in u.iter().zip(d).enumerate() {
            let a = (growth + un) / disc;
            let b = (growth + dn) / disc;
            if !(a > 0.0) || !(b > 0.0) {
                return Err(Error::Domain(format!(
                    "level {n}, node {node}: gross returns must be positive (alpha={a}, beta={b})"
                )));
            }
            if !(dn < un) {
                return Err(Error::Domain(format!(
                    "level {n}, node {node}: d={dn} must be below u={un}"
                )));
            }
            a_row.push(a);
            b_row.push(b);
        }
        alpha.push(a_row);
        beta.push(b_row);
    }
    MarketTree::new(s0, alpha, beta)
}
