//! Consistent price systems: forward construction of a shadow price `S̃`
//! from a measure whose slack `Δ^λ` is nonnegative, and a checker for
//! arbitrary candidates.
//!
//! Each node carries the slack `d = ρ⁺ - S̃/S`. Keeping `d` inside
//! `[0, Δ^λ]` is the same as keeping `S̃` inside the effective bid-ask
//! interval `[(1 - λ) ρ⁻ S, ρ⁺ S]`, so the construction picks `d` for the
//! up-child of each node and lets the martingale identity fix the down-child.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::measure::{locate, Measure};
use crate::rho::{compute_rho, RhoTables};
use crate::tree::{level_offset, node_count, MarketTree};

/// Slack below which `Δ^λ` counts as negative.
pub const DEFAULT_DELTA_TOL: f64 = 1e-12;

/// Widening applied to each feasible interval before testing it for emptiness.
const INTERVAL_SLACK: f64 = 1e-12;

/// Smallest admissible `1 - q` in the martingale step.
const ONE_MINUS_Q_FLOOR: f64 = 1e-15;

/// Which point of each feasible interval the construction takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    #[default]
    Midpoint,
    /// Lower endpoint: the lowest `S̃₀`, and the smallest slack at each up-child.
    Left,
    Right,
}

impl Selection {
    fn pick(self, lo: f64, hi: f64) -> f64 {
        match self {
            Selection::Midpoint => 0.5 * (lo + hi),
            Selection::Left => lo,
            Selection::Right => hi,
        }
    }

    /// The same choice seen from a coordinate that runs the other way.
    fn mirrored(self) -> Self {
        match self {
            Selection::Midpoint => Selection::Midpoint,
            Selection::Left => Selection::Right,
            Selection::Right => Selection::Left,
        }
    }
}

impl std::str::FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(Selection::Midpoint),
            "left" => Ok(Selection::Left),
            "right" => Ok(Selection::Right),
            other => Err(Error::Domain(format!(
                "unknown selection '{other}' (expected midpoint, left or right)"
            ))),
        }
    }
}

/// `S̃` and the slack `d` at every node of depth `0..=N`, heap-ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct CpsProcess {
    horizon: usize,
    s_tilde: Vec<f64>,
    d: Vec<f64>,
}

impl CpsProcess {
    /// Wraps a candidate price process, deriving the slack from `q`.
    pub fn from_s_tilde(tree: &MarketTree, q: &Measure, s_tilde: Vec<f64>) -> Result<Self> {
        let n = tree.horizon();
        if s_tilde.len() != node_count(n + 1) {
            return Err(Error::Shape {
                level: 0,
                expected: node_count(n + 1),
                found: s_tilde.len(),
            });
        }
        let tables = compute_rho(tree, q)?;
        let spot = tree.spot_prices();
        let d = (0..s_tilde.len())
            .map(|i| tables.rho_plus_flat()[i] - s_tilde[i] / spot[i])
            .collect();
        Ok(Self {
            horizon: n,
            s_tilde,
            d,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// `S̃_n` at `node` of depth `n` (`0..=N`).
    pub fn s_tilde(&self, n: usize, node: usize) -> f64 {
        self.s_tilde[level_offset(n) + node]
    }

    /// `d_{n+1}` at `node` of depth `n`.
    pub fn d(&self, n: usize, node: usize) -> f64 {
        self.d[level_offset(n) + node]
    }

    pub fn s_tilde_flat(&self) -> &[f64] {
        &self.s_tilde
    }

    pub fn d_flat(&self) -> &[f64] {
        &self.d
    }

    /// CSV dump: `level,node_index,spot,s_tilde,ratio`.
    pub fn write_csv<W: Write>(&self, tree: &MarketTree, mut w: W) -> io::Result<()> {
        writeln!(w, "level,node_index,spot,s_tilde,ratio")?;
        let spot = tree.spot_prices();
        for (i, (&s, &st)) in spot.iter().zip(&self.s_tilde).enumerate() {
            let (level, node) = depth_and_node(i);
            writeln!(w, "{level},{node},{},{},{}", fmt_num(s), fmt_num(st), fmt_num(st / s))?;
        }
        Ok(())
    }
}

/// `(depth, node)` of a flat position in a tree that includes the leaves.
fn depth_and_node(flat: usize) -> (usize, usize) {
    let (n, node) = locate(flat);
    (n - 1, node)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::LambdaRange(lambda))
    }
}

fn check_equivalent(q: &Measure) -> Result<()> {
    match q.first_boundary() {
        Some((level, node, value)) => Err(Error::NotEquivalent { level, node, value }),
        None => Ok(()),
    }
}

pub fn construct_cps(
    tree: &MarketTree,
    q: &Measure,
    lambda: f64,
    selection: Selection,
    tol: f64,
) -> Result<CpsProcess> {
    check_lambda(lambda)?;
    check_equivalent(q)?;
    let tables = compute_rho(tree, q)?;
    let n = tree.horizon();
    let interior = node_count(n);
    let total = node_count(n + 1);

    let delta: Vec<f64> = (0..total).map(|i| tables.delta_flat(lambda, i)).collect();
    if let Some(i) = (0..interior).find(|&i| delta[i] < -tol) {
        let (level, node) = locate(i);
        return Err(Error::NoCps {
            level,
            node,
            gap: delta[i],
        });
    }
    let delta: Vec<f64> = delta.into_iter().map(|x| x.max(0.0)).collect();

    let spot = tree.spot_prices();
    let rho_plus = tables.rho_plus_flat();
    let r_plus = tables.r_plus_flat();
    let (alpha, beta, qs) = (tree.alpha_flat(), tree.beta_flat(), q.coords());

    // Everything is built on the slack scale `d = ρ⁺ - S̃/S`, which keeps
    // the martingale identity linear in the slacks.
    let mut s_tilde = vec![0.0; total];
    let mut d = vec![0.0; total];
    let s0 = tree.s0();
    d[0] = selection.mirrored().pick(0.0, delta[0]);
    s_tilde[0] = (rho_plus[0] - d[0]) * s0;

    for i in 0..interior {
        let (dn, up) = (2 * i + 1, 2 * i + 2);
        let qi = qs[i];
        let one_minus_q = 1.0 - qi;
        if one_minus_q < ONE_MINUS_Q_FLOOR {
            let (level, node) = locate(i);
            return Err(Error::NotEquivalent { level, node, value: qi });
        }
        // wu d_up + wd d_dn = R with d_up in [0, Δ_up] and d_dn in [0, Δ_dn]
        let (wu, wd) = (qi * alpha[i], one_minus_q * beta[i]);
        let capacity = wu * delta[up] + wd * delta[dn];
        let total_slack = r_plus[i] - rho_plus[i] + d[i];
        let gap = total_slack.min(capacity - total_slack) / wu;
        if gap < -INTERVAL_SLACK {
            let (level, node) = locate(i);
            return Err(Error::NoCps { level, node, gap });
        }
        let total_slack = total_slack.clamp(0.0, capacity);
        // Pick the lighter child's slack and solve for the heavier one, so
        // round-off is divided by the larger weight.
        let (d_up, d_dn) = if wu >= wd {
            let lo = ((total_slack - wu * delta[up]) / wd).max(0.0);
            let hi = (total_slack / wd).min(delta[dn]).max(lo);
            let d_dn = selection.mirrored().pick(lo, hi);
            (((total_slack - wd * d_dn) / wu).clamp(0.0, delta[up]), d_dn)
        } else {
            let lo = ((total_slack - wd * delta[dn]) / wu).max(0.0);
            let hi = (total_slack / wu).min(delta[up]).max(lo);
            let d_up = selection.pick(lo, hi);
            (d_up, ((total_slack - wu * d_up) / wd).clamp(0.0, delta[dn]))
        };
        d[up] = d_up;
        d[dn] = d_dn;
        s_tilde[up] = (rho_plus[up] - d_up) * spot[up];
        s_tilde[dn] = (rho_plus[dn] - d_dn) * spot[dn];
    }

    Ok(CpsProcess {
        horizon: n,
        s_tilde,
        d,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpsTolerance {
    /// Absolute tolerance on `S̃/S` for the bid-ask, effective and slack bounds.
    pub bounds: f64,
    /// Relative tolerance on the one-step martingale identity.
    pub martingale: f64,
}

impl Default for CpsTolerance {
    fn default() -> Self {
        Self {
            bounds: 1e-12,
            martingale: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpsViolationKind {
    /// Outside `[(1 - λ) S, S]`.
    BidAsk,
    /// Outside `[(1 - λ) ρ⁻ S, ρ⁺ S]`.
    EffectiveBound,
    Martingale,
    /// Stored slack outside `[0, Δ^λ]` or inconsistent with `S̃`.
    Slack,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpsViolation {
    /// Depth of the node, `0..=N`.
    pub level: usize,
    pub node: usize,
    pub kind: CpsViolationKind,
    /// Size of the breach.
    pub excess: f64,
}

impl fmt::Display for CpsViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} at level {}, node {} (excess {:e})",
            self.kind, self.level, self.node, self.excess
        )
    }
}

/// Node-wise check of a candidate `(q, S̃)` pair; empty iff everything holds.
pub fn verify_cps(
    tree: &MarketTree,
    q: &Measure,
    cps: &CpsProcess,
    lambda: f64,
    tol: CpsTolerance,
) -> Result<Vec<CpsViolation>> {
    check_lambda(lambda)?;
    if cps.horizon != tree.horizon() {
        return Err(Error::Domain(format!(
            "price process horizon {} does not match tree horizon {}",
            cps.horizon,
            tree.horizon()
        )));
    }
    let tables: RhoTables = compute_rho(tree, q)?;
    let spot = tree.spot_prices();
    let mut out = Vec::new();
    let mut flag = |i: usize, kind, excess: f64| {
        if excess > 0.0 {
            let (level, node) = depth_and_node(i);
            out.push(CpsViolation {
                level,
                node,
                kind,
                excess,
            });
        }
    };

    for i in 0..spot.len() {
        let ratio = cps.s_tilde[i] / spot[i];
        let excess = |lo: f64, hi: f64| (lo - ratio).max(ratio - hi) - tol.bounds;
        flag(i, CpsViolationKind::BidAsk, excess(1.0 - lambda, 1.0));
        let (rp, rm) = (tables.rho_plus_flat()[i], tables.rho_minus_flat()[i]);
        flag(i, CpsViolationKind::EffectiveBound, excess((1.0 - lambda) * rm, rp));

        let d = cps.d[i];
        let delta = tables.delta_flat(lambda, i);
        let range = (-d).max(d - delta);
        let drift = (d - (rp - ratio)).abs();
        flag(i, CpsViolationKind::Slack, range.max(drift) - tol.bounds);
    }

    for (i, &qi) in q.coords().iter().enumerate() {
        let (dn, up) = (2 * i + 1, 2 * i + 2);
        let expected = qi * cps.s_tilde[up] + (1.0 - qi) * cps.s_tilde[dn];
        let scale = cps.s_tilde[i].abs().max(f64::MIN_POSITIVE);
        flag(
            i,
            CpsViolationKind::Martingale,
            (expected - cps.s_tilde[i]).abs() / scale - tol.martingale,
        );
    }

    Ok(out)
}
