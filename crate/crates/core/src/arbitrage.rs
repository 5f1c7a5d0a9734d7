//! Arbitrage detection by linear programming.
//!
//! A strategy buys at the ask `S` and sells at the bid `(1 - λ) S` at every
//! non-terminal node, starting from zero cash and zero shares. At maturity
//! long positions are sold at the bid and shorts are covered at the ask.
//! An arbitrage is a strategy whose terminal value is nonnegative on every
//! path and positive on some path; scaling makes that the same as
//! `V ≥ 0, Σ V = 1`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::measure::locate;
use crate::simplex::{solve, LinearProgram, LpOutcome, SimplexOptions};
use crate::solver::LambdaCReport;
use crate::tree::{node_count, MarketTree, Move, NodePath};

pub const DEFAULT_LP_CAP: usize = 5;
pub const DEFAULT_FTAP_MARGIN: f64 = 1e-3;

/// Share purchases and sales at every node of depth `0..N`, heap-ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    horizon: usize,
    buy: Vec<f64>,
    sell: Vec<f64>,
}

impl Strategy {
    pub fn new(horizon: usize, buy: Vec<f64>, sell: Vec<f64>) -> Result<Self> {
        let len = node_count(horizon);
        for (name, v) in [("buy", &buy), ("sell", &sell)] {
            if v.len() != len {
                return Err(Error::Shape {
                    level: 0,
                    expected: len,
                    found: v.len(),
                });
            }
            if let Some(x) = v.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
                return Err(Error::Domain(format!("{name} quantity {x} is not a nonnegative number")));
            }
        }
        Ok(Self { horizon, buy, sell })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn buy(&self) -> &[f64] {
        &self.buy
    }

    pub fn sell(&self) -> &[f64] {
        &self.sell
    }

    /// Position held after trading at each node.
    pub fn holdings(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.buy.len()];
        for i in 0..h.len() {
            let before = if i == 0 { 0.0 } else { h[(i - 1) / 2] };
            h[i] = before + self.buy[i] - self.sell[i];
        }
        h
    }

    /// Cash held after trading at each node.
    pub fn cash(&self, tree: &MarketTree, lambda: f64) -> Vec<f64> {
        let spot = tree.spot_prices();
        let mut c = vec![0.0; self.buy.len()];
        for i in 0..c.len() {
            let before = if i == 0 { 0.0 } else { c[(i - 1) / 2] };
            c[i] = before - spot[i] * self.buy[i] + (1.0 - lambda) * spot[i] * self.sell[i];
        }
        c
    }

    /// CSV dump: `level,node_index,buy,sell,holding,cash`, with holding and
    /// cash taken after the node's trades.
    pub fn write_csv<W: Write>(&self, tree: &MarketTree, lambda: f64, mut w: W) -> io::Result<()> {
        writeln!(w, "level,node_index,buy,sell,holding,cash")?;
        let (h, c) = (self.holdings(), self.cash(tree, lambda));
        for i in 0..self.buy.len() {
            let (n, node) = locate(i);
            writeln!(
                w,
                "{},{node},{},{},{},{}",
                n - 1,
                fmt_num(self.buy[i]),
                fmt_num(self.sell[i]),
                fmt_num(h[i]),
                fmt_num(c[i])
            )?;
        }
        Ok(())
    }
}

/// Terminal liquidation value on each path, leaves in index order. Walks
/// every path from the root on its own rather than sharing the LP's layout.
pub fn simulate(tree: &MarketTree, lambda: f64, strategy: &Strategy) -> Result<Vec<f64>> {
    let n = tree.horizon();
    if strategy.horizon != n {
        return Err(Error::Domain(format!(
            "strategy horizon {} does not match tree horizon {n}",
            strategy.horizon
        )));
    }
    let mut values = Vec::with_capacity(1 << n);
    for leaf in 0..1usize << n {
        let path = NodePath::from_index(n, leaf)?;
        let mut node = NodePath::root();
        let (mut cash, mut shares) = (0.0, 0.0);
        let mut pos = 0usize;
        for step in 0..=n {
            let price = tree.spot_price(&node)?;
            if step == n {
                cash += if shares >= 0.0 {
                    (1.0 - lambda) * price * shares
                } else {
                    price * shares
                };
                break;
            }
            let (b, s) = (strategy.buy[pos], strategy.sell[pos]);
            cash += -price * b + (1.0 - lambda) * price * s;
            shares += b - s;
            let m = path.moves()[step];
            pos = match m {
                Move::Up => 2 * pos + 2,
                Move::Down => 2 * pos + 1,
            };
            node = node.child(m);
        }
        values.push(cash);
    }
    Ok(values)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::LambdaRange(lambda))
    }
}

/// Searches for an arbitrage at cost `λ`. The witness is the one with the
/// smallest total trading volume, rescaled so its simulated terminal values
/// sum to one.
pub fn find_arbitrage(tree: &MarketTree, lambda: f64, cap: usize) -> Result<Option<Strategy>> {
    check_lambda(lambda)?;
    let n = tree.horizon();
    if n > cap {
        return Err(Error::LpCap { n, cap });
    }

    // Columns: buy/sell at every node of depth 0..=N (the depth-N pair is
    // the liquidation trade), then one slack per leaf carrying V(ω).
    let nodes = node_count(n + 1);
    let interior = node_count(n);
    let leaves = 1usize << n;
    let cols = 2 * nodes + leaves;
    let spot = tree.spot_prices();

    let mut a = Vec::with_capacity(2 * leaves + 1);
    let mut b = Vec::with_capacity(2 * leaves + 1);
    for leaf in 0..leaves {
        let mut flat_hold = vec![0.0; cols];
        let mut flat_value = vec![0.0; cols];
        let mut i = interior + leaf;
        loop {
            flat_hold[2 * i] = 1.0;
            flat_hold[2 * i + 1] = -1.0;
            flat_value[2 * i] = -spot[i];
            flat_value[2 * i + 1] = (1.0 - lambda) * spot[i];
            if i == 0 {
                break;
            }
            i = (i - 1) / 2;
        }
        flat_value[2 * nodes + leaf] = -1.0;
        a.push(flat_hold);
        b.push(0.0);
        a.push(flat_value);
        b.push(0.0);
    }
    let mut norm = vec![0.0; cols];
    norm[2 * nodes..].iter_mut().for_each(|x| *x = 1.0);
    a.push(norm);
    b.push(1.0);

    let mut c = vec![1.0; cols];
    c[2 * nodes..].iter_mut().for_each(|x| *x = 0.0);
    let lp = LinearProgram {
        c,
        a,
        b,
        upper: vec![f64::INFINITY; cols],
    };

    let x = match solve(&lp, &SimplexOptions::default()) {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible => return Ok(None),
        LpOutcome::Unbounded => {
            return Err(Error::Domain("arbitrage LP reported an unbounded volume".into()))
        }
        LpOutcome::IterationLimit => {
            return Err(Error::Domain("arbitrage LP hit its iteration limit".into()))
        }
        LpOutcome::Singular => {
            return Err(Error::Domain("arbitrage LP reached a singular basis".into()))
        }
    };

    let buy: Vec<f64> = (0..interior).map(|i| x[2 * i].max(0.0)).collect();
    let sell: Vec<f64> = (0..interior).map(|i| x[2 * i + 1].max(0.0)).collect();
    let strategy = Strategy::new(n, buy, sell)?;
    let total: f64 = simulate(tree, lambda, &strategy)?.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Domain(format!(
            "arbitrage LP returned a witness with total value {total}"
        )));
    }
    let scale = 1.0 / total;
    Ok(Some(Strategy {
        horizon: n,
        buy: strategy.buy.iter().map(|v| v * scale).collect(),
        sell: strategy.sell.iter().map(|v| v * scale).collect(),
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    /// `λ` is too close to an uncertified `λ_c` to predict the outcome.
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FtapCheck {
    pub verdict: Verdict,
    pub lambda: f64,
    pub lambda_c: f64,
    pub expected_arbitrage: Option<bool>,
    pub arbitrage_found: Option<bool>,
}

/// Compares the LP against the prediction from `λ_c`: arbitrage exists
/// exactly when `λ < λ_c`, and at `λ = λ_c` exactly when the frictionless
/// market already admits arbitrage.
pub fn ftap_cross_check(
    tree: &MarketTree,
    lambda: f64,
    report: &LambdaCReport,
    margin: f64,
    cap: usize,
) -> Result<FtapCheck> {
    check_lambda(lambda)?;
    let lambda_c = report.lambda_c;
    let certified = report.is_certified();
    let expected = if certified && lambda == lambda_c {
        Some(!tree.frictionless_no_arbitrage())
    } else if !certified && (lambda - lambda_c).abs() <= margin {
        None
    } else {
        Some(lambda < lambda_c)
    };
    let Some(expected) = expected else {
        return Ok(FtapCheck {
            verdict: Verdict::Inconclusive,
            lambda,
            lambda_c,
            expected_arbitrage: None,
            arbitrage_found: None,
        });
    };
    let found = find_arbitrage(tree, lambda, cap)?.is_some();
    Ok(FtapCheck {
        verdict: if found == expected {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        },
        lambda,
        lambda_c,
        expected_arbitrage: Some(expected),
        arbitrage_found: Some(found),
    })
}
