//! JSON market configuration and `start:stop:count` cost ranges.
//!
//! ```json
//! {"mode": "node", "N": 2, "s0": 1.0,
//!  "alpha": [[1.2], [1.1, 1.3]], "beta": [[0.9], [0.8, 0.95]]}
//! {"mode": "semi", "N": 2, "s0": 1.0, "alpha": [0.9, 1.5], "beta": [0.5, 1.2]}
//! {"mode": "homogeneous", "N": 3, "s0": 1.0, "alpha": 1.2, "beta": 0.9}
//! {"mode": "drift", "N": 1, "x0": 0.0, "a": [0.0, 0.0], "u": [[0.2]], "d": [[-0.1]]}
//! ```
//!
//! In drift mode the initial price is `1 + a_0 + x_0`; an explicit `s0` is
//! accepted only if it agrees.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tree::{from_drift, DriftParametrization, MarketTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum MarketConfig {
    Node {
        #[serde(rename = "N")]
        horizon: usize,
        s0: f64,
        alpha: Vec<Vec<f64>>,
        beta: Vec<Vec<f64>>,
    },
    Semi {
        #[serde(rename = "N")]
        horizon: usize,
        s0: f64,
        alpha: Vec<f64>,
        beta: Vec<f64>,
    },
    Homogeneous {
        #[serde(rename = "N")]
        horizon: usize,
        s0: f64,
        alpha: f64,
        beta: f64,
    },
    Drift {
        #[serde(flatten)]
        params: DriftParametrization,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s0: Option<f64>,
    },
}

fn check_steps(horizon: usize, name: &str, found: usize) -> Result<()> {
    if found == horizon {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "N={horizon} but {name} has {found} levels"
        )))
    }
}

impl MarketConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn horizon(&self) -> usize {
        match self {
            MarketConfig::Node { horizon, .. }
            | MarketConfig::Semi { horizon, .. }
            | MarketConfig::Homogeneous { horizon, .. } => *horizon,
            MarketConfig::Drift { params, .. } => params.horizon,
        }
    }

    /// The tree with shapes checked but node constraints not yet enforced,
    /// so callers can list every violation.
    pub fn build_unchecked(&self) -> Result<MarketTree> {
        crate::tree::check_horizon(self.horizon())?;
        match self {
            MarketConfig::Node {
                horizon,
                s0,
                alpha,
                beta,
            } => {
                check_steps(*horizon, "alpha", alpha.len())?;
                check_steps(*horizon, "beta", beta.len())?;
                MarketTree::from_levels(*s0, alpha.clone(), beta.clone())
            }
            MarketConfig::Semi {
                horizon,
                s0,
                alpha,
                beta,
            } => {
                check_steps(*horizon, "alpha", alpha.len())?;
                check_steps(*horizon, "beta", beta.len())?;
                let expand = |xs: &[f64]| xs.iter().enumerate().map(|(i, &x)| vec![x; 1 << i]).collect();
                MarketTree::from_levels(*s0, expand(alpha), expand(beta))
            }
            MarketConfig::Homogeneous {
                horizon,
                s0,
                alpha,
                beta,
            } => {
                let levels = |x: f64| (0..*horizon).map(|i| vec![x; 1 << i]).collect();
                MarketTree::from_levels(*s0, levels(*alpha), levels(*beta))
            }
            MarketConfig::Drift { params, s0 } => {
                let tree = from_drift(params)?;
                if let Some(s0) = s0 {
                    if *s0 != tree.s0() {
                        return Err(Error::Domain(format!(
                            "s0 = {s0} conflicts with 1 + a_0 + x_0 = {}",
                            tree.s0()
                        )));
                    }
                }
                Ok(tree)
            }
        }
    }

    pub fn to_tree(&self) -> Result<MarketTree> {
        self.build_unchecked()?.validated()
    }
}

/// Most points a sweep may request.
pub const MAX_SWEEP_POINTS: usize = 1_000_000;

/// `count` evenly spaced costs from `start` to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepRange {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::Sweep(format!("count must be at least 2, got {count}")));
        }
        if count > MAX_SWEEP_POINTS {
            return Err(Error::Sweep(format!("count {count} exceeds {MAX_SWEEP_POINTS}")));
        }
        for v in [start, stop] {
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Sweep(format!("{v} is outside [0, 1)")));
            }
        }
        if start > stop {
            return Err(Error::Sweep(format!("start {start} exceeds stop {stop}")));
        }
        Ok(Self { start, stop, count })
    }

    pub fn values(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl FromStr for SweepRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(Error::Sweep(format!("expected start:stop:count, got '{s}'")));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Sweep(format!("'{t}' is not a number")))
        };
        let count = count
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::Sweep(format!("'{count}' is not a count")))?;
        Self::new(num(start)?, num(stop)?, count)
    }
}
