use thiserror::Error;

use crate::tree::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A per-level array has the wrong number of entries.
    #[error("level {level}: expected {expected} entries, found {found}")]
    Shape {
        level: usize,
        expected: usize,
        found: usize,
    },

    #[error("horizon N={0} is outside the supported range 1..={max}", max = crate::tree::MAX_DEPTH)]
    Horizon(usize),

    #[error("{0}")]
    Domain(String),

    #[error("market violates {} node constraint(s); first: {}", .0.len(), .0[0])]
    InvalidMarket(Vec<Violation>),

    #[error("frictionless market admits arbitrage; Q0 undefined")]
    FrictionlessArbitrage,

    #[error("grid of {count} measures exceeds the cap of {cap}")]
    GridCap { count: f64, cap: u64 },

    #[error("measure not equivalent to P: coordinate at level {level}, node {node} is {value}")]
    NotEquivalent { level: usize, node: usize, value: f64 },

    #[error("no lambda-CPS inducible by this measure at this lambda: gap {gap:e} at level {level}, node {node}")]
    NoCps { level: usize, node: usize, gap: f64 },

    #[error("horizon N={n} exceeds the LP cap of {cap}")]
    LpCap { n: usize, cap: usize },

    #[error("transaction cost {0} outside [0, 1)")]
    LambdaRange(f64),

    #[error("invalid sweep range: {0}")]
    Sweep(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
