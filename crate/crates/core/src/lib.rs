//! Binary market trees with proportional transaction costs: the `ρ` score of
//! a measure, the critical cost `λ_c`, consistent price systems, and an LP
//! arbitrage oracle to cross-check them.

pub mod arbitrage;
pub mod bounds;
pub mod config;
pub mod cps;
pub mod error;
pub mod format;
pub mod measure;
pub mod optimize;
pub mod rho;
pub mod simplex;
pub mod solver;
pub mod tree;

pub use arbitrage::{find_arbitrage, ftap_cross_check, simulate, FtapCheck, Strategy, Verdict};
pub use bounds::{
    closed_form_lambda_c, gamma_ladder, lower_bound_lambda_star, one_step_lambda_c, q_star,
    upper_bound_semi_homogeneous, ClosedForm, ClosedFormCase, GammaLadder, SemiHomogeneousSpec,
};
pub use config::{MarketConfig, SweepRange};
pub use cps::{construct_cps, verify_cps, CpsProcess, CpsTolerance, CpsViolation, CpsViolationKind, Selection};
pub use error::{Error, Result};
pub use measure::{grid_measures, GridMeasures, Measure};
pub use rho::{compute_rho, delta, diagnostics, rho_score, Diagnostics, RhoEvaluator, RhoTables};
pub use solver::{
    brute_force_sup_rho, characterize_m_lambda_c, m_lambda_membership, solve_lambda_c, LambdaCReport,
    Membership, MembershipStatus, Method, SolverConfig,
};
pub use tree::{from_drift, DriftParametrization, MarketTree, Move, NodePath, Violation, ViolationKind};
