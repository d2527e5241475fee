//! Single-jump bubble markets on a finite horizon.
//!
//! A Black–Scholes asset carries one crash at a random time whose hazard rate may blow
//! up at the horizon. The crate classifies the asset as a true or strict local martingale,
//! builds tilted martingale measures, solves the power-utility investment problem, and
//! checks the results by Monte Carlo.

// NaN must fail range checks, and quadrature nodes are kept as published
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod elmm;
pub mod error;
pub mod hazard_model;
pub mod montecarlo;
pub mod numerics;
pub mod solver;
pub mod welfare;

pub use elmm::{build_tilted_measure, classify_under_q, verify_tilt_bounds, TiltBounds, TiltFunction, TiltedMeasure};
pub use error::{Error, Result};
pub use hazard_model::{
    ag_transform, lppl_log_price, single_jump_class, Classification, CrashDistribution, Defect,
    ExcessReturnProfile, HazardFamily, HazardModel, JumpSizeCurve, LpplHazard, LpplLogPrice,
    MarketModel, SingleJumpClass, ValidationReport, Verdict, Violation, ViolationKind,
};
pub use montecarlo::{
    estimate, estimate_utility_difference, sample_crash_time, simulate_price_path,
    simulate_wealth_path, Estimand, EstimatorResult, Measure, PricePath, SimConfig, Strategy,
    TailDiagnostics,
};
pub use numerics::Curve;
pub use solver::{
    aux_eval, bracket_curves, decompose, dual_multiplier, implicit_solve, log_utility_solution, lower_boundary,
    myopic_curve, ode_rhs, solve_optimal, AuxEval, Decomposition, Preference, SolveMethod,
    Solution, SolverOptions,
};
pub use welfare::{certainty_equivalent, safe_rates, xihat_identity_check, WelfareReport};
