//! Crash-time laws, excess-return profiles and the single-jump martingale machinery.

mod excess;
mod hazard;
mod market;
mod single_jump;

pub use excess::{ExcessReturnProfile, JumpSizeCurve};
pub use hazard::{
    lppl_log_price, CrashDistribution, HazardFamily, HazardModel, LpplHazard, LpplLogPrice,
    TabulatedHazard,
};
pub use market::{
    Classification, Defect, MarketModel, ValidationReport, Verdict, Violation, ViolationKind,
};
pub(crate) use market::verdict_from;
pub use single_jump::{ag_transform, single_jump_class, SingleJumpClass};
