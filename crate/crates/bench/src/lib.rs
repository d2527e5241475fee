//! Fixture models shared by the benchmarks.

use bubble_core::{ExcessReturnProfile, HazardModel, LpplHazard, MarketModel, Preference};

/// Exponential cutoff with `φ' = 0.2`.
pub fn cutoff() -> MarketModel {
    MarketModel::new(0.1, 0.2, HazardModel::exponential_cutoff(1.0, 1.0).unwrap(), ExcessReturnProfile::Constant { alpha: 0.2 }).unwrap()
}

/// Uniform crash time with jump size `0.7 t`; the hazard is not integrable.
pub fn uniform() -> MarketModel {
    MarketModel::new(0.1, 0.2, HazardModel::uniform(1.0).unwrap(), ExcessReturnProfile::HazardExcess { alpha: 0.7, offset: 1.0 })
        .unwrap()
}

pub fn lppl() -> MarketModel {
    let h = LpplHazard { b: 1.0, c: 0.3, m: 0.5, omega: 6.0, psi: 0.0 };
    MarketModel::new(0.1, 0.2, HazardModel::lppl(h, 1.0).unwrap(), ExcessReturnProfile::ConstantJumpSize { delta: 0.2 }).unwrap()
}

pub fn prefs(p: f64) -> Preference {
    Preference::new(p, 1.0).unwrap()
}
