#![allow(dead_code)]

use bubble_core::*;

pub const MUS: [f64; 4] = [0.05, 0.1, 0.2, 0.3];
pub const SIGMAS: [f64; 4] = [0.1, 0.2, 0.3, 0.4];
pub const ALPHAS: [f64; 4] = [0.1, 0.2, 0.4, 0.8];

pub fn cutoff(mu: f64, sigma: f64, alpha: f64) -> MarketModel {
    MarketModel::new(mu, sigma, HazardModel::exponential_cutoff(1.0, 1.0).unwrap(), ExcessReturnProfile::Constant { alpha }).unwrap()
}

/// Uniform crash time on `[0, 1]` with `φ' = α(κ − 1)`.
pub fn uniform_excess(mu: f64, alpha: f64) -> MarketModel {
    MarketModel::new(mu, 0.2, HazardModel::uniform(1.0).unwrap(), ExcessReturnProfile::HazardExcess { alpha, offset: 1.0 }).unwrap()
}

/// Uniform crash time with jump size `δ(t) = t`.
pub fn uniform_full_jump() -> MarketModel {
    uniform_excess(0.0, 1.0)
}

pub fn lppl_model() -> MarketModel {
    let h = LpplHazard { b: 1.0, c: 0.3, m: 0.5, omega: 6.0, psi: 0.0 };
    MarketModel::new(0.1, 0.2, HazardModel::lppl(h, 1.0).unwrap(), ExcessReturnProfile::ConstantJumpSize { delta: 0.2 }).unwrap()
}

/// `φ'(t) = βt` with an exponential cutoff.
pub fn ramp(mu: f64, sigma: f64, beta: f64) -> MarketModel {
    MarketModel::new(mu, sigma, HazardModel::exponential_cutoff(1.0, 1.0).unwrap(), ExcessReturnProfile::LinearRamp { beta }).unwrap()
}

pub fn prefs(p: f64) -> Preference {
    Preference::new(p, 1.0).unwrap()
}

pub fn solve(model: &MarketModel, p: f64) -> Solution {
    solve_optimal(model, &prefs(p), &SolverOptions::default()).unwrap()
}

/// Every `(μ, σ, α)` combination of the parameter grid.
pub fn parameter_grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for mu in MUS {
        for sigma in SIGMAS {
            for alpha in ALPHAS {
                out.push((mu, sigma, alpha));
            }
        }
    }
    out
}
