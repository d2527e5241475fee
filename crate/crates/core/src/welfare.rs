//! Certainty equivalents and equivalent safe rates of the optimal strategy.

use crate::elmm::build_tilted_measure;
use crate::error::{Error, Result};
use crate::numerics::{integrate, integrate_to_horizon, ridders_derivative, NeumaierSum, QuadOptions};
use crate::solver::{aux_eval, Solution};

const OPTS: QuadOptions = QuadOptions { abs_tol: 1e-16, rel_tol: 1e-13, max_intervals: 100 };

/// Certainty equivalent and equivalent safe rates, against the Black–Scholes benchmark.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareReport {
    pub ce: f64,
    pub esr: f64,
    pub esr_bs: f64,
    pub resrl: f64,
}

/// `∫₀ᵀ f(u, ŷ(u)) du` over the solver grid, with the last stretch to `T` done separately.
fn integrate_along(solution: &Solution, f: impl Fn(f64, f64) -> f64) -> f64 {
    let g = |u: f64| f(u, solution.y_hat(u));
    let grid = solution.grid();
    let mut sum = NeumaierSum::new();
    for w in grid.windows(2) {
        sum.add(integrate(g, w[0], w[1], OPTS).value);
    }
    let last = grid[grid.len() - 1];
    let tail = integrate_to_horizon(g, last, solution.model().horizon());
    sum.add(match tail.finite() {
        Some(v) => v,
        // the integrand is bounded by its last values; fall back to a one-sided estimate
        None => g(last) * (solution.model().horizon() - last),
    });
    sum.value()
}

/// Equivalent-safe-rate shortfall `ESR^BS − ESR`.
fn rate_loss(solution: &Solution) -> f64 {
    let model = solution.model();
    let horizon = model.horizon();
    let prefs = solution.prefs();
    if prefs.is_log() {
        let s2 = model.sigma * model.sigma;
        let hazard = &model.hazard;
        let integral = integrate_along(solution, |u, y| {
            let q = model.phi_prime(u);
            let density = hazard.density(u);
            if density == 0.0 {
                return 0.0;
            }
            let qy = if q == 0.0 { 0.0 } else { q * y };
            let jump = (y).ln_1p() - y / (1.0 + y);
            qy * qy / (2.0 * s2) * (-hazard.cumulative(u)).exp() + jump * density
        });
        integral / horizon
    } else {
        let p = prefs.risk_aversion;
        p / (1.0 - p) * solution.m0().ln() / horizon
    }
}

/// Certainty equivalent of the optimal strategy.
pub fn certainty_equivalent(solution: &Solution) -> f64 {
    safe_rates(solution).ce
}

/// CE, ESR, the Black–Scholes ESR and the relative loss.
pub fn safe_rates(solution: &Solution) -> WelfareReport {
    let model = solution.model();
    let p = solution.prefs().risk_aversion;
    let p_eff = if solution.prefs().is_log() { 1.0 } else { p };
    let esr_bs = model.mu * model.mu / (2.0 * p_eff * model.sigma * model.sigma);
    let loss = rate_loss(solution);
    let esr = esr_bs - loss;
    let ce = solution.prefs().capital * (esr * model.horizon()).exp();
    WelfareReport { ce, esr, esr_bs, resrl: loss / esr_bs }
}

/// Relative residual of `A^Ĥ ξ̂(v) = ξ̂(v) a(v, ŷ(v), p)`, where `ξ̂` is the pre-crash wealth
/// of the optimal strategy and `Ĥ` the crash law under the dual measure.
pub fn xihat_identity_check(solution: &Solution, v: f64) -> Result<f64> {
    let grid = solution.grid();
    let last = grid[grid.len() - 1];
    if !(v > 0.0 && v < last) {
        return Err(Error::Domain { what: "identity check time", value: v });
    }
    let model = solution.model();
    let prefs = solution.prefs();
    let ps2 = prefs.risk_aversion * model.sigma * model.sigma;
    let rate = |u: f64| {
        let q = model.phi_prime(u);
        if q == 0.0 {
            return 0.0;
        }
        let y = solution.y_hat(u);
        q * (model.mu - q * y) * (1.0 + y) / ps2
    };
    let measure = build_tilted_measure(model, &solution.tilt(), &[])?;
    let mut log_xi = NeumaierSum::new();
    let upto = grid.partition_point(|&t| t <= v);
    for w in grid[..upto].windows(2) {
        log_xi.add(integrate(rate, w[0], w[1], OPTS).value);
    }
    log_xi.add(integrate(rate, grid[upto - 1], v, OPTS).value);
    let xi = log_xi.value().exp();
    // ξ̂(u)/ξ̂(v) as an increment keeps the difference quotient free of cancellation
    let ratio = |u: f64| (integrate(rate, v, u, OPTS).value).exp_m1();
    let h = 0.25 * v.min(last - v);
    let (dratio, _) = ridders_derivative(ratio, v, h);
    let a_h = xi - xi * dratio / measure.hazard_rate(v);
    let a = aux_eval(model, prefs, v, solution.y_hat(v)).a;
    Ok((a_h - xi * a).abs() / xi)
}
