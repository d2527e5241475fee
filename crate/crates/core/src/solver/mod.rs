//! Power-utility investment in the bubble market.
//!
//! The optimal pre-crash strategy is `π̂ = (μ − φ'ŷ)/(pσ²)` where `ŷ` solves
//! `m(t, ŷ(t), p) = exp(−∫ₜᵀ n(u, ŷ(u), p) du)`.

mod aux;
mod brackets;
mod integral;

use std::sync::Arc;

pub use aux::{aux_eval, implicit_solve, log_utility_solution, lower_boundary, ode_rhs, AuxEval, Preference};
pub use brackets::{bracket_curves, myopic_curve};

use crate::elmm::TiltFunction;
use crate::error::{Error, Result};
use crate::hazard_model::MarketModel;
use crate::numerics::{bisect, Curve};
use aux::{Coefficients, Consts};
use integral::{residual_profile, Discretisation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub grid_points: usize,
    /// Distance of the last knot from `T`, relative to `T`.
    pub terminal_gap: f64,
    /// Stop when a sweep changes no `log m(t_i, y_i)` by more than this.
    pub tolerance: f64,
    /// Largest accepted integral-equation residual.
    pub residual_tolerance: f64,
    pub max_sweeps: usize,
    /// Solve numerically even for logarithmic utility.
    pub force_numeric: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            grid_points: 512,
            terminal_gap: 1e-6,
            tolerance: 1e-10,
            residual_tolerance: 1e-8,
            max_sweeps: 60,
            force_numeric: false,
        }
    }
}

impl SolverOptions {
    /// Knots uniform in `w = c t/T + log(T/(T−t))` between 0 and `T(1 − terminal_gap)`,
    /// with `c = log(1/terminal_gap)` so both ends of the horizon get half of the knots.
    pub fn grid(&self, horizon: f64) -> Vec<f64> {
        let n = self.grid_points.max(2);
        let c = (1.0 / self.terminal_gap).ln();
        let end = horizon * (1.0 - self.terminal_gap);
        let w_of = |t: f64| c * t / horizon - (-t / horizon).ln_1p();
        let w_end = w_of(end);
        let mut g = Vec::with_capacity(n);
        g.push(0.0);
        for i in 1..n - 1 {
            let w = w_end * i as f64 / (n - 1) as f64;
            let t = bisect(|t| w_of(t) - w, 0.0, end, 1e-16 * horizon).unwrap_or(end);
            g.push(t);
        }
        g.push(end);
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    ClosedForm,
    FixedPoint,
    OdeFallback,
}

/// Optimal curve `ŷ` with its brackets and diagnostics.
#[derive(Debug, Clone)]
pub struct Solution {
    model: MarketModel,
    prefs: Preference,
    y_hat: Curve,
    lower: Curve,
    upper: Curve,
    myopic: Curve,
    residuals: Vec<f64>,
    tail: f64,
    m0: f64,
    method: SolveMethod,
    sweeps: usize,
    excursion: f64,
}

impl Solution {
    pub fn model(&self) -> &MarketModel {
        &self.model
    }

    pub fn prefs(&self) -> &Preference {
        &self.prefs
    }

    pub fn grid(&self) -> &[f64] {
        self.y_hat.times()
    }

    pub fn curve(&self) -> &Curve {
        &self.y_hat
    }

    pub fn lower_bracket(&self) -> &Curve {
        &self.lower
    }

    pub fn upper_bracket(&self) -> &Curve {
        &self.upper
    }

    pub fn myopic(&self) -> &Curve {
        &self.myopic
    }

    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// `∫_{t_N}^T n` used in place of the unresolved last stretch.
    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// `m(0, ŷ(0), p)`.
    pub fn m0(&self) -> f64 {
        self.m0
    }

    /// `m(t_N, ŷ(t_N), p)`, which tends to 1 at the horizon.
    pub fn terminal_m(&self) -> f64 {
        let t = self.y_hat.last_time();
        let p = self.prefs.risk_aversion;
        Consts::new(&self.model, p).m(&Coefficients::at(&self.model, t), self.y_hat.eval(t))
    }

    pub fn method(&self) -> SolveMethod {
        self.method
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Largest distance by which a knot had to be pulled back into its bracket.
    pub fn bracket_excursion(&self) -> f64 {
        self.excursion
    }

    /// Same curve for another initial capital; `ŷ` does not depend on it.
    pub fn with_capital(&self, capital: f64) -> Result<Self> {
        let prefs = Preference::new(self.prefs.risk_aversion, capital)?;
        Ok(Self { prefs, ..self.clone() })
    }

    /// `ŷ(t)`. Past the last knot `φ'ŷ` is held at its last value when `φ'` grows, otherwise `ŷ`.
    pub fn y_hat(&self, t: f64) -> f64 {
        extend(&self.model, &self.y_hat, t).0
    }

    pub fn y_hat_derivative(&self, t: f64) -> f64 {
        extend(&self.model, &self.y_hat, t).1
    }

    /// `π̂` before the crash, or the Merton fraction after it and at `T`.
    pub fn optimal_fraction(&self, t: f64, crashed: bool) -> f64 {
        let p = self.prefs.risk_aversion;
        let s2 = self.model.sigma * self.model.sigma;
        if crashed || t >= self.model.horizon() {
            return self.model.mu / (p * s2);
        }
        let q = self.model.phi_prime(t);
        let qy = if q == 0.0 { 0.0 } else { q * self.y_hat(t) };
        (self.model.mu - qy) / (p * s2)
    }

    pub fn merton_fraction(&self) -> f64 {
        self.model.mu / (self.prefs.risk_aversion * self.model.sigma * self.model.sigma)
    }

    /// `ẑ` with `ẑ^{−1/p} = x m(0, ŷ(0), p) exp(−(1−p)μ²T/(2p²σ²))`.
    pub fn dual_multiplier(&self) -> f64 {
        let p = self.prefs.risk_aversion;
        let k = brackets::bracket_rate(&self.model, p);
        let root = self.prefs.capital * self.m0 * (-k * self.model.horizon()).exp();
        root.powf(-p)
    }

    /// The tilt `ŷ` generating the dual measure.
    pub fn tilt(&self) -> TiltFunction {
        let model = self.model.clone();
        let curve = Arc::new(self.y_hat.clone());
        let (m2, c2) = (model.clone(), curve.clone());
        let floor = 1.0 + self.y_hat.values().iter().copied().fold(0.0_f64, f64::min);
        TiltFunction::from_fn(move |t| extend(&model, &curve, t).0, move |t| extend(&m2, &c2, t).1).with_floor(floor)
    }
}

fn extend(model: &MarketModel, curve: &Curve, t: f64) -> (f64, f64) {
    let last = curve.last_time();
    if t <= last {
        return (curve.eval(t), curve.derivative(t));
    }
    let horizon = model.horizon();
    let y_last = curve.eval(last);
    let q_last = model.phi_prime(last);
    let t = t.min(horizon - f64::EPSILON * horizon);
    let q = model.phi_prime(t);
    if q_last > 0.0 && q > q_last && q.is_finite() {
        (y_last * q_last / q, -y_last * q_last * model.phi_second(t) / (q * q))
    } else {
        (y_last, 0.0)
    }
}

/// `dual_multiplier` as a free function.
pub fn dual_multiplier(solution: &Solution) -> f64 {
    solution.dual_multiplier()
}

/// Solves the integral equation for `ŷ` on the grid described by `options`.
pub fn solve_optimal(model: &MarketModel, prefs: &Preference, options: &SolverOptions) -> Result<Solution> {
    if !(model.mu > 0.0) {
        return Err(Error::Precondition(format!("the investment problem needs mu > 0, got {}", model.mu)));
    }
    if options.grid_points < 16 || !(options.terminal_gap > 0.0 && options.terminal_gap < 0.5) {
        return Err(Error::InvalidParameter("grid needs at least 16 points and a terminal gap in (0, 0.5)".into()));
    }
    let report = model.validate(1024);
    if !report.passed() {
        return Err(Error::Validation(report));
    }
    let grid = options.grid(model.horizon());
    let p = prefs.risk_aversion;
    let (lower, upper) = bracket_curves(model, prefs, &grid)?;
    let myopic = if p >= 1.0 { upper.clone() } else { lower.clone() };
    let disc = Discretisation::new(model, p, &grid, lower.values(), upper.values());
    let finish = |y: Vec<f64>, d: Vec<f64>, tail: f64, method, sweeps, excursion| {
        let y_hat = Curve::hermite(grid.clone(), y, d);
        let residuals = residual_profile(model, p, &y_hat, tail);
        let m0 = Consts::new(model, p).m(&Coefficients::at(model, 0.0), y_hat.values()[0]);
        Solution {
            model: model.clone(),
            prefs: *prefs,
            y_hat,
            lower: lower.clone(),
            upper: upper.clone(),
            myopic: myopic.clone(),
            residuals,
            tail,
            m0,
            method,
            sweeps,
            excursion,
        }
    };

    if model.excess.is_zero() || (prefs.is_log() && !options.force_numeric) {
        let y: Vec<f64> = grid.iter().map(|&t| log_utility_solution(model, t)).collect();
        let d = disc.slopes(&y);
        let tail = disc.tail(&y).unwrap_or(0.0);
        let mut sol = finish(y, d, tail, SolveMethod::ClosedForm, 0, 0.0);
        if prefs.is_log() {
            // m(t, y, 1) = 1 is the equation solved in closed form, so every curve coincides
            sol.myopic = sol.y_hat.clone();
            sol.lower = sol.y_hat.clone();
            sol.upper = sol.y_hat.clone();
        }
        return Ok(sol);
    }

    let start = if p >= 1.0 { lower.values().to_vec() } else { myopic.values().to_vec() };
    let primary = iterate(&disc, start, options);
    let failure = match primary {
        Ok((y, d, tail, sweeps, excursion)) => {
            let sol = finish(y, d, tail, SolveMethod::FixedPoint, sweeps, excursion);
            if sol.max_residual() <= options.residual_tolerance {
                return Ok(sol);
            }
            Error::NonConvergence {
                reason: "fixed-point residual above tolerance".into(),
                max_residual: sol.max_residual(),
                residuals: sol.residuals,
            }
        }
        Err(e) => e,
    };

    // backward ODE from the terminal condition, then a polishing pass
    let y_last = myopic.values()[grid.len() - 1];
    let fallback = disc.integrate_ode(y_last).and_then(|y| {
        let polish = SolverOptions { max_sweeps: options.max_sweeps.max(2), ..*options };
        iterate(&disc, y, &polish)
    });
    match fallback {
        Ok((y, d, tail, sweeps, excursion)) => {
            let sol = finish(y, d, tail, SolveMethod::OdeFallback, sweeps, excursion);
            if sol.max_residual() <= options.residual_tolerance {
                Ok(sol)
            } else {
                Err(Error::NonConvergence {
                    reason: "residual above tolerance after the ode fallback".into(),
                    max_residual: sol.max_residual(),
                    residuals: sol.residuals,
                })
            }
        }
        Err(_) => Err(failure),
    }
}

type Iterate = (Vec<f64>, Vec<f64>, f64, usize, f64);

fn iterate(disc: &Discretisation<'_>, mut y: Vec<f64>, options: &SolverOptions) -> Result<Iterate> {
    let mut d = disc.slopes(&y);
    let mut trace = Vec::new();
    let mut prev_tail: Option<f64> = None;
    for sweep in 1..=options.max_sweeps {
        // the tail fit reacts sharply to the last knots, so its updates are damped
        let fit = disc.tail(&y)?;
        let tail = prev_tail.map_or(fit, |t| 0.5 * (t + fit));
        prev_tail = Some(tail);
        let stats = disc.sweep(&mut y, &mut d, tail)?;
        trace.push(stats.change);
        if stats.change <= options.tolerance {
            return Ok((y, d, tail, sweep, stats.excursion));
        }
    }
    Err(Error::NonConvergence {
        reason: format!("no convergence within {} sweeps", options.max_sweeps),
        max_residual: trace.last().copied().unwrap_or(f64::NAN),
        residuals: trace,
    })
}

/// Myopic and hedging parts of the optimal strategy on the solution grid.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub myopic: Curve,
    pub hedging: Curve,
}

impl Decomposition {
    pub fn times(&self) -> &[f64] {
        self.myopic.times()
    }
}

/// Splits `π̂` into `π^m = (μ − φ'y^m)/(pσ²)` and `π^h = φ'(y^m − ŷ)/(pσ²)`.
pub fn decompose(solution: &Solution) -> Decomposition {
    let model = &solution.model;
    let ps2 = solution.prefs.risk_aversion * model.sigma * model.sigma;
    let grid = solution.grid();
    let ym = &solution.myopic;
    let yh = &solution.y_hat;
    let mut pm = Vec::with_capacity(grid.len());
    let mut dpm = Vec::with_capacity(grid.len());
    let mut ph = Vec::with_capacity(grid.len());
    let mut dph = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        let (q, dq) = (model.phi_prime(t), model.phi_second(t));
        let (m, dm) = (ym.values()[i], ym.slopes()[i]);
        let (h, dh) = (yh.values()[i], yh.slopes()[i]);
        pm.push((model.mu - q * m) / ps2);
        dpm.push(-(dq * m + q * dm) / ps2);
        ph.push(q * (m - h) / ps2);
        dph.push((dq * (m - h) + q * (dm - dh)) / ps2);
    }
    Decomposition {
        myopic: Curve::hermite(grid.to_vec(), pm, dpm),
        hedging: Curve::hermite(grid.to_vec(), ph, dph),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hazard_model::{ExcessReturnProfile, HazardModel};

    fn scenario(alpha: f64) -> MarketModel {
        MarketModel::new(0.1, 0.2, HazardModel::exponential_cutoff(1.0, 1.0).unwrap(), ExcessReturnProfile::Constant { alpha }).unwrap()
    }

    #[test]
    fn grid_shape() {
        let g = SolverOptions::default().grid(2.0);
        assert_eq!(g.len(), 512);
        assert_eq!(g[0], 0.0);
        assert!((g[511] - 2.0 * (1.0 - 1e-6)).abs() < 1e-15);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        // cells shrink toward T but stay fine near 0
        assert!(g[1] < 0.01 && 2.0 - g[510] < 1e-5);
    }

    #[test]
    fn p4_exponential_cutoff() {
        let prefs = Preference::new(4.0, 1.0).unwrap();
        let s = solve_optimal(&scenario(0.2), &prefs, &SolverOptions::default()).unwrap();
        assert_eq!(s.method(), SolveMethod::FixedPoint);
        assert!(s.max_residual() <= 1e-8, "{}", s.max_residual());
        assert!((s.y_hat(0.0) - 0.253317316828665).abs() < 1e-9, "{}", s.y_hat(0.0));
        assert!((s.m0() - 0.992820077709498).abs() < 1e-9);
        assert!((s.terminal_m() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn zero_profile_is_merton() {
        let z = MarketModel::new(0.1, 0.2, HazardModel::uniform(1.0).unwrap(), ExcessReturnProfile::Zero).unwrap();
        let prefs = Preference::new(4.0, 1.0).unwrap();
        let s = solve_optimal(&z, &prefs, &SolverOptions::default()).unwrap();
        assert!(s.curve().values().iter().all(|&y| y == 0.0));
        assert_eq!(s.optimal_fraction(0.3, false), s.merton_fraction());
        assert!((s.merton_fraction() - 0.625).abs() < 1e-15);
        assert!((s.dual_multiplier() - (-0.09375f64).exp()).abs() < 1e-15);
    }
}
