//! Tilted crash laws and the equivalent local martingale measures they induce.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hazard_model::{verdict_from, Classification, CrashDistribution, HazardFamily, MarketModel, Verdict};
use crate::numerics::{brent, forward_derivative, integrate, integrate_to_horizon, ridders_derivative, Curve, HorizonIntegral, QuadOptions};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum TiltKind {
    Constant(f64),
    Closure { y: ScalarFn, dy: ScalarFn },
    Curve(Arc<Curve>),
}

/// Tilt `y` with `inf(1 + y) > 0`; the crash intensity under the new measure is `κ(1 + y)`.
#[derive(Clone)]
pub struct TiltFunction {
    kind: TiltKind,
    floor: Option<f64>,
}

impl fmt::Debug for TiltFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TiltKind::Constant(c) => write!(f, "TiltFunction::Constant({c})"),
            TiltKind::Closure { .. } => f.write_str("TiltFunction::Closure(..)"),
            TiltKind::Curve(c) => write!(f, "TiltFunction::Curve({} knots)", c.len()),
        }
    }
}

impl TiltFunction {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self { kind: TiltKind::Constant(c), floor: Some(1.0 + c) }
    }

    pub fn from_fn(
        y: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dy: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { kind: TiltKind::Closure { y: Arc::new(y), dy: Arc::new(dy) }, floor: None }
    }

    /// Tilt read off a curve, held flat beyond its last knot.
    pub fn from_curve(curve: Curve) -> Self {
        Self { kind: TiltKind::Curve(Arc::new(curve)), floor: None }
    }

    /// Attaches a certified lower bound for `inf(1 + y)`.
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = Some(floor);
        self
    }

    pub fn certified_floor(&self) -> Option<f64> {
        self.floor
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, TiltKind::Constant(c) if c == 0.0)
    }

    fn is_bounded(&self) -> bool {
        !matches!(self.kind, TiltKind::Closure { .. })
    }

    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            TiltKind::Constant(c) => *c,
            TiltKind::Closure { y, .. } => y(t),
            TiltKind::Curve(c) => c.eval(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match &self.kind {
            TiltKind::Constant(_) => 0.0,
            TiltKind::Closure { dy, .. } => dy(t),
            TiltKind::Curve(c) => c.derivative(t),
        }
    }
}

/// Constants of the two-sided bound `ε ≤ 1 + y ≤ C + (C/φ')·1{κ < Cφ'}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltBounds {
    pub epsilon: f64,
    pub c: f64,
}

fn probe_points(horizon: f64, n: usize) -> impl Iterator<Item = f64> {
    let cheb = (0..n).map(move |j| horizon * (0.5 * std::f64::consts::PI * j as f64 / n as f64).sin());
    let dyadic = (1..=45).map(move |k| horizon - horizon * 0.5_f64.powi(k));
    cheb.chain(dyadic)
}

fn tilt_floor(model: &MarketModel, tilt: &TiltFunction, n: usize) -> f64 {
    let sampled = probe_points(model.horizon(), n)
        .map(|t| 1.0 + tilt.value(t))
        .fold(f64::INFINITY, f64::min);
    match tilt.floor {
        Some(f) => f.min(sampled),
        None => sampled,
    }
}

fn tilt_ceiling(model: &MarketModel, tilt: &TiltFunction, n: usize) -> f64 {
    probe_points(model.horizon(), n).map(|t| (1.0 + tilt.value(t)).abs()).fold(0.0, f64::max)
}

/// Checks the hypotheses under which the tilt defines an ELMM.
pub fn check_tilt(model: &MarketModel, tilt: &TiltFunction) -> Result<()> {
    let floor = tilt_floor(model, tilt, 1024);
    if !(floor > 0.0) || !floor.is_finite() {
        return Err(Error::RejectedTilt(format!("inf(1 + y) must be positive, sampled {floor}")));
    }
    let horizon = model.horizon();
    if !tilt.is_zero() && !model.excess.is_zero() {
        let sq = |t: f64| {
            let v = model.phi_prime(t) * tilt.value(t);
            v * v
        };
        match integrate_to_horizon(sq, 0.0, horizon) {
            HorizonIntegral::Finite { .. } => {}
            HorizonIntegral::Divergent { .. } => {
                return Err(Error::RejectedTilt("∫(φ'y)² diverges".into()))
            }
            HorizonIntegral::Indeterminate { .. } => {
                return Err(Error::RejectedTilt("could not certify ∫(φ'y)² < ∞".into()))
            }
        }
    }
    // with an atom Λ(T−) is finite, so a bounded 1 + y already makes ∫κ(1+y) finite
    if model.hazard.atom() > 0.0 && !tilt.is_bounded() && !tilt_ceiling(model, tilt, 1024).is_finite() {
        let f = |t: f64| model.kappa(t) * (1.0 + tilt.value(t));
        match integrate_to_horizon(f, 0.0, horizon) {
            HorizonIntegral::Finite { .. } => {}
            HorizonIntegral::Divergent { .. } => {
                return Err(Error::RejectedTilt("∫κ(1+y) diverges although G has an atom".into()))
            }
            HorizonIntegral::Indeterminate { .. } => {
                return Err(Error::RejectedTilt("could not certify ∫κ(1+y) < ∞".into()))
            }
        }
    }
    Ok(())
}

/// Crash law and density factor of the measure generated by a tilt.
#[derive(Debug, Clone)]
pub struct TiltedMeasure {
    model: MarketModel,
    tilt: TiltFunction,
    grid: Vec<f64>,
    /// ∫₀^{t_i} κ y
    tilt_cum: Vec<f64>,
    /// ∫₀^{t_i} φ' y
    drift_cum: Vec<f64>,
    terminal: f64,
}

const CUM_OPTS: QuadOptions = QuadOptions { abs_tol: 1e-16, rel_tol: 1e-14, max_intervals: 200 };

impl TiltedMeasure {
    /// Grid geometrically clustered toward `T`, used when the caller has none.
    pub fn default_grid(horizon: f64, n: usize) -> Vec<f64> {
        let n = n.max(2);
        let smax = (1e6_f64).ln();
        (0..n).map(|i| horizon * -(-(smax * i as f64 / (n - 1) as f64)).exp_m1()).collect()
    }

    pub fn model(&self) -> &MarketModel {
        &self.model
    }

    pub fn tilt(&self) -> &TiltFunction {
        &self.tilt
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    fn node_below(&self, t: f64) -> usize {
        match self.grid.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    fn cumulate(&self, table: &[f64], f: impl Fn(f64) -> f64, t: f64) -> f64 {
        let i = self.node_below(t);
        let t0 = self.grid[i];
        if t == t0 {
            return table[i];
        }
        table[i] + integrate(f, t0, t, CUM_OPTS).value
    }

    /// `∫₀ᵗ κ y`.
    pub fn tilt_integral(&self, t: f64) -> f64 {
        if self.tilt.is_zero() {
            return 0.0;
        }
        self.cumulate(&self.tilt_cum, |u| self.model.kappa(u) * self.tilt.value(u), t)
    }

    /// `∫₀ᵗ φ' y`, the extra pre-crash drift under the new measure.
    pub fn drift_shift(&self, t: f64) -> f64 {
        if self.tilt.is_zero() {
            return 0.0;
        }
        self.cumulate(&self.drift_cum, |u| self.model.phi_prime(u) * self.tilt.value(u), t)
    }

    /// `ζ(t) = exp(−∫₀ᵗ κ y)`.
    pub fn zeta(&self, t: f64) -> f64 {
        (-self.tilt_integral(t)).exp()
    }

    pub fn hazard_rate(&self, t: f64) -> f64 {
        self.model.kappa(t) * (1.0 + self.tilt.value(t))
    }

    /// Residuals of `1−H = ζ(1−G)`, `κ^H = κ(1+y)` and `A^G ζ = ζ(1+y)` at `t`,
    /// each relative to the right-hand side. Derivatives come from extrapolated differences.
    pub fn relation_residuals(&self, t: f64) -> [f64; 3] {
        let horizon = self.model.horizon();
        let surv_h = (-self.cumulative_hazard(t)).exp();
        let surv_g = (-self.model.hazard.cumulative(t)).exp();
        let zeta = self.zeta(t);
        let r1 = (surv_h - zeta * surv_g).abs() / surv_h;

        // Differences are taken as increments from t so that rounding stays relative to them.
        // log-periodic hazards oscillate on the scale (T−t)/ω, which Ridders must resolve
        let omega = match self.model.hazard.family() {
            HazardFamily::Lppl(l) => l.omega.abs(),
            _ => 0.0,
        };
        let h = 0.5 * (horizon - t).min(0.1 * horizon) / (1.0 + omega);
        let deriv = |g: &dyn Fn(f64) -> f64| -> f64 {
            if t >= 2.0 * h {
                ridders_derivative(g, t, h).0
            } else {
                forward_derivative(g, t, h)
            }
        };
        let tilt_inc = |x: f64| integrate(|u| self.model.kappa(u) * self.tilt.value(u), t, x, CUM_OPTS).value;
        let hazard_inc = |x: f64| integrate(|u| self.model.kappa(u), t, x, CUM_OPTS).value;

        let kappa_h_fd = deriv(&|x| hazard_inc(x) + tilt_inc(x));
        let kappa_h = self.hazard_rate(t);
        let r2 = (kappa_h_fd - kappa_h).abs() / kappa_h.abs().max(1e-300);

        let dzeta = zeta * deriv(&|x| (-tilt_inc(x)).exp_m1());
        let ag = zeta - dzeta / self.model.kappa(t);
        let rhs = zeta * (1.0 + self.tilt.value(t));
        let r3 = (ag - rhs).abs() / rhs.abs();
        [r1, r2, r3]
    }
}

impl CrashDistribution for TiltedMeasure {
    fn horizon(&self) -> f64 {
        self.model.horizon()
    }

    fn cumulative_hazard(&self, t: f64) -> f64 {
        if t >= self.model.horizon() {
            return self.terminal;
        }
        self.model.hazard.cumulative(t) + self.tilt_integral(t)
    }

    fn terminal_cumulative_hazard(&self) -> f64 {
        self.terminal
    }

    fn inverse_cumulative_hazard(&self, level: f64) -> f64 {
        let horizon = self.model.horizon();
        if level <= 0.0 {
            return 0.0;
        }
        if level >= self.terminal {
            return horizon;
        }
        let node_level = |i: usize| self.model.hazard.cumulative(self.grid[i]) + self.tilt_cum[i];
        // locate the bracketing grid cell, then refine
        let (mut lo, mut hi) = (0usize, self.grid.len() - 1);
        if node_level(hi) < level {
            let a = self.grid[hi];
            let mut b = horizon * (1.0 - f64::EPSILON);
            if self.cumulative_hazard(b) < level {
                return b;
            }
            // tighten b geometrically toward the last node
            loop {
                let mid = b - 0.5 * (b - a);
                if mid <= a || self.cumulative_hazard(mid) < level {
                    break;
                }
                b = mid;
            }
            return brent(|x| self.cumulative_hazard(x) - level, a, b, 1e-15 * horizon).unwrap_or(b);
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if node_level(mid) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        brent(|x| self.cumulative_hazard(x) - level, self.grid[lo], self.grid[hi], 1e-15 * horizon)
            .unwrap_or(self.grid[hi])
    }
}

/// Tabulates `ζ`, `H` and the drift shift of the measure induced by `tilt` on `grid`.
///
/// `grid` must start at 0, increase strictly and stay below `T`; an empty grid selects
/// a default clustered grid.
pub fn build_tilted_measure(model: &MarketModel, tilt: &TiltFunction, grid: &[f64]) -> Result<TiltedMeasure> {
    check_tilt(model, tilt)?;
    let horizon = model.horizon();
    let grid: Vec<f64> = if grid.is_empty() { TiltedMeasure::default_grid(horizon, 256) } else { grid.to_vec() };
    if grid[0] != 0.0 || !grid.windows(2).all(|w| w[1] > w[0]) || grid[grid.len() - 1] >= horizon {
        return Err(Error::InvalidParameter("tilt grid must start at 0, increase and end before T".into()));
    }
    let kap = |u: f64| model.kappa(u) * tilt.value(u);
    let drift = |u: f64| model.phi_prime(u) * tilt.value(u);
    let mut tilt_cum = vec![0.0; grid.len()];
    let mut drift_cum = vec![0.0; grid.len()];
    if !tilt.is_zero() {
        for i in 1..grid.len() {
            tilt_cum[i] = tilt_cum[i - 1] + integrate(kap, grid[i - 1], grid[i], CUM_OPTS).value;
            drift_cum[i] = drift_cum[i - 1] + integrate(drift, grid[i - 1], grid[i], CUM_OPTS).value;
        }
    }
    let terminal = if model.hazard.hazard_integrable() {
        let last = grid[grid.len() - 1];
        let rest = if tilt.is_zero() {
            0.0
        } else {
            match integrate_to_horizon(kap, last, horizon).finite() {
                Some(v) => v,
                None => {
                    // substitute u = Λ(t): the integrand is y itself on the finite range of Λ
                    let (a, b) = (model.hazard.cumulative_hazard(last), model.hazard.terminal_cumulative());
                    let r = integrate(|u| tilt.value(model.hazard.inverse_cumulative_hazard(u)), a, b, CUM_OPTS);
                    if !r.value.is_finite() {
                        return Err(Error::RejectedTilt("∫κy does not converge at T although G has an atom".into()));
                    }
                    r.value
                }
            }
        };
        model.hazard.terminal_cumulative() + tilt_cum[grid.len() - 1] + rest
    } else {
        // 1 + y ≥ ε > 0 and ∫κ = ∞ force ∫κ(1+y) = ∞
        f64::INFINITY
    };
    Ok(TiltedMeasure { model: model.clone(), tilt: tilt.clone(), grid, tilt_cum, drift_cum, terminal })
}

/// Searches `C ∈ {1, 2, 4, …, c_max}` with `ε = min(1, inf(1+y))` certifying the two-sided bound
/// on refining grids. Returns `None` if no `C` works.
pub fn verify_tilt_bounds(model: &MarketModel, tilt: &TiltFunction, c_max: f64) -> Option<TiltBounds> {
    let horizon = model.horizon();
    let floor = tilt_floor(model, tilt, 4096);
    if !(floor > 0.0) {
        return None;
    }
    let epsilon = floor.min(1.0);
    let levels = [256usize, 1024, 4096];
    let samples: Vec<(f64, f64, f64)> = levels
        .iter()
        .flat_map(|&n| probe_points(horizon, n))
        .map(|t| (1.0 + tilt.value(t), model.phi_prime(t), model.kappa(t)))
        .collect();
    let mut c = 1.0;
    while c <= c_max {
        let ok = samples.iter().all(|&(one_y, q, k)| {
            let extra = if q > 0.0 && k < c * q { c / q } else { 0.0 };
            one_y <= c + extra
        });
        if ok {
            return Some(TiltBounds { epsilon, c });
        }
        c *= 2.0;
    }
    None
}

pub const DEFAULT_C_MAX: f64 = 65536.0;

/// Martingale classification of the price under the measure generated by `tilt`.
pub fn classify_under_q(model: &MarketModel, tilt: &TiltFunction) -> Result<Classification> {
    check_tilt(model, tilt)?;
    let atom = model.hazard.atom();
    let defect = model.integrability_defect();
    let limsup_delta = model.sampled_limsup_delta();
    if atom > 0.0 {
        return Ok(Classification { verdict: Verdict::TrueMartingale, atom, defect, limsup_delta });
    }
    let verdict = match verify_tilt_bounds(model, tilt, DEFAULT_C_MAX) {
        Some(_) => verdict_from(0.0, defect),
        None => Verdict::Indeterminate,
    };
    Ok(Classification { verdict, atom, defect, limsup_delta })
}
