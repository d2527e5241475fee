use crate::error::{Error, Result};
use crate::hazard_model::MarketModel;

/// Risk aversion `p` and initial capital `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preference {
    pub risk_aversion: f64,
    pub capital: f64,
}

pub(crate) const LOG_UTILITY_BAND: f64 = 1e-6;

impl Preference {
    pub fn new(risk_aversion: f64, capital: f64) -> Result<Self> {
        if !(risk_aversion.is_finite() && risk_aversion > 0.0) {
            return Err(Error::InvalidParameter(format!("risk aversion must be positive, got {risk_aversion}")));
        }
        if !(capital.is_finite() && capital > 0.0) {
            return Err(Error::InvalidParameter(format!("capital must be positive, got {capital}")));
        }
        Ok(Self { risk_aversion, capital })
    }

    pub fn is_log(&self) -> bool {
        (self.risk_aversion - 1.0).abs() < LOG_UTILITY_BAND
    }

    /// `U(x)`: `log x` or `x^(1−p)/(1−p)`.
    pub fn utility(&self, x: f64) -> f64 {
        if self.is_log() {
            x.ln()
        } else {
            let e = 1.0 - self.risk_aversion;
            x.powf(e) / e
        }
    }

    pub fn inverse_utility(&self, u: f64) -> f64 {
        if self.is_log() {
            u.exp()
        } else {
            let e = 1.0 - self.risk_aversion;
            (u * e).powf(1.0 / e)
        }
    }
}

/// Auxiliary functions and their partials at one point `(t, y, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxEval {
    pub a: f64,
    pub b: f64,
    pub m: f64,
    pub n: f64,
    pub da_dy: f64,
    pub dm_dy: f64,
    pub dn_dy: f64,
    pub da_dt: f64,
}

/// Model data entering the auxiliary functions at a fixed time.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coefficients {
    pub q: f64,
    pub kappa: f64,
    pub dq: f64,
    pub dkappa: f64,
}

impl Coefficients {
    pub fn at(model: &MarketModel, t: f64) -> Self {
        Self {
            q: model.phi_prime(t),
            kappa: model.kappa(t),
            dq: model.phi_second(t),
            dkappa: model.hazard.kappa_derivative(t),
        }
    }

    fn delta(&self) -> f64 {
        if self.q == 0.0 {
            0.0
        } else {
            self.q / self.kappa
        }
    }
}

/// Market constants shared by every evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Consts {
    pub mu: f64,
    pub s2: f64,
    pub p: f64,
}

impl Consts {
    pub fn new(model: &MarketModel, p: f64) -> Self {
        Self { mu: model.mu, s2: model.sigma * model.sigma, p }
    }

    pub fn a(&self, c: &Coefficients, y: f64) -> f64 {
        1.0 - c.delta() * (self.mu - c.q * y) / (self.p * self.s2)
    }

    pub fn m(&self, c: &Coefficients, y: f64) -> f64 {
        (1.0 + y).powf(1.0 / self.p) * self.a(c, y)
    }

    pub fn dm_dy(&self, c: &Coefficients, y: f64) -> f64 {
        let a = self.a(c, y);
        let da = if c.q == 0.0 { 0.0 } else { c.q * c.q / (c.kappa * self.p * self.s2) };
        (1.0 + y).powf(1.0 / self.p) * (a / (self.p * (1.0 + y)) + da)
    }

    pub fn n(&self, c: &Coefficients, y: f64) -> f64 {
        let a = self.a(c, y);
        let b = (1.0 + y / self.p) * a;
        let qy = c.q * y;
        -(1.0 - self.p) * qy * qy / (2.0 * self.p * self.p * self.s2) + c.kappa * (b - 1.0)
    }

    pub fn eval(&self, c: &Coefficients, y: f64) -> AuxEval {
        let p = self.p;
        let d = c.delta();
        let a = self.a(c, y);
        let b = (1.0 + y / p) * a;
        let root = (1.0 + y).powf(1.0 / p);
        let m = root * a;
        let qy = c.q * y;
        let n = -(1.0 - p) * qy * qy / (2.0 * p * p * self.s2) + c.kappa * (b - 1.0);
        let da_dy = if c.q == 0.0 { 0.0 } else { c.q * c.q / (c.kappa * p * self.s2) };
        let dm_dy = root * (a / (p * (1.0 + y)) + da_dy);
        let dn_dy = c.kappa * (a / p + (1.0 + y) * da_dy);
        let dd = if c.q == 0.0 && c.dq == 0.0 {
            0.0
        } else {
            (c.dq * c.kappa - c.q * c.dkappa) / (c.kappa * c.kappa)
        };
        let da_dt = -(dd * (self.mu - qy) - d * c.dq * y) / (p * self.s2);
        AuxEval { a, b, m, n, da_dy, dm_dy, dn_dy, da_dt }
    }

    pub fn lower_boundary(&self, c: &Coefficients) -> f64 {
        if c.q == 0.0 {
            -1.0
        } else {
            (-1.0_f64).max(self.mu / c.q - self.p * self.s2 * c.kappa / (c.q * c.q))
        }
    }

    /// Right-hand side of the ODE `y' = f(t, y)`; `None` outside the admissible domain.
    pub fn rhs(&self, c: &Coefficients, y: f64) -> Option<f64> {
        if !(y > self.lower_boundary(c)) {
            return None;
        }
        let e = self.eval(c, y);
        let den = e.a / (self.p * (1.0 + y)) + e.da_dy;
        Some((e.a * e.n - e.da_dt) / den)
    }

    /// Root of `m(t, ·) = target` above the lower boundary. `guess` seeds the Newton steps.
    pub fn invert_m(&self, c: &Coefficients, target: f64, guess: Option<f64>) -> Result<f64> {
        if !(target > 0.0) || !target.is_finite() {
            return Err(Error::Domain { what: "implicit-solve target", value: target });
        }
        let lo0 = self.lower_boundary(c);
        // growth bounds on the root
        let mut hi = if c.q == 0.0 || c.q <= self.p * self.s2 * c.kappa / (2.0 * self.mu) {
            (2.0 * target).powf(self.p)
        } else {
            target.powf(self.p).max(self.mu / c.q)
        };
        hi = hi.max(lo0 + 1.0);
        let mut guard = 0;
        while self.m(c, hi) < target {
            hi = 2.0 * hi + 1.0;
            guard += 1;
            if guard > 200 || !hi.is_finite() {
                return Err(Error::Domain { what: "implicit-solve target (no upper bracket)", value: target });
            }
        }
        let mut lo = lo0;
        let mut y = match guess {
            Some(g) if g > lo && g < hi => g,
            _ => 0.5 * (lo + hi),
        };
        let tol = 1e-12 * target.max(1.0);
        for _ in 0..300 {
            let f = self.m(c, y) - target;
            if f < 0.0 {
                lo = lo.max(y);
            } else {
                hi = hi.min(y);
            }
            if f.abs() <= 0.25 * f64::EPSILON * target.max(1.0) {
                return Ok(y);
            }
            let step = f / self.dm_dy(c, y);
            let mut next = y - step;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = 0.5 * (lo + hi);
            }
            if (next - y).abs() <= 2.0 * f64::EPSILON * y.abs().max(1e-300) || hi - lo <= 2.0 * f64::EPSILON * hi.abs().max(1.0) {
                y = next;
                break;
            }
            y = next;
        }
        // stalled: take the best point seen at the ends of the bracket
        let resid = |v: f64| (self.m(c, v) - target).abs();
        let y = [y, lo, hi]
            .into_iter()
            .filter(|&v| v > lo0 && v.is_finite())
            .min_by(|a, b| resid(*a).total_cmp(&resid(*b)))
            .unwrap_or(y);
        let r = resid(y);
        // near y = −1 the spacing of doubles alone can exceed the target tolerance
        let floor = 2.0 * self.dm_dy(c, y) * f64::EPSILON * y.abs().max(f64::MIN_POSITIVE);
        if r <= tol.max(floor) {
            Ok(y)
        } else {
            Err(Error::NonConvergence {
                reason: format!("implicit solve stalled at y = {y}"),
                max_residual: r,
                residuals: vec![r],
            })
        }
    }
}

/// `ȳ(t)`: below it `m(t, ·, p)` is not positive.
pub fn lower_boundary(model: &MarketModel, prefs: &Preference, t: f64) -> f64 {
    Consts::new(model, prefs.risk_aversion).lower_boundary(&Coefficients::at(model, t))
}

pub fn aux_eval(model: &MarketModel, prefs: &Preference, t: f64, y: f64) -> AuxEval {
    Consts::new(model, prefs.risk_aversion).eval(&Coefficients::at(model, t), y)
}

/// Unique `y > ȳ(t)` with `m(t, y, p) = target`.
pub fn implicit_solve(model: &MarketModel, prefs: &Preference, t: f64, target: f64) -> Result<f64> {
    Consts::new(model, prefs.risk_aversion).invert_m(&Coefficients::at(model, t), target, None)
}

/// `f(t, y)` of the ODE satisfied by the optimal curve.
pub fn ode_rhs(model: &MarketModel, prefs: &Preference, t: f64, y: f64) -> Result<f64> {
    Consts::new(model, prefs.risk_aversion)
        .rhs(&Coefficients::at(model, t), y)
        .ok_or(Error::Domain { what: "ode state below the lower boundary", value: y })
}

/// Closed-form optimal curve for logarithmic utility.
pub fn log_utility_solution(model: &MarketModel, t: f64) -> f64 {
    let q = model.phi_prime(t);
    if q == 0.0 {
        return 0.0;
    }
    let k = model.kappa(t);
    let s2 = model.sigma * model.sigma;
    let b = model.mu - q - s2 * k / q;
    let disc = (b * b + 4.0 * model.mu * q).sqrt();
    // numerically stable root of q y² − b y − μ = 0
    if b >= 0.0 {
        (b + disc) / (2.0 * q)
    } else {
        -2.0 * model.mu / (b - disc)
    }
}
