use std::fmt;
use std::sync::Arc;

use super::hazard::HazardModel;
use crate::numerics::{integrate, QuadOptions};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Relative jump size `δ(t)` for a relaxed JLS profile.
#[derive(Clone)]
pub enum JumpSizeCurve {
    /// `δ` moves linearly from `start` at 0 to `end` at the horizon.
    Linear { start: f64, end: f64 },
    /// User supplied `δ` and `δ'`.
    Custom { delta: ScalarFn, derivative: ScalarFn },
}

impl JumpSizeCurve {
    fn eval(&self, t: f64, horizon: f64) -> (f64, f64) {
        match self {
            JumpSizeCurve::Linear { start, end } => {
                let slope = (end - start) / horizon;
                (start + slope * t, slope)
            }
            JumpSizeCurve::Custom { delta, derivative } => (delta(t), derivative(t)),
        }
    }
}

impl fmt::Debug for JumpSizeCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JumpSizeCurve::Linear { start, end } => {
                f.debug_struct("Linear").field("start", start).field("end", end).finish()
            }
            JumpSizeCurve::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

/// Pre-crash excess return `φ` with its first two derivatives.
#[derive(Clone)]
pub enum ExcessReturnProfile {
    Zero,
    /// `φ'(t) = α`.
    Constant { alpha: f64 },
    /// `φ'(t) = β t`.
    LinearRamp { beta: f64 },
    /// `φ' = δ₀ κ`.
    ConstantJumpSize { delta: f64 },
    /// `φ' = α (κ − c)`, i.e. a jump size `α(1 − c/κ)`.
    HazardExcess { alpha: f64, offset: f64 },
    /// `φ' = δ(t) κ`.
    JlsRelaxed(JumpSizeCurve),
    /// Closed forms for `φ`, `φ'`, `φ''`.
    Custom { phi: ScalarFn, phi_prime: ScalarFn, phi_second: ScalarFn },
}

impl fmt::Debug for ExcessReturnProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("Zero"),
            Self::Constant { alpha } => write!(f, "Constant {{ alpha: {alpha} }}"),
            Self::LinearRamp { beta } => write!(f, "LinearRamp {{ beta: {beta} }}"),
            Self::ConstantJumpSize { delta } => write!(f, "ConstantJumpSize {{ delta: {delta} }}"),
            Self::HazardExcess { alpha, offset } => {
                write!(f, "HazardExcess {{ alpha: {alpha}, offset: {offset} }}")
            }
            Self::JlsRelaxed(c) => write!(f, "JlsRelaxed({c:?})"),
            Self::Custom { .. } => f.write_str("Custom(..)"),
        }
    }
}

impl ExcessReturnProfile {
    pub fn custom(
        phi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        phi_second: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::Custom { phi: Arc::new(phi), phi_prime: Arc::new(phi_prime), phi_second: Arc::new(phi_second) }
    }

    pub fn jls_relaxed(
        delta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        derivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::JlsRelaxed(JumpSizeCurve::Custom { delta: Arc::new(delta), derivative: Arc::new(derivative) })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }

    /// `φ(t)`; for `t ≥ T` the left limit, which may be infinite.
    pub fn phi(&self, hazard: &HazardModel, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { alpha } => alpha * t.min(hazard.horizon()),
            Self::LinearRamp { beta } => {
                let t = t.min(hazard.horizon());
                0.5 * beta * t * t
            }
            Self::ConstantJumpSize { delta } => {
                if *delta == 0.0 {
                    0.0
                } else {
                    delta * hazard.cumulative(t)
                }
            }
            Self::HazardExcess { alpha, offset } => {
                if *alpha == 0.0 {
                    0.0
                } else {
                    alpha * (hazard.cumulative(t) - offset * t.min(hazard.horizon()))
                }
            }
            Self::JlsRelaxed(curve) => {
                let horizon = hazard.horizon();
                let f = |u: f64| curve.eval(u, horizon).0 * hazard.kappa(u);
                if t >= horizon {
                    return crate::numerics::integrate_to_horizon(f, 0.0, horizon)
                        .finite()
                        .unwrap_or(f64::INFINITY);
                }
                let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, max_intervals: 400 };
                integrate(f, 0.0, t, opts).value
            }
            Self::Custom { phi, .. } => phi(t),
        }
    }

    pub fn phi_prime(&self, hazard: &HazardModel, t: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant { alpha } => *alpha,
            Self::LinearRamp { beta } => beta * t,
            Self::ConstantJumpSize { delta } => delta * hazard.kappa(t),
            Self::HazardExcess { alpha, offset } => alpha * (hazard.kappa(t) - offset),
            Self::JlsRelaxed(curve) => curve.eval(t, hazard.horizon()).0 * hazard.kappa(t),
            Self::Custom { phi_prime, .. } => phi_prime(t),
        }
    }

    pub fn phi_second(&self, hazard: &HazardModel, t: f64) -> f64 {
        match self {
            Self::Zero | Self::Constant { .. } => 0.0,
            Self::LinearRamp { beta } => *beta,
            Self::ConstantJumpSize { delta } => delta * hazard.kappa_derivative(t),
            Self::HazardExcess { alpha, .. } => alpha * hazard.kappa_derivative(t),
            Self::JlsRelaxed(curve) => {
                let (d, dd) = curve.eval(t, hazard.horizon());
                dd * hazard.kappa(t) + d * hazard.kappa_derivative(t)
            }
            Self::Custom { phi_second, .. } => phi_second(t),
        }
    }

    /// Whether `∫₀ᵀ (κ − φ') = ∞` can be settled without quadrature.
    /// `Some(None)` means the integral is infinite, `Some(Some(v))` finite with value `v`.
    pub(crate) fn analytic_defect(&self, hazard: &HazardModel) -> Option<Option<f64>> {
        let horizon = hazard.horizon();
        if hazard.hazard_integrable() {
            let phi_end = self.phi(hazard, horizon);
            return phi_end.is_finite().then(|| Some(hazard.terminal_cumulative() - phi_end));
        }
        match self {
            Self::Zero | Self::Constant { .. } | Self::LinearRamp { .. } => Some(None),
            Self::ConstantJumpSize { delta } => {
                if *delta < 1.0 {
                    Some(None)
                } else {
                    Some(Some(0.0))
                }
            }
            Self::HazardExcess { alpha, offset } => {
                if *alpha < 1.0 {
                    Some(None)
                } else {
                    Some(Some(offset * horizon))
                }
            }
            Self::JlsRelaxed(_) | Self::Custom { .. } => None,
        }
    }
}
