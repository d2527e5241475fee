use super::hazard::HazardModel;
use crate::error::{Error, Result};
use crate::numerics::{integrate_to_horizon, HorizonIntegral};

/// `A^G F(v) = F(v) − F'(v)/κ(v)` for `v < T`.
///
/// At `v = T` the caller passes the left limit `F(T−)` (or `None` if it does not exist);
/// the value is that limit when `T` carries an atom, and zero otherwise.
pub fn ag_transform(
    hazard: &HazardModel,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    v: f64,
    left_limit: Option<f64>,
) -> Result<f64> {
    let horizon = hazard.horizon();
    if !(v >= 0.0 && v <= horizon) {
        return Err(Error::Domain { what: "transform time", value: v });
    }
    if v == horizon {
        return Ok(match left_limit {
            Some(l) if hazard.atom() > 0.0 => l,
            _ => 0.0,
        });
    }
    let d = df(v);
    Ok(if d == 0.0 { f(v) } else { f(v) - d / hazard.kappa(v) })
}

/// Strongest martingale property of the single-jump process built from `F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingleJumpClass {
    /// `∫|A^G F| dG` diverges.
    NotIntegrable,
    IntegrableLocalMartingale,
    TrueMartingale,
    SquareIntegrableMartingale,
    Indeterminate,
}

impl SingleJumpClass {
    pub fn is_true_martingale(self) -> bool {
        matches!(self, Self::TrueMartingale | Self::SquareIntegrableMartingale)
    }
}

/// Classifies the single-jump process with pre-jump path `F` by quadrature tests.
pub fn single_jump_class(
    hazard: &HazardModel,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
) -> SingleJumpClass {
    let horizon = hazard.horizon();
    let ag = |u: f64| {
        let d = df(u);
        if d == 0.0 { f(u) } else { f(u) - d / hazard.kappa(u) }
    };
    match integrate_to_horizon(|u| ag(u).abs() * hazard.density(u), 0.0, horizon) {
        HorizonIntegral::Finite { .. } => {}
        HorizonIntegral::Divergent { .. } => return SingleJumpClass::NotIntegrable,
        HorizonIntegral::Indeterminate { .. } => return SingleJumpClass::Indeterminate,
    }
    let sq = |u: f64| {
        let d = df(u);
        if d == 0.0 {
            0.0
        } else {
            let r = d / hazard.kappa(u);
            r * r * hazard.density(u)
        }
    };
    let square = integrate_to_horizon(sq, 0.0, horizon);
    if square.finite().is_some() {
        return SingleJumpClass::SquareIntegrableMartingale;
    }
    if hazard.atom() > 0.0 {
        return SingleJumpClass::TrueMartingale;
    }
    // no atom: true martingale iff F(t)(1 − G(t)) → 0 as t ↑ T
    let tail: Vec<f64> = (1..=50)
        .map(|k| {
            let t = horizon - horizon * 0.5_f64.powi(k);
            (f(t) * (-hazard.cumulative(t)).exp()).abs()
        })
        .collect();
    let scale = tail.iter().cloned().fold(0.0, f64::max).max(1e-300);
    let last = &tail[tail.len() - 5..];
    if last.iter().all(|&v| v <= 1e-8 * scale) {
        return SingleJumpClass::TrueMartingale;
    }
    let settled = last.windows(2).all(|w| (w[1] - w[0]).abs() <= 1e-6 * w[0].max(1e-300));
    if settled {
        SingleJumpClass::IntegrableLocalMartingale
    } else {
        SingleJumpClass::Indeterminate
    }
}
