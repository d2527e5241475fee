use std::fmt;

use super::excess::ExcessReturnProfile;
use super::hazard::{HazardFamily, HazardModel};
use crate::error::{check_finite, Error, Result};
use crate::numerics::{integrate_to_horizon, HorizonIntegral};

/// Asset specification: drift, volatility, crash law and pre-crash excess return.
#[derive(Debug, Clone)]
pub struct MarketModel {
    pub mu: f64,
    pub sigma: f64,
    pub hazard: HazardModel,
    pub excess: ExcessReturnProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    PhiNotZeroAtOrigin,
    NegativeExcessReturn,
    ExcessAboveHazard,
    NonPositiveHazard,
    NonFinite,
    LpplPositivity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// First sampled time at which the check failed.
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub points_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first(&self, kind: ViolationKind) -> Option<f64> {
        self.violations.iter().find(|v| v.kind == kind).map(|v| v.t)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            return write!(f, "passed ({} points)", self.points_checked);
        }
        let parts: Vec<String> =
            self.violations.iter().map(|v| format!("{:?} at t={}", v.kind, v.t)).collect();
        write!(f, "{}", parts.join("; "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    TrueMartingale,
    StrictLocalMartingale,
    NotLocalMartingaleUnderP,
    Indeterminate,
}

/// The integral `∫₀ᵀ (κ − φ')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Defect {
    Finite(f64),
    Infinite,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub atom: f64,
    pub defect: Defect,
    /// Largest jump size sampled on dyadic points approaching `T`.
    pub limsup_delta: f64,
}

impl MarketModel {
    pub fn new(mu: f64, sigma: f64, hazard: HazardModel, excess: ExcessReturnProfile) -> Result<Self> {
        check_finite("mu", mu)?;
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
        }
        Ok(Self { mu, sigma, hazard, excess })
    }

    /// Like [`MarketModel::new`] but rejects models that fail [`MarketModel::validate`].
    pub fn validated(mu: f64, sigma: f64, hazard: HazardModel, excess: ExcessReturnProfile) -> Result<Self> {
        let m = Self::new(mu, sigma, hazard, excess)?;
        let report = m.validate(1024);
        if report.passed() {
            Ok(m)
        } else {
            Err(Error::Validation(report))
        }
    }

    pub fn with_mu(&self, mu: f64) -> Self {
        Self { mu, ..self.clone() }
    }

    pub fn horizon(&self) -> f64 {
        self.hazard.horizon()
    }

    pub fn kappa(&self, t: f64) -> f64 {
        self.hazard.kappa(t)
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.excess.phi(&self.hazard, t)
    }

    pub fn phi_prime(&self, t: f64) -> f64 {
        self.excess.phi_prime(&self.hazard, t)
    }

    pub fn phi_second(&self, t: f64) -> f64 {
        self.excess.phi_second(&self.hazard, t)
    }

    /// `δ = φ'/κ`, with `δ = 0` whenever `φ' = 0`.
    pub fn delta(&self, t: f64) -> f64 {
        let q = self.phi_prime(t);
        if q == 0.0 {
            0.0
        } else {
            q / self.kappa(t)
        }
    }

    /// Relative jump size at `t`, checked against the domain and `[0, 1]`.
    pub fn jump_size(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t < self.horizon()) {
            return Err(Error::Domain { what: "jump time", value: t });
        }
        let d = self.delta(t);
        if !(-1e-12..=1.0 + 1e-12).contains(&d) {
            let report = ValidationReport {
                points_checked: 1,
                violations: vec![Violation {
                    kind: if d < 0.0 { ViolationKind::NegativeExcessReturn } else { ViolationKind::ExcessAboveHazard },
                    t,
                }],
            };
            return Err(Error::Validation(report));
        }
        Ok(d.clamp(0.0, 1.0))
    }

    /// Grid checks of the standing assumptions on `n_check` points clustered toward `T`.
    pub fn validate(&self, n_check: usize) -> ValidationReport {
        let n = n_check.max(2);
        let horizon = self.horizon();
        let mut violations: Vec<Violation> = Vec::new();
        let mut push = |kind: ViolationKind, t: f64| {
            if !violations.iter().any(|v| v.kind == kind) {
                violations.push(Violation { kind, t });
            }
        };
        if let HazardFamily::Lppl(l) = self.hazard.family() {
            if !(l.c.abs() < l.b) {
                push(ViolationKind::LpplPositivity, 0.0);
            }
        }
        if self.phi(0.0).abs() > 1e-14 {
            push(ViolationKind::PhiNotZeroAtOrigin, 0.0);
        }
        for j in 0..n {
            let t = horizon * (0.5 * std::f64::consts::PI * j as f64 / n as f64).sin();
            let k = self.kappa(t);
            let q = self.phi_prime(t);
            if !k.is_finite() || !q.is_finite() {
                push(ViolationKind::NonFinite, t);
                continue;
            }
            if !(k > 0.0) {
                push(ViolationKind::NonPositiveHazard, t);
            }
            let slack = 1e-12 * k.abs().max(1.0);
            if q < -slack {
                push(ViolationKind::NegativeExcessReturn, t);
            }
            if q > k + slack {
                push(ViolationKind::ExcessAboveHazard, t);
            }
        }
        ValidationReport { points_checked: n, violations }
    }

    /// `∫₀ᵀ (κ − φ')`, analytically where the families allow it.
    pub fn integrability_defect(&self) -> Defect {
        match self.excess.analytic_defect(&self.hazard) {
            Some(Some(v)) => Defect::Finite(v),
            Some(None) => Defect::Infinite,
            None => {
                let f = |t: f64| self.kappa(t) - self.phi_prime(t);
                match integrate_to_horizon(f, 0.0, self.horizon()) {
                    HorizonIntegral::Finite { value, .. } => Defect::Finite(value),
                    HorizonIntegral::Divergent { .. } => Defect::Infinite,
                    HorizonIntegral::Indeterminate { .. } => Defect::Unknown,
                }
            }
        }
    }

    pub(crate) fn sampled_limsup_delta(&self) -> f64 {
        let horizon = self.horizon();
        (30..=45)
            .map(|k| self.delta(horizon - horizon * 0.5_f64.powi(k)))
            .fold(0.0, f64::max)
    }

    /// Martingale classification of the price under the physical measure.
    pub fn classify_under_p(&self) -> Classification {
        let atom = self.hazard.atom();
        let defect = self.integrability_defect();
        let limsup_delta = self.sampled_limsup_delta();
        let verdict = if self.mu != 0.0 {
            Verdict::NotLocalMartingaleUnderP
        } else {
            verdict_from(atom, defect)
        };
        Classification { verdict, atom, defect, limsup_delta }
    }
}

pub(crate) fn verdict_from(atom: f64, defect: Defect) -> Verdict {
    if atom > 0.0 {
        return Verdict::TrueMartingale;
    }
    match defect {
        Defect::Infinite => Verdict::TrueMartingale,
        Defect::Finite(_) => Verdict::StrictLocalMartingale,
        Defect::Unknown => Verdict::Indeterminate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hazard_model::{JumpSizeCurve, LpplHazard};

    fn uniform_full_jump() -> MarketModel {
        MarketModel::new(0.0, 0.2, HazardModel::uniform(1.0).unwrap(), ExcessReturnProfile::HazardExcess { alpha: 1.0, offset: 1.0 }).unwrap()
    }

    #[test]
    fn jump_sizes() {
        assert!((uniform_full_jump().jump_size(0.3).unwrap() - 0.3).abs() < 1e-15);
        let t4 = MarketModel::new(0.0, 0.2, HazardModel::uniform(1.0).unwrap(), ExcessReturnProfile::HazardExcess { alpha: 0.7, offset: 1.0 }).unwrap();
        assert!((t4.jump_size(0.5).unwrap() - 0.35).abs() < 1e-15);
        let z = MarketModel::new(0.1, 0.2, HazardModel::uniform(1.0).unwrap(), ExcessReturnProfile::Zero).unwrap();
        assert_eq!(z.jump_size(0.7).unwrap(), 0.0);
    }

    #[test]
    fn validation_examples() {
        let exp = HazardModel::exponential_cutoff(1.0, 1.0).unwrap();
        let ok = MarketModel::new(0.1, 0.2, exp.clone(), ExcessReturnProfile::Constant { alpha: 0.2 }).unwrap();
        assert!(ok.validate(1024).passed());
        let bad = MarketModel::new(0.1, 0.2, exp, ExcessReturnProfile::Constant { alpha: 1.5 }).unwrap();
        let r = bad.validate(1024);
        assert_eq!(r.first(ViolationKind::ExcessAboveHazard), Some(0.0));
        let l = HazardModel::lppl(LpplHazard { b: 1.0, c: 2.0, m: 0.5, omega: 6.0, psi: 0.0 }, 1.0).unwrap();
        let bad = MarketModel::new(0.1, 0.2, l, ExcessReturnProfile::Zero).unwrap();
        let r = bad.validate(1024);
        assert!(r.first(ViolationKind::LpplPositivity).is_some());
        assert!(r.first(ViolationKind::NonPositiveHazard).is_some());
    }

    #[test]
    fn classifications() {
        let c = uniform_full_jump().classify_under_p();
        assert_eq!(c.verdict, Verdict::StrictLocalMartingale);
        assert_eq!(c.defect, Defect::Finite(1.0));
        assert!(c.limsup_delta > 1.0 - 1e-3);
        let t4 = MarketModel::new(0.0, 0.2, HazardModel::uniform(1.0).unwrap(), ExcessReturnProfile::HazardExcess { alpha: 0.7, offset: 1.0 }).unwrap();
        assert_eq!(t4.classify_under_p().verdict, Verdict::TrueMartingale);
        let e = MarketModel::new(0.0, 0.2, HazardModel::exponential_cutoff(1.0, 1.0).unwrap(), ExcessReturnProfile::Constant { alpha: 0.2 }).unwrap();
        let c = e.classify_under_p();
        assert_eq!(c.verdict, Verdict::TrueMartingale);
        assert!((c.atom - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(e.with_mu(0.1).classify_under_p().verdict, Verdict::NotLocalMartingaleUnderP);
    }

    #[test]
    fn numeric_defect_for_relaxed_jls() {
        // LPPL with m = -0.5 and δ rising to 1 linearly: (1-δ)κ ~ s^{m}, integrable iff m > -1
        let l = HazardModel::lppl(LpplHazard { b: 1.0, c: 0.0, m: -0.5, omega: 0.0, psi: 0.0 }, 1.0).unwrap();
        let strict = MarketModel::new(0.0, 0.2, l.clone(), ExcessReturnProfile::JlsRelaxed(JumpSizeCurve::Linear { start: 0.2, end: 1.0 })).unwrap();
        let c = strict.classify_under_p();
        assert_eq!(c.verdict, Verdict::StrictLocalMartingale, "{c:?}");
        // exact value: ∫₀¹ 0.8 s^{-0.5} ds = 1.6
        match c.defect {
            Defect::Finite(v) => assert!((v - 1.6).abs() < 1e-8, "{v}"),
            d => panic!("{d:?}"),
        }
        let tm = MarketModel::new(0.0, 0.2, l, ExcessReturnProfile::JlsRelaxed(JumpSizeCurve::Linear { start: 0.2, end: 0.9 })).unwrap();
        assert_eq!(tm.classify_under_p().verdict, Verdict::TrueMartingale);
    }
}
