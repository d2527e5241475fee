use std::sync::Arc;

use crate::error::{check_finite, Error, Result};
use crate::numerics::{bisect, pchip_slopes, Curve};

/// Log-periodic power-law hazard `κ(t) = (T−t)^(m−1) [B + C cos(ω log(T−t) − ψ)]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpplHazard {
    pub b: f64,
    pub c: f64,
    pub m: f64,
    pub omega: f64,
    pub psi: f64,
}

impl LpplHazard {
    fn theta(&self, s: f64) -> f64 {
        self.omega * s.ln() - self.psi
    }

    fn rate(&self, s: f64) -> f64 {
        s.powf(self.m - 1.0) * (self.b + self.c * self.theta(s).cos())
    }

    // d/ds of the rate, s = T - t
    fn rate_ds(&self, s: f64) -> f64 {
        let th = self.theta(s);
        s.powf(self.m - 2.0)
            * ((self.m - 1.0) * (self.b + self.c * th.cos()) - self.c * self.omega * th.sin())
    }

    /// Antiderivative in `s` of the rate: `P'(s) = rate(s)`.
    fn primitive(&self, s: f64) -> f64 {
        let th = self.theta(s);
        let (m, w) = (self.m, self.omega);
        if m == 0.0 {
            let osc = if w == 0.0 { th.cos() * s.ln() } else { th.sin() / w };
            self.b * s.ln() + self.c * osc
        } else {
            let sm = s.powf(m);
            self.b * sm / m + self.c * sm * (m * th.cos() + w * th.sin()) / (m * m + w * w)
        }
    }
}

/// Hazard given by knots of the distribution function; `−log(1−G)` is interpolated
/// by a monotone cubic so the hazard is the exact derivative of the interpolant.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedHazard {
    knots: Vec<f64>,
    cdf: Vec<f64>,
    log_survival: Curve,
}

impl TabulatedHazard {
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn cdf_values(&self) -> &[f64] {
        &self.cdf
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HazardFamily {
    Lppl(LpplHazard),
    ExponentialCutoff { rate: f64 },
    UniformOnHorizon,
    Tabulated(Arc<TabulatedHazard>),
}

/// Law of the crash time on `(0, T]`, possibly with an atom at `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardModel {
    family: HazardFamily,
    horizon: f64,
}

/// Anything that can be sampled by inverting a cumulative hazard.
pub trait CrashDistribution {
    fn horizon(&self) -> f64;
    /// `−log(1 − F(t))` for `t < T`.
    fn cumulative_hazard(&self, t: f64) -> f64;
    /// Left limit of the cumulative hazard at `T`; infinite when there is no atom.
    fn terminal_cumulative_hazard(&self) -> f64;
    /// Smallest `t` with cumulative hazard at least `level`, or `T` beyond the terminal level.
    fn inverse_cumulative_hazard(&self, level: f64) -> f64;

    fn cdf(&self, t: f64) -> f64 {
        if t >= self.horizon() {
            1.0
        } else if t <= 0.0 {
            0.0
        } else {
            -(-self.cumulative_hazard(t)).exp_m1()
        }
    }

    fn atom(&self) -> f64 {
        (-self.terminal_cumulative_hazard()).exp()
    }
}

fn check_horizon(horizon: f64) -> Result<f64> {
    if horizon.is_finite() && horizon > 0.0 {
        Ok(horizon)
    } else {
        Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")))
    }
}

impl HazardModel {
    /// LPPL hazard. Positivity `|C| < B` is not enforced here; `validate` reports it.
    pub fn lppl(params: LpplHazard, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        for (n, v) in [("B'", params.b), ("C'", params.c), ("m", params.m), ("omega", params.omega), ("psi", params.psi)] {
            check_finite(n, v)?;
        }
        Ok(Self { family: HazardFamily::Lppl(params), horizon })
    }

    pub fn exponential_cutoff(rate: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidParameter(format!("rate must be positive, got {rate}")));
        }
        Ok(Self { family: HazardFamily::ExponentialCutoff { rate }, horizon })
    }

    pub fn uniform(horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(Self { family: HazardFamily::UniformOnHorizon, horizon })
    }

    /// Tabulated law. Knots start at 0 and end at the horizon; `cdf` starts at 0,
    /// increases strictly and stays below 1, the remainder being the atom at `T`.
    pub fn tabulated(knots: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if knots.len() < 3 || knots.len() != cdf.len() {
            return Err(Error::InvalidParameter(
                "tabulated hazard needs at least 3 knots and matching values".into(),
            ));
        }
        if knots[0] != 0.0 || cdf[0] != 0.0 {
            return Err(Error::InvalidParameter("tabulated hazard must start at (0, 0)".into()));
        }
        if !knots.windows(2).all(|w| w[1] > w[0]) || !cdf.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("knots and values must increase strictly".into()));
        }
        let last = cdf[cdf.len() - 1];
        if !(last < 1.0) || knots.iter().chain(cdf.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("values must be finite and below 1".into()));
        }
        let horizon = check_horizon(knots[knots.len() - 1])?;
        let ls: Vec<f64> = cdf.iter().map(|g| -(-g).ln_1p()).collect();
        let mut slopes = pchip_slopes(&knots, &ls);
        // keep the hazard strictly positive at the ends
        let n = knots.len();
        let first = (ls[1] - ls[0]) / (knots[1] - knots[0]);
        let lastd = (ls[n - 1] - ls[n - 2]) / (knots[n - 1] - knots[n - 2]);
        if slopes[0] <= 0.0 {
            slopes[0] = 0.5 * first;
        }
        if slopes[n - 1] <= 0.0 {
            slopes[n - 1] = 0.5 * lastd;
        }
        let log_survival = Curve::hermite(knots.clone(), ls, slopes);
        Ok(Self {
            family: HazardFamily::Tabulated(Arc::new(TabulatedHazard { knots, cdf, log_survival })),
            horizon,
        })
    }

    pub fn family(&self) -> &HazardFamily {
        &self.family
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Hazard rate with a domain check.
    pub fn hazard_rate(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t < self.horizon) {
            return Err(Error::Domain { what: "hazard time", value: t });
        }
        Ok(self.kappa(t))
    }

    /// Hazard rate without domain checks.
    pub fn kappa(&self, t: f64) -> f64 {
        match &self.family {
            HazardFamily::Lppl(l) => l.rate(self.horizon - t),
            HazardFamily::ExponentialCutoff { rate } => *rate,
            HazardFamily::UniformOnHorizon => 1.0 / (self.horizon - t),
            HazardFamily::Tabulated(tab) => tab.log_survival.derivative(t.clamp(0.0, self.horizon)),
        }
    }

    pub fn kappa_derivative(&self, t: f64) -> f64 {
        match &self.family {
            HazardFamily::Lppl(l) => -l.rate_ds(self.horizon - t),
            HazardFamily::ExponentialCutoff { .. } => 0.0,
            HazardFamily::UniformOnHorizon => {
                let s = self.horizon - t;
                1.0 / (s * s)
            }
            HazardFamily::Tabulated(tab) => tab.log_survival.second_derivative(t.clamp(0.0, self.horizon)),
        }
    }

    /// `Λ(t) = ∫₀ᵗ κ`, for `t < T`; at `t ≥ T` the left limit (possibly infinite).
    pub fn cumulative(&self, t: f64) -> f64 {
        if t >= self.horizon {
            return self.terminal_cumulative();
        }
        match &self.family {
            HazardFamily::Lppl(l) => l.primitive(self.horizon) - l.primitive(self.horizon - t),
            HazardFamily::ExponentialCutoff { rate } => rate * t,
            HazardFamily::UniformOnHorizon => -(-t / self.horizon).ln_1p(),
            HazardFamily::Tabulated(tab) => tab.log_survival.eval(t),
        }
    }

    pub fn terminal_cumulative(&self) -> f64 {
        match &self.family {
            HazardFamily::Lppl(l) => {
                if l.m <= 0.0 {
                    f64::INFINITY
                } else {
                    l.primitive(self.horizon)
                }
            }
            HazardFamily::ExponentialCutoff { rate } => rate * self.horizon,
            HazardFamily::UniformOnHorizon => f64::INFINITY,
            HazardFamily::Tabulated(tab) => {
                let v = tab.log_survival.values();
                v[v.len() - 1]
            }
        }
    }

    /// Whether `∫₀ᵀ κ < ∞`, decided analytically per family.
    pub fn hazard_integrable(&self) -> bool {
        self.terminal_cumulative().is_finite()
    }

    pub fn atom(&self) -> f64 {
        (-self.terminal_cumulative()).exp()
    }

    pub fn distribution(&self, t: f64) -> f64 {
        if t >= self.horizon {
            1.0
        } else if t <= 0.0 {
            0.0
        } else {
            -(-self.cumulative(t)).exp_m1()
        }
    }

    /// Density `G'(t) = κ(t)(1 − G(t))` on `[0, T)`.
    pub fn density(&self, t: f64) -> f64 {
        self.kappa(t) * (-self.cumulative(t)).exp()
    }

    /// Survival `1 − G(t)` (zero at `T`) and the atom at `T`.
    pub fn survival_and_atom(&self, t: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::Domain { what: "survival time", value: t });
        }
        let surv = if t == self.horizon { 0.0 } else { (-self.cumulative(t)).exp() };
        Ok((surv, self.atom()))
    }
}

impl CrashDistribution for HazardModel {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn cumulative_hazard(&self, t: f64) -> f64 {
        self.cumulative(t)
    }

    fn terminal_cumulative_hazard(&self) -> f64 {
        self.terminal_cumulative()
    }

    fn inverse_cumulative_hazard(&self, level: f64) -> f64 {
        let horizon = self.horizon;
        if level <= 0.0 {
            return 0.0;
        }
        if level >= self.terminal_cumulative() {
            return horizon;
        }
        match &self.family {
            HazardFamily::ExponentialCutoff { rate } => level / rate,
            HazardFamily::UniformOnHorizon => -horizon * (-level).exp_m1(),
            _ => {
                let hi = horizon * (1.0 - f64::EPSILON);
                if self.cumulative(hi) < level {
                    return hi;
                }
                bisect(|t| self.cumulative(t) - level, 0.0, hi, 4.0 * f64::EPSILON * horizon)
                    .unwrap_or(hi)
            }
        }
    }
}

/// Parameters of the LPPL log-price `A + B(T−t)^m + C(T−t)^m cos(ω log(T−t) − ψ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpplLogPrice {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
    pub omega: f64,
    pub psi: f64,
    pub critical_time: f64,
}

pub fn lppl_log_price(params: &LpplLogPrice, t: f64) -> Result<f64> {
    if !(params.m > 0.0 && params.m < 1.0) {
        return Err(Error::Domain {
            what: "LPPL exponent m (use the hazard representation outside (0,1))",
            value: params.m,
        });
    }
    if !(t < params.critical_time) {
        return Err(Error::Domain { what: "LPPL time", value: t });
    }
    let s = params.critical_time - t;
    let sm = s.powf(params.m);
    Ok(params.a + params.b * sm + params.c * sm * (params.omega * s.ln() - params.psi).cos())
}
