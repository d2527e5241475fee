use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hazard_model::MarketModel;
use crate::numerics::Curve;
use crate::solver::{Preference, Solution};

type Fraction = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Deterministic pre-crash fraction of wealth in the stock, and a constant fraction after the crash.
#[derive(Clone)]
pub struct Strategy {
    pre: Fraction,
    post: f64,
    label: String,
}

impl fmt::Debug for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Strategy").field("label", &self.label).field("post", &self.post).finish()
    }
}

impl Strategy {
    pub fn new(label: impl Into<String>, pre: impl Fn(f64) -> f64 + Send + Sync + 'static, post: f64) -> Self {
        Self { pre: Arc::new(pre), post, label: label.into() }
    }

    pub fn constant(pi: f64) -> Self {
        Self::new(format!("constant {pi}"), move |_| pi, pi)
    }

    /// Merton fraction `μ/(pσ²)` before and after the crash.
    pub fn merton(model: &MarketModel, prefs: &Preference) -> Self {
        let pi = model.mu / (prefs.risk_aversion * model.sigma * model.sigma);
        Self { label: "merton".into(), ..Self::constant(pi) }
    }

    /// The optimal strategy `π̂` of a solution.
    pub fn optimal(solution: &Solution) -> Self {
        let s = Arc::new(solution.clone());
        let post = solution.merton_fraction();
        Self::new("optimal", move |t| s.optimal_fraction(t, false), post)
    }

    /// Myopic demand alone, from the curve `m(t, y, p) = 1`.
    pub fn myopic(solution: &Solution) -> Self {
        let model = solution.model().clone();
        let curve = solution.myopic().clone();
        let ps2 = solution.prefs().risk_aversion * model.sigma * model.sigma;
        let post = solution.merton_fraction();
        Self::new(
            "myopic",
            move |t| {
                let q = model.phi_prime(t);
                let y = curve.eval(t.min(curve.last_time()));
                (model.mu - if q == 0.0 { 0.0 } else { q * y }) / ps2
            },
            post,
        )
    }

    /// Pre-crash fractions tabulated on strictly increasing times, interpolated monotonically.
    pub fn tabulated(times: Vec<f64>, fractions: Vec<f64>, post: f64) -> Result<Self> {
        if times.len() < 2 || times.len() != fractions.len() || !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("strategy table needs at least two increasing times".into()));
        }
        if !fractions.iter().chain([&post]).all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("strategy fractions must be finite".into()));
        }
        let curve = Curve::monotone(times, fractions);
        let (a, b) = (curve.first_time(), curve.last_time());
        Ok(Self::new("tabulated", move |t| curve.eval(t.clamp(a, b)), post))
    }

    /// Both fractions multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let pre = self.pre.clone();
        Self { pre: Arc::new(move |t| c * pre(t)), post: c * self.post, label: format!("{c}*{}", self.label) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn pre_crash(&self, t: f64) -> f64 {
        (self.pre)(t)
    }

    pub fn post_crash(&self) -> f64 {
        self.post
    }
}
