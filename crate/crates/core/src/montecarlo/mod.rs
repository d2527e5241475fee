//! Monte Carlo estimators under the physical measure and under tilted measures.
//!
//! Paths come in antithetic pairs sharing the crash time; the pair average is the sampling
//! unit for standard errors. Path values are computed in parallel and reduced in path order,
//! so results do not depend on the number of worker threads.

mod paths;
mod strategy;

use std::sync::Arc;

use rayon::prelude::*;

use crate::elmm::{build_tilted_measure, TiltedMeasure};
use crate::error::{Error, Result};
use crate::hazard_model::MarketModel;
use crate::numerics::NeumaierSum;
use crate::solver::{Preference, Solution};

pub use paths::{sample_crash_time, simulate_price_path, simulate_wealth_path, PricePath};
pub use strategy::Strategy;

use paths::{pair_rng, Engine};

/// Measure the paths are simulated under.
#[derive(Debug, Clone)]
pub enum Measure {
    P,
    /// Tilted measure: crash law `H`, drift-free price after the crash.
    Q(Arc<TiltedMeasure>),
}

impl Measure {
    /// The dual measure generated by `ŷ`.
    pub fn dual(solution: &Solution) -> Result<Self> {
        Ok(Self::Q(Arc::new(build_tilted_measure(solution.model(), &solution.tilt(), &[])?)))
    }
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub n_paths: usize,
    /// wealth-grid resolution
    pub n_steps: usize,
    pub seed: u64,
    pub measure: Measure,
    /// pre-crash fractions are frozen from `T(1 − ε_T)` on
    pub terminal_clip: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, n_steps: 1 << 10, seed: 0x5eed_b0b1, measure: Measure::P, terminal_clip: 1e-6 }
    }
}

impl SimConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64) -> Self {
        Self { n_paths, n_steps, seed, ..Self::default() }
    }

    pub fn under(mut self, measure: Measure) -> Self {
        self.measure = measure;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 1 {
            return Err(Error::InvalidParameter("n_paths must be at least 1".into()));
        }
        if self.n_steps < 2 {
            return Err(Error::InvalidParameter("n_steps must be at least 2".into()));
        }
        if !(self.terminal_clip >= 0.0 && self.terminal_clip < 1.0) {
            return Err(Error::InvalidParameter(format!("terminal clip must lie in [0, 1), got {}", self.terminal_clip)));
        }
        Ok(())
    }
}

/// What to estimate.
#[derive(Debug, Clone)]
pub enum Estimand {
    /// `E[U(X_T)]` for a strategy, under the configured measure.
    ExpectedUtility { strategy: Strategy, prefs: Preference },
    /// `E[S_T]` with `S_0 = 1`, under the configured measure.
    TerminalPrice,
    /// `E^Q̂[X_T]` of the optimal strategy under the dual measure; ignores the configured measure.
    DualBudget { strategy: Strategy, measure: Arc<TiltedMeasure>, capital: f64 },
}

impl Estimand {
    pub fn utility(strategy: Strategy, prefs: &Preference) -> Self {
        Self::ExpectedUtility { strategy, prefs: *prefs }
    }

    pub fn budget(solution: &Solution) -> Result<Self> {
        let Measure::Q(measure) = Measure::dual(solution)? else { unreachable!() };
        Ok(Self::DualBudget { strategy: Strategy::optimal(solution), measure, capital: solution.prefs().capital })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::ExpectedUtility { .. } => "E_U_of_XT",
            Self::TerminalPrice => "E_ST",
            Self::DualBudget { .. } => "EQ_XT",
        }
    }
}

/// Sample maximum and the share of paths larger than ten times the mean, in absolute value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailDiagnostics {
    pub sample_max: f64,
    pub tail_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub estimand: &'static str,
    pub tail: TailDiagnostics,
}

impl EstimatorResult {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn covers(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

fn reduce(values: &[[f64; 2]], n_paths: usize, seed: u64, estimand: &'static str) -> EstimatorResult {
    let n_pairs = values.len();
    let odd = n_paths % 2 == 1;
    let unit = |i: usize| if odd && i == n_pairs - 1 { values[i][0] } else { 0.5 * (values[i][0] + values[i][1]) };
    let mut total = NeumaierSum::new();
    for (i, v) in values.iter().enumerate() {
        total.add(v[0]);
        if !(odd && i == n_pairs - 1) {
            total.add(v[1]);
        }
    }
    let mean = total.value() / n_paths as f64;
    let unit_mean = (0..n_pairs).map(unit).collect::<NeumaierSum>().value() / n_pairs as f64;
    let ss = (0..n_pairs).map(|i| (unit(i) - unit_mean).powi(2)).collect::<NeumaierSum>().value();
    let std_error = if n_pairs > 1 { (ss / ((n_pairs - 1) * n_pairs) as f64).sqrt() } else { f64::NAN };
    let used = |i: usize| if odd && i == n_pairs - 1 { &values[i][..1] } else { &values[i][..] };
    let mut sample_max = f64::NEG_INFINITY;
    let mut above = 0usize;
    for i in 0..n_pairs {
        for &v in used(i) {
            sample_max = sample_max.max(v);
            // magnitudes, so negative utilities are measured the same way
            if v.abs() > 10.0 * mean.abs() {
                above += 1;
            }
        }
    }
    EstimatorResult {
        mean,
        std_error,
        n_paths,
        seed,
        estimand,
        tail: TailDiagnostics { sample_max, tail_fraction: above as f64 / n_paths as f64 },
    }
}

fn n_pairs(cfg: &SimConfig) -> u64 {
    cfg.n_paths.div_ceil(2) as u64
}

/// A strategy that loses all wealth at a crash is not admissible; the estimate stops there.
fn solvent(log_x: Option<[f64; 2]>, pair: u64) -> Result<[f64; 2]> {
    log_x.ok_or_else(|| {
        Error::Simulation(format!("pair {pair}: wealth is wiped out at the crash (strategy not admissible)"))
    })
}

fn utility_pair(log_x: Option<[f64; 2]>, prefs: &Preference, pair: u64) -> Result<[f64; 2]> {
    Ok(solvent(log_x, pair)?.map(|v| prefs.utility(prefs.capital * v.exp())))
}

fn collect(cfg: &SimConfig, f: impl Fn(u64) -> Result<[f64; 2]> + Sync + Send) -> Result<Vec<[f64; 2]>> {
    (0..n_pairs(cfg)).into_par_iter().map(f).collect()
}

pub fn estimate(model: &MarketModel, cfg: &SimConfig, estimand: &Estimand) -> Result<EstimatorResult> {
    let tag = estimand.tag();
    let values = match estimand {
        Estimand::TerminalPrice => {
            let engine = Engine::new(model, cfg)?;
            collect(cfg, |pair| engine.terminal_price_pair(&mut pair_rng(cfg.seed, pair)))?
        }
        Estimand::ExpectedUtility { strategy, prefs } => {
            let engine = Engine::new(model, cfg)?;
            let table = engine.wealth_table(strategy)?;
            collect(cfg, |pair| {
                let log_x = engine.wealth_pair(&table, strategy, &mut pair_rng(cfg.seed, pair))?;
                utility_pair(log_x, prefs, pair)
            })?
        }
        Estimand::DualBudget { strategy, measure, capital } => {
            let cfg_q = SimConfig { measure: Measure::Q(measure.clone()), ..cfg.clone() };
            let engine = Engine::new(model, &cfg_q)?;
            let table = engine.wealth_table(strategy)?;
            collect(cfg, |pair| {
                let log_x = engine.wealth_pair(&table, strategy, &mut pair_rng(cfg.seed, pair))?;
                Ok(solvent(log_x, pair)?.map(|v| capital * v.exp()))
            })?
        }
    };
    Ok(reduce(&values, cfg.n_paths, cfg.seed, tag))
}

/// `E[U(X^a_T) − U(X^b_T)]` with both strategies driven by the same draws.
pub fn estimate_utility_difference(
    model: &MarketModel,
    cfg: &SimConfig,
    a: &Strategy,
    b: &Strategy,
    prefs: &Preference,
) -> Result<EstimatorResult> {
    let engine = Engine::new(model, cfg)?;
    let (ta, tb) = (engine.wealth_table(a)?, engine.wealth_table(b)?);
    let values = collect(cfg, |pair| {
        let ua = utility_pair(engine.wealth_pair(&ta, a, &mut pair_rng(cfg.seed, pair))?, prefs, pair)?;
        let ub = utility_pair(engine.wealth_pair(&tb, b, &mut pair_rng(cfg.seed, pair))?, prefs, pair)?;
        Ok([ua[0] - ub[0], ua[1] - ub[1]])
    })?;
    Ok(reduce(&values, cfg.n_paths, cfg.seed, "E_U_diff"))
}
