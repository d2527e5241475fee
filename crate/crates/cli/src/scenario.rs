//! Scenario files: TOML, or JSON when the extension is `.json`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bubble_core::{
    ExcessReturnProfile, HazardModel, JumpSizeCurve, LpplHazard, MarketModel, Measure, Preference, SimConfig,
    SolverOptions,
};
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 0x5eed_b0b1;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Number(f64),
    List(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Family {
    pub family: String,
    #[serde(default)]
    pub params: BTreeMap<String, Param>,
}

impl Family {
    fn number(&self, what: &str, key: &str) -> Result<f64, CliError> {
        match self.params.get(key) {
            Some(Param::Number(v)) => Ok(*v),
            Some(Param::List(_)) => Err(CliError::Parse(format!("{what}.params.{key} must be a number"))),
            None => Err(CliError::Parse(format!("{what} family '{}' needs params.{key}", self.family))),
        }
    }

    fn number_or(&self, what: &str, key: &str, default: f64) -> Result<f64, CliError> {
        if self.params.contains_key(key) {
            self.number(what, key)
        } else {
            Ok(default)
        }
    }

    fn list(&self, what: &str, key: &str) -> Result<Vec<f64>, CliError> {
        match self.params.get(key) {
            Some(Param::List(v)) => Ok(v.clone()),
            Some(Param::Number(_)) => Err(CliError::Parse(format!("{what}.params.{key} must be a list"))),
            None => Err(CliError::Parse(format!("{what} family '{}' needs params.{key}", self.family))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Market {
    pub mu: f64,
    pub sigma: f64,
    pub horizon: f64,
}

impl Default for Market {
    fn default() -> Self {
        Self { mu: 0.1, sigma: 0.2, horizon: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Prefs {
    pub p: f64,
    pub capital: f64,
}

impl Default for Prefs {
    fn default() -> Self {
        Self { p: 4.0, capital: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grid {
    pub points: usize,
    pub terminal_gap: f64,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self { points: o.grid_points, terminal_gap: o.terminal_gap, tolerance: o.tolerance, max_sweeps: o.max_sweeps }
    }
}

/// Strategy to simulate: a name, a constant fraction, or a CSV column of pre-crash fractions.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum StrategySpec {
    Named(String),
    Constant { constant: f64 },
    Table { table: PathBuf, #[serde(default = "pi_hat")] column: String },
}

fn pi_hat() -> String {
    "pi_hat".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Simulation {
    pub paths: usize,
    pub steps: usize,
    pub seed: Option<u64>,
    pub measure: String,
    pub terminal_clip: f64,
    pub estimands: Vec<String>,
    pub strategy: StrategySpec,
}

impl Default for Simulation {
    fn default() -> Self {
        let c = SimConfig::default();
        Self {
            paths: c.n_paths,
            steps: c.n_steps,
            seed: None,
            measure: "P".into(),
            terminal_clip: c.terminal_clip,
            estimands: vec!["utility".into()],
            strategy: StrategySpec::Named("optimal".into()),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<f64>,
    #[serde(default = "welfare")]
    pub command: String,
}

fn welfare() -> String {
    "welfare".into()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub market: Market,
    #[serde(default = "default_hazard")]
    pub hazard: Family,
    #[serde(default = "default_excess")]
    pub excess: Family,
    #[serde(default)]
    pub preference: Prefs,
    #[serde(default)]
    pub grid: Grid,
    #[serde(default)]
    pub simulation: Simulation,
    pub sweep: Option<Sweep>,
    /// Directory that relative paths inside the file are resolved against.
    #[serde(skip)]
    pub base: PathBuf,
}

fn default_hazard() -> Family {
    Family { family: "exponential_cutoff".into(), params: BTreeMap::from([("rate".into(), Param::Number(1.0))]) }
}

fn default_excess() -> Family {
    Family { family: "constant".into(), params: BTreeMap::from([("alpha".into(), Param::Number(0.2))]) }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        let mut s: Scenario = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?
        };
        s.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn hazard_model(&self) -> Result<HazardModel, CliError> {
        let h = &self.hazard;
        let horizon = self.market.horizon;
        let model = match h.family.as_str() {
            "lppl" => {
                let params = LpplHazard {
                    b: h.number("hazard", "b")?,
                    c: h.number_or("hazard", "c", 0.0)?,
                    m: h.number("hazard", "m")?,
                    omega: h.number_or("hazard", "omega", 0.0)?,
                    psi: h.number_or("hazard", "psi", 0.0)?,
                };
                HazardModel::lppl(params, horizon)?
            }
            "exponential_cutoff" => HazardModel::exponential_cutoff(h.number_or("hazard", "rate", 1.0)?, horizon)?,
            "uniform" => HazardModel::uniform(horizon)?,
            "tabulated" => {
                let knots = h.list("hazard", "knots")?;
                if knots.last() != Some(&horizon) {
                    return Err(CliError::Parse("hazard.params.knots must end at market.horizon".into()));
                }
                HazardModel::tabulated(knots, h.list("hazard", "cdf")?)?
            }
            other => return Err(CliError::Parse(format!("unknown hazard family '{other}'"))),
        };
        Ok(model)
    }

    pub fn excess_profile(&self) -> Result<ExcessReturnProfile, CliError> {
        let e = &self.excess;
        let profile = match e.family.as_str() {
            "zero" => ExcessReturnProfile::Zero,
            "constant" => ExcessReturnProfile::Constant { alpha: e.number("excess", "alpha")? },
            "linear_ramp" => ExcessReturnProfile::LinearRamp { beta: e.number("excess", "beta")? },
            "constant_jump_size" => ExcessReturnProfile::ConstantJumpSize { delta: e.number("excess", "delta")? },
            "hazard_excess" => ExcessReturnProfile::HazardExcess {
                alpha: e.number("excess", "alpha")?,
                offset: e.number_or("excess", "offset", 0.0)?,
            },
            "jls_relaxed" => ExcessReturnProfile::JlsRelaxed(JumpSizeCurve::Linear {
                start: e.number("excess", "start")?,
                end: e.number("excess", "end")?,
            }),
            other => return Err(CliError::Parse(format!("unknown excess family '{other}'"))),
        };
        Ok(profile)
    }

    pub fn model(&self) -> Result<MarketModel, CliError> {
        let m = &self.market;
        Ok(MarketModel::validated(m.mu, m.sigma, self.hazard_model()?, self.excess_profile()?)?)
    }

    pub fn prefs(&self) -> Result<Preference, CliError> {
        Ok(Preference::new(self.preference.p, self.preference.capital)?)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            grid_points: self.grid.points,
            terminal_gap: self.grid.terminal_gap,
            tolerance: self.grid.tolerance,
            max_sweeps: self.grid.max_sweeps,
            ..SolverOptions::default()
        }
    }

    pub fn under_q(&self) -> Result<bool, CliError> {
        match self.simulation.measure.as_str() {
            "P" | "p" => Ok(false),
            "Q" | "q" => Ok(true),
            other => Err(CliError::Parse(format!("simulation.measure must be P or Q, got '{other}'"))),
        }
    }

    pub fn sim_config(&self, seed: u64) -> SimConfig {
        SimConfig {
            n_paths: self.simulation.paths,
            n_steps: self.simulation.steps,
            seed,
            measure: Measure::P,
            terminal_clip: self.simulation.terminal_clip,
        }
    }

    /// Value shown in the profile column of welfare tables.
    pub fn profile_id(&self) -> String {
        match self.excess.params.get("alpha") {
            Some(Param::Number(a)) => crate::output::num(*a),
            _ => self.excess.family.clone(),
        }
    }

    /// Copy with one parameter replaced. Bare names look in the excess, then the hazard params.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self, CliError> {
        let mut s = self.clone();
        match name {
            "mu" => s.market.mu = value,
            "sigma" => s.market.sigma = value,
            "horizon" => s.market.horizon = value,
            "p" => s.preference.p = value,
            "capital" => s.preference.capital = value,
            _ => {
                let (family, key) = match name.split_once('.') {
                    Some(("hazard", k)) => (&mut s.hazard, k),
                    Some(("excess", k)) => (&mut s.excess, k),
                    Some(_) => return Err(CliError::Parse(format!("unknown sweep parameter '{name}'"))),
                    None if s.excess.params.contains_key(name) => (&mut s.excess, name),
                    None if s.hazard.params.contains_key(name) => (&mut s.hazard, name),
                    None => return Err(CliError::Parse(format!("unknown sweep parameter '{name}'"))),
                };
                family.params.insert(key.to_string(), Param::Number(value));
            }
        }
        Ok(s)
    }
}
