use std::time::Instant;

use bubble_core::{
    classify_under_q, decompose, estimate, safe_rates, solve_optimal, Defect, Estimand,
    MarketModel, Measure, Preference, Solution, Strategy,
};
use clap::ValueEnum;
use rayon::prelude::*;

use crate::error::CliError;
use crate::output::{num, Table};
use crate::scenario::{Scenario, StrategySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Classify,
    Solve,
    Decompose,
    Welfare,
    Simulate,
    Sweep,
}

impl Command {
    fn parse(name: &str) -> Result<Self, CliError> {
        Self::from_str(name, true).map_err(|_| CliError::Parse(format!("unknown command '{name}'")))
    }
}

/// Settings from the command line that override the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub grid: Option<usize>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub under_q: bool,
    pub tol: Option<f64>,
}

impl Overrides {
    fn apply(&self, s: &mut Scenario) {
        if let Some(n) = self.grid {
            s.grid.points = n;
        }
        if let Some(n) = self.paths {
            s.simulation.paths = n;
        }
        if let Some(t) = self.tol {
            s.grid.tolerance = t;
        }
        if self.under_q {
            s.simulation.measure = "Q".into();
        }
    }

    fn seed(&self, s: &Scenario) -> u64 {
        self.seed.or(s.simulation.seed).unwrap_or(crate::scenario::DEFAULT_SEED)
    }
}

pub fn run(command: Command, scenario: &Scenario, overrides: &Overrides) -> Result<Table, CliError> {
    let mut s = scenario.clone();
    overrides.apply(&mut s);
    let seed = overrides.seed(&s);
    match command {
        Command::Sweep => sweep(&s, seed),
        other => run_point(other, &s, seed),
    }
}

fn run_point(command: Command, s: &Scenario, seed: u64) -> Result<Table, CliError> {
    match command {
        Command::Classify => classify(s),
        Command::Solve => solve_table(s),
        Command::Decompose => decompose_table(s),
        Command::Welfare => welfare(s),
        Command::Simulate => simulate(s, seed),
        Command::Sweep => Err(CliError::Parse("a sweep cannot run another sweep".into())),
    }
}

fn solve(s: &Scenario) -> Result<(MarketModel, Preference, Solution), CliError> {
    let model = s.model()?;
    let prefs = s.prefs()?;
    let sol = solve_optimal(&model, &prefs, &s.solver_options())?;
    Ok((model, prefs, sol))
}

fn classify(s: &Scenario) -> Result<Table, CliError> {
    let model = s.model()?;
    let c = if s.under_q()? {
        let (_, _, sol) = solve(s)?;
        classify_under_q(&model, &sol.tilt())?
    } else {
        model.classify_under_p()
    };
    let defect = match c.defect {
        Defect::Finite(v) => num(v),
        Defect::Infinite => "inf".into(),
        Defect::Unknown => "unknown".into(),
    };
    let mut t = Table::new(&["verdict", "atom", "defect", "limsup_delta"]);
    t.push(vec![format!("{:?}", c.verdict), num(c.atom), defect, num(c.limsup_delta)]);
    Ok(t)
}

fn solve_table(s: &Scenario) -> Result<Table, CliError> {
    let (_, _, sol) = solve(s)?;
    let mut t = Table::new(&["t", "y_hat", "y_star_lower", "y_star_upper", "pi_hat", "residual"]);
    let (y, lo, hi) = (sol.curve().values(), sol.lower_bracket().values(), sol.upper_bracket().values());
    for (i, &u) in sol.grid().iter().enumerate() {
        t.push(vec![num(u), num(y[i]), num(lo[i]), num(hi[i]), num(sol.optimal_fraction(u, false)), num(sol.residuals()[i])]);
    }
    Ok(t)
}

fn decompose_table(s: &Scenario) -> Result<Table, CliError> {
    let (_, _, sol) = solve(s)?;
    let d = decompose(&sol);
    let mut t = Table::new(&["t", "pi_m", "pi_h"]);
    for (i, &u) in d.times().iter().enumerate() {
        t.push(vec![num(u), num(d.myopic.values()[i]), num(d.hedging.values()[i])]);
    }
    Ok(t)
}

fn welfare(s: &Scenario) -> Result<Table, CliError> {
    let (model, prefs, sol) = solve(s)?;
    let w = safe_rates(&sol);
    let mut t = Table::new(&["p", "mu", "sigma", "alpha_or_profile", "CE", "ESR", "ESR_BS", "rESRL"]);
    t.push(vec![
        num(prefs.risk_aversion),
        num(model.mu),
        num(model.sigma),
        s.profile_id(),
        num(w.ce),
        num(w.esr),
        num(w.esr_bs),
        num(w.resrl),
    ]);
    Ok(t)
}

/// Pre-crash fractions from a CSV column, keyed by its `t` column.
fn table_strategy(s: &Scenario, path: &std::path::Path, column: &str, post: f64) -> Result<Strategy, CliError> {
    let path = if path.is_relative() { s.base.join(path) } else { path.to_path_buf() };
    let mut r = csv::Reader::from_path(&path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    let header = r.headers()?.clone();
    let find = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| CliError::Parse(format!("{}: no column '{name}'", path.display())))
    };
    let (ti, pi) = (find("t")?, find(column)?);
    let (mut times, mut fractions) = (Vec::new(), Vec::new());
    for rec in r.records() {
        let rec = rec?;
        let get = |i: usize| {
            rec[i].trim().parse::<f64>().map_err(|e| CliError::Parse(format!("{}: '{}': {e}", path.display(), &rec[i])))
        };
        times.push(get(ti)?);
        fractions.push(get(pi)?);
    }
    Ok(Strategy::tabulated(times, fractions, post)?)
}

fn simulate(s: &Scenario, seed: u64) -> Result<Table, CliError> {
    let model = s.model()?;
    let prefs = s.prefs()?;
    let under_q = s.under_q()?;
    let uses_strategy = s.simulation.estimands.iter().any(|e| e == "utility");
    let needs_solution = under_q
        || s.simulation.estimands.iter().any(|e| e == "budget")
        || uses_strategy && matches!(&s.simulation.strategy, StrategySpec::Named(n) if n == "optimal" || n == "myopic");
    let sol = if needs_solution { Some(solve_optimal(&model, &prefs, &s.solver_options())?) } else { None };
    let merton = model.mu / (prefs.risk_aversion * model.sigma * model.sigma);
    let strategy = match &s.simulation.strategy {
        _ if !uses_strategy => Strategy::constant(0.0),
        StrategySpec::Named(n) => match (n.as_str(), &sol) {
            ("optimal", Some(sol)) => Strategy::optimal(sol),
            ("myopic", Some(sol)) => Strategy::myopic(sol),
            ("merton", _) => Strategy::merton(&model, &prefs),
            _ => return Err(CliError::Parse(format!("unknown strategy '{n}'"))),
        },
        StrategySpec::Constant { constant } => Strategy::constant(*constant),
        StrategySpec::Table { table, column } => table_strategy(s, table, column, merton)?,
    };
    let mut cfg = s.sim_config(seed);
    if let (true, Some(sol)) = (under_q, &sol) {
        cfg.measure = Measure::dual(sol)?;
    }
    let mut t = Table::new(&["estimand", "mean", "stderr", "n_paths", "seed", "runtime_ms", "sample_max", "tail_fraction"]);
    for name in &s.simulation.estimands {
        let (label, estimand) = match name.as_str() {
            "utility" => (format!("E_U_of_XT[{}]", strategy.label()), Estimand::utility(strategy.clone(), &prefs)),
            "terminal_price" => ("E_ST".to_string(), Estimand::TerminalPrice),
            "budget" => ("EQ_XT".to_string(), Estimand::budget(sol.as_ref().expect("solved above"))?),
            other => return Err(CliError::Parse(format!("unknown estimand '{other}'"))),
        };
        let start = Instant::now();
        let r = estimate(&model, &cfg, &estimand)?;
        let ms = start.elapsed().as_millis();
        t.push(vec![
            label,
            num(r.mean),
            num(r.std_error),
            r.n_paths.to_string(),
            r.seed.to_string(),
            ms.to_string(),
            num(r.tail.sample_max),
            num(r.tail.tail_fraction),
        ]);
    }
    Ok(t)
}

/// Seed of one sweep point; it depends on the value, not on its position in the list.
fn point_seed(seed: u64, value: f64) -> u64 {
    let mut z = seed ^ value.to_bits().wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn sweep(s: &Scenario, seed: u64) -> Result<Table, CliError> {
    let spec = s.sweep.as_ref().ok_or_else(|| CliError::Parse("sweep needs a [sweep] section".into()))?;
    let command = Command::parse(&spec.command)?;
    if command == Command::Sweep {
        return Err(CliError::Parse("a sweep cannot run another sweep".into()));
    }
    if spec.values.is_empty() {
        return Err(CliError::Parse("sweep.values is empty".into()));
    }
    let blocks: Vec<Result<Table, CliError>> = spec
        .values
        .par_iter()
        .map(|&v| {
            let point = s.with_parameter(&spec.parameter, v)?;
            Ok(run_point(command, &point, point_seed(seed, v))?.labelled(&spec.parameter, &num(v)))
        })
        .collect();
    let mut out: Option<Table> = None;
    for b in blocks {
        let b = b?;
        match &mut out {
            None => out = Some(b),
            Some(t) => t.rows.extend(b.rows),
        }
    }
    Ok(out.expect("at least one sweep value"))
}
