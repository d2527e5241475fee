//! Path construction. Every antithetic pair owns one ChaCha stream; its draws are the crash
//! uniform, one bridge normal for the step containing the crash, then one normal per step.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{Measure, SimConfig, Strategy};
use crate::elmm::TiltedMeasure;
use crate::error::{Error, Result};
use crate::hazard_model::{CrashDistribution, MarketModel};

/// Generalized inverse `inf{t : F(t) ≥ u}`; `T` once `u` exceeds `F(T−)`.
pub fn sample_crash_time<D: CrashDistribution + ?Sized>(dist: &D, u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain { what: "crash uniform", value: u });
    }
    Ok(dist.inverse_cumulative_hazard(-(-u).ln_1p()))
}

/// Crash time and prices on the simulation grid (the last entry is `S_T`).
#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub crash_time: f64,
    pub times: Vec<f64>,
    pub prices: Vec<f64>,
}

pub(crate) fn pair_rng(seed: u64, pair: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Deterministic ingredients of the dynamics under the chosen measure on a uniform grid.
pub(crate) struct Engine<'a> {
    model: &'a MarketModel,
    tilt: Option<&'a TiltedMeasure>,
    pub times: Vec<f64>,
    /// cumulative pre-crash drift `∫₀ᵗ` of the drift rate of `S`, at the grid times
    drift: Vec<f64>,
    mu_post: f64,
    dt: f64,
    clip: f64,
}

/// Where a path crashes relative to the grid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Crash {
    pub time: f64,
    /// step containing the crash, or `n_steps` when it happens at `T`
    pub step: usize,
}

impl<'a> Engine<'a> {
    pub fn new(model: &'a MarketModel, cfg: &'a SimConfig) -> Result<Self> {
        cfg.validate()?;
        let horizon = model.horizon();
        let tilt = match &cfg.measure {
            Measure::P => None,
            Measure::Q(m) => {
                if m.horizon() != horizon {
                    return Err(Error::InvalidParameter("tilted measure and model have different horizons".into()));
                }
                Some(m.as_ref())
            }
        };
        let n = cfg.n_steps;
        let dt = horizon / n as f64;
        let times: Vec<f64> = (0..=n).map(|j| if j == n { horizon } else { horizon * j as f64 / n as f64 }).collect();
        let mut engine = Self {
            model,
            tilt,
            drift: Vec::new(),
            times,
            mu_post: if tilt.is_some() { 0.0 } else { model.mu },
            dt,
            clip: horizon * (1.0 - cfg.terminal_clip),
        };
        engine.drift = engine.times.iter().map(|&t| engine.drift_at(t)).collect();
        Ok(engine)
    }

    /// `μt + φ(t)` under P, `φ(t) + ∫₀ᵗ φ'y` under Q.
    fn drift_at(&self, t: f64) -> f64 {
        let phi = if self.model.excess.is_zero() { 0.0 } else { self.model.phi(t) };
        match self.tilt {
            None => self.model.mu * t + phi,
            Some(m) => phi + if t >= self.model.horizon() { m.drift_shift(self.model.horizon() * (1.0 - f64::EPSILON)) } else { m.drift_shift(t) },
        }
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn crash(&self, u: f64) -> Result<Crash> {
        let time = match self.tilt {
            None => sample_crash_time(&self.model.hazard, u)?,
            Some(m) => sample_crash_time(m, u)?,
        };
        let n = self.n_steps();
        if time >= self.model.horizon() {
            return Ok(Crash { time: self.model.horizon(), step: n });
        }
        let mut k = ((time / self.dt) as usize).min(n - 1);
        while k > 0 && self.times[k] > time {
            k -= 1;
        }
        while k + 1 < n && self.times[k + 1] <= time {
            k += 1;
        }
        Ok(Crash { time, step: k })
    }

    fn fraction(&self, strategy: &Strategy, t: f64) -> f64 {
        strategy.pre_crash(t.min(self.clip))
    }

    /// Pre-computed per-step terms of `log X` for a strategy.
    pub fn wealth_table(&self, strategy: &Strategy) -> Result<WealthTable> {
        let s2 = self.model.sigma * self.model.sigma;
        let n = self.n_steps();
        let mut pi = Vec::with_capacity(n);
        let mut det = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        det.push(0.0);
        for j in 0..n {
            let p = self.fraction(strategy, self.times[j]);
            if !p.is_finite() {
                return Err(Error::Simulation(format!("strategy is not finite at t = {}", self.times[j])));
            }
            let h = self.times[j + 1] - self.times[j];
            let d = self.drift[j + 1] - self.drift[j];
            // zero fractions contribute nothing even where the drift blows up
            if p != 0.0 {
                acc += p * d - 0.5 * p * p * s2 * h;
            }
            pi.push(p);
            det.push(acc);
        }
        let post = strategy.post_crash();
        Ok(WealthTable { pi, det, post, post_rate: post * self.mu_post - 0.5 * post * post * s2 })
    }

    pub fn draw_crash(&self, rng: &mut ChaCha8Rng) -> Result<Crash> {
        let u: f64 = rng.sample(Open01);
        self.crash(u)
    }

    /// Log wealth of the pair `(+W, −W)`; `None` when the crash wipes out wealth.
    pub fn wealth_pair(&self, table: &WealthTable, strategy: &Strategy, rng: &mut ChaCha8Rng) -> Result<Option<[f64; 2]>> {
        let crash = self.draw_crash(rng)?;
        let zb = normal(rng);
        let sigma = self.model.sigma;
        let sq = self.dt.sqrt();
        let n = self.n_steps();
        let k = crash.step;
        let mut pre = 0.0;
        for j in 0..k {
            pre += table.pi[j] * normal(rng);
        }
        let mut det = table.det[k];
        let mut noise = pre * sigma * sq;
        if k < n {
            let jump = 1.0 - self.fraction(strategy, crash.time) * self.model.delta(crash.time);
            if !(jump > 0.0) {
                // keep the stream position identical for every outcome
                for _ in k..n {
                    normal(rng);
                }
                return Ok(None);
            }
            let (t0, t1) = (self.times[k], self.times[k + 1]);
            let h = t1 - t0;
            let theta = crash.time - t0;
            let dw = (t1 - t0).sqrt() * normal(rng);
            let dwa = theta / h * dw + (theta * (h - theta) / h).sqrt() * zb;
            let dwb = dw - dwa;
            let p = table.pi[k];
            if p != 0.0 {
                det += p * (self.drift_at(crash.time) - self.drift[k]) - 0.5 * p * p * sigma * sigma * theta;
            }
            det += jump.ln() + table.post_rate * (self.model.horizon() - crash.time);
            let mut post = 0.0;
            for _ in k + 1..n {
                post += normal(rng);
            }
            noise += sigma * (p * dwa + table.post * (dwb + sq * post));
        }
        Ok(Some([det + noise, det - noise]))
    }

    /// Log prices on the grid for one sign of the Gaussian draws.
    pub fn price_path(&self, rng: &mut ChaCha8Rng, sign: f64) -> Result<(f64, Vec<f64>)> {
        let crash = self.draw_crash(rng)?;
        let zb = sign * normal(rng);
        let sigma = self.model.sigma;
        let half = 0.5 * sigma * sigma;
        let n = self.n_steps();
        let mut out = Vec::with_capacity(n + 1);
        let mut log_s = 0.0;
        out.push(0.0);
        for j in 0..n {
            let (t0, t1) = (self.times[j], self.times[j + 1]);
            let h = t1 - t0;
            let dw = h.sqrt() * sign * normal(rng);
            if j < crash.step {
                log_s += self.drift[j + 1] - self.drift[j] - half * h + sigma * dw;
            } else if j == crash.step {
                let theta = crash.time - t0;
                let dwa = theta / h * dw + (theta * (h - theta) / h).sqrt() * zb;
                log_s += self.drift_at(crash.time) - self.drift[j] - half * theta + sigma * dwa;
                log_s += (1.0 - self.model.delta(crash.time)).ln();
                log_s += (self.mu_post - half) * (t1 - crash.time) + sigma * (dw - dwa);
            } else {
                log_s += (self.mu_post - half) * h + sigma * dw;
            }
            out.push(log_s);
        }
        Ok((crash.time, out))
    }

    /// `S_T` of the pair `(+W_T, −W_T)`, using only the crash time and `W_T`.
    pub fn terminal_price_pair(&self, rng: &mut ChaCha8Rng) -> Result<[f64; 2]> {
        let crash = self.draw_crash(rng)?;
        let horizon = self.model.horizon();
        let sigma = self.model.sigma;
        let w = horizon.sqrt() * normal(rng);
        let base = if crash.step == self.n_steps() {
            self.drift[self.n_steps()] - 0.5 * sigma * sigma * horizon
        } else {
            self.drift_at(crash.time) + (1.0 - self.model.delta(crash.time)).ln() + self.mu_post * (horizon - crash.time)
                - 0.5 * sigma * sigma * horizon
        };
        Ok([(base + sigma * w).exp(), (base - sigma * w).exp()])
    }
}

pub(crate) struct WealthTable {
    pi: Vec<f64>,
    /// deterministic part of `log X` accumulated up to each grid time
    det: Vec<f64>,
    post: f64,
    post_rate: f64,
}

/// One price path. Odd `path_index` values are the antithetic partners of the even ones.
pub fn simulate_price_path(model: &MarketModel, cfg: &SimConfig, path_index: u64) -> Result<PricePath> {
    let engine = Engine::new(model, cfg)?;
    let mut rng = pair_rng(cfg.seed, path_index / 2);
    let sign = if path_index % 2 == 0 { 1.0 } else { -1.0 };
    let (crash_time, logs) = engine.price_path(&mut rng, sign)?;
    Ok(PricePath { crash_time, times: engine.times.clone(), prices: logs.into_iter().map(f64::exp).collect() })
}

/// Terminal wealth from capital `x`; a crash that would make wealth nonpositive is an error.
pub fn simulate_wealth_path(model: &MarketModel, strategy: &Strategy, capital: f64, cfg: &SimConfig, path_index: u64) -> Result<f64> {
    let engine = Engine::new(model, cfg)?;
    let table = engine.wealth_table(strategy)?;
    let mut rng = pair_rng(cfg.seed, path_index / 2);
    match engine.wealth_pair(&table, strategy, &mut rng)? {
        Some(pair) => Ok(capital * pair[(path_index % 2) as usize].exp()),
        None => Err(Error::Simulation(format!("path {path_index}: wealth is wiped out at the crash"))),
    }
}
