//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bubble_core::numerics::ridders_derivative;
use bubble_core::*;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<(bool, String), String>;

struct Report {
    failures: usize,
}

impl Report {
    fn run(&mut self, id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) if elapsed <= budget => (ok, detail),
            Ok((_, detail)) => (false, format!("{detail}; over budget of {budget:?}")),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            self.failures += 1;
        }
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("{tag} {id:>2} {name}: {detail} [{:.2}s]", elapsed.as_secs_f64());
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn classification() -> Outcome {
    let cases = [
        ("uniform delta=t", uniform_full_jump(), Verdict::StrictLocalMartingale),
        ("uniform alpha=0.7", uniform_excess(0.0, 0.7), Verdict::TrueMartingale),
        ("cutoff+constant", cutoff(0.0, 0.2, 0.2), Verdict::TrueMartingale),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, model, want) in cases {
        let got = model.classify_under_p().verdict;
        ok &= got == want;
        parts.push(format!("{name} -> {got:?}"));
    }
    Ok((ok, parts.join(", ")))
}

fn martingale_defect() -> Outcome {
    let target = 1.0 - (-1f64).exp();
    let r = estimate(&uniform_full_jump(), &SimConfig::new(1_000_000, 1 << 10, 20_240_101), &Estimand::TerminalPrice)
        .map_err(|e| e.to_string())?;
    let z_one = (1.0 - r.mean) / r.std_error;
    Ok((
        r.covers(target, 3.0) && z_one > 5.0,
        format!("E[S_T] = {:.6} +- {:.2e} (target {target:.6}), distance to 1 = {z_one:.0} SE", r.mean, r.std_error),
    ))
}

fn log_equivalence() -> Outcome {
    let opts = SolverOptions { force_numeric: true, ..SolverOptions::default() };
    let mut worst: f64 = 0.0;
    for model in [cutoff(0.1, 0.2, 0.2), ramp(0.1, 0.2, 0.5)] {
        let s = solve_optimal(&model, &prefs(1.0), &opts).map_err(|e| e.to_string())?;
        if s.method() == SolveMethod::ClosedForm {
            return Err("closed form used despite force_numeric".into());
        }
        for &t in s.grid() {
            worst = worst.max((s.y_hat(t) - log_utility_solution(&model, t)).abs());
        }
    }
    Ok((worst <= 1e-8, format!("sup error {worst:.2e}")))
}

fn bracket_and_residual() -> Outcome {
    let mut worst_res: f64 = 0.0;
    let mut violations = 0usize;
    let mut n = 0usize;
    let opts_log = SolverOptions { force_numeric: true, ..SolverOptions::default() };
    for (mu, sigma, alpha) in parameter_grid() {
        let model = cutoff(mu, sigma, alpha);
        for p in [0.25, 1.0, 4.0] {
            let opts = if p == 1.0 { opts_log } else { SolverOptions::default() };
            let s = solve_optimal(&model, &prefs(p), &opts).map_err(|e| format!("mu={mu} sigma={sigma} alpha={alpha} p={p}: {e}"))?;
            let (lo, hi) = (s.lower_bracket().values(), s.upper_bracket().values());
            for (i, &y) in s.curve().values().iter().enumerate() {
                if !(lo[i] <= y && y <= hi[i]) {
                    violations += 1;
                }
            }
            worst_res = worst_res.max(s.max_residual());
            n += 1;
        }
    }
    Ok((violations == 0 && worst_res <= 1e-8, format!("{n} solves, bracket violations {violations}, max residual {worst_res:.2e}")))
}

fn hedging_signs() -> Outcome {
    let mut bad = Vec::new();
    let mut worst_terminal: f64 = 0.0;
    let mut worst_log: f64 = 0.0;
    for (mu, sigma, alpha) in parameter_grid() {
        let model = cutoff(mu, sigma, alpha);
        for p in [0.25, 1.0, 4.0] {
            let s = solve(&model, p);
            let d = decompose(&s);
            let h = d.hedging.values();
            let sign_ok = match p {
                x if x > 1.0 => h.iter().all(|&v| v >= 0.0),
                x if x < 1.0 => h.iter().all(|&v| v <= 0.0),
                _ => {
                    worst_log = h.iter().fold(worst_log, |w, v| w.max(v.abs()));
                    h.iter().all(|&v| v == 0.0)
                }
            };
            if !sign_ok {
                bad.push(format!("(p={p}, mu={mu}, sigma={sigma}, alpha={alpha})"));
            }
            worst_terminal = worst_terminal.max(h[h.len() - 1].abs());
        }
    }
    Ok((
        bad.is_empty() && worst_terminal <= 1e-3,
        format!("sign violations {:?}, max |pi^h| at p=1 {worst_log:.1e}, max |pi^h(t_N)| {worst_terminal:.2e}", bad),
    ))
}

fn myopic_bounds() -> Outcome {
    let mut bad = 0usize;
    let mut min_gap = f64::INFINITY;
    for (mu, sigma, alpha) in parameter_grid() {
        let model = cutoff(mu, sigma, alpha);
        for p in [0.25, 1.0, 4.0] {
            let s = solve(&model, p);
            let merton = s.merton_fraction();
            for (&t, &pm) in s.grid().iter().zip(decompose(&s).myopic.values()) {
                let strict = model.phi_prime(t) != 0.0;
                let ok = pm > 0.0 && if strict { pm < merton } else { pm == merton };
                if !ok {
                    bad += 1;
                }
                if strict {
                    min_gap = min_gap.min((merton - pm) / merton);
                }
            }
        }
    }
    Ok((bad == 0, format!("violations {bad}, smallest relative gap below Merton {min_gap:.2e}")))
}

fn mc_scenarios() -> Vec<(f64, MarketModel, Solution)> {
    [4.0, 0.25]
        .into_iter()
        .map(|p| {
            let m = cutoff(0.1, 0.2, 0.2);
            let s = solve(&m, p);
            (p, m, s)
        })
        .collect()
}

fn mc_config(seed: u64) -> SimConfig {
    SimConfig::new(100_000, 1 << 10, seed)
}

fn ce_cross_check(p: f64, model: &MarketModel, s: &Solution) -> Outcome {
    let prefs = *s.prefs();
    let r = estimate(model, &mc_config(7), &Estimand::utility(Strategy::optimal(s), &prefs)).map_err(|e| e.to_string())?;
    let ce_mc = prefs.inverse_utility(r.mean);
    // delta method: dCE = dU / U'(CE)
    let se = r.std_error * ce_mc.powf(prefs.risk_aversion);
    let ce = certainty_equivalent(s);
    Ok(((ce_mc - ce).abs() <= 3.0 * se, format!("p={p}: CE {ce:.6}, Monte Carlo {ce_mc:.6} +- {se:.2e}")))
}

fn budget(p: f64, model: &MarketModel, s: &Solution) -> Outcome {
    let est = Estimand::budget(s).map_err(|e| e.to_string())?;
    let r = estimate(model, &mc_config(8), &est).map_err(|e| e.to_string())?;
    let x = s.prefs().capital;
    Ok((r.covers(x, 3.0), format!("p={p}: E^Q[X_T] = {:.5} +- {:.2e}", r.mean, r.std_error)))
}

fn dominance(p: f64, model: &MarketModel, s: &Solution) -> Outcome {
    let prefs = *s.prefs();
    let opt = Strategy::optimal(s);
    let rivals = [Strategy::merton(model, &prefs), Strategy::myopic(s), opt.scaled(0.5), opt.scaled(1.5)];
    let mut ok = true;
    let mut parts = Vec::new();
    for rival in &rivals {
        match estimate_utility_difference(model, &mc_config(9), &opt, rival, &prefs) {
            Ok(d) => {
                ok &= d.mean >= -3.0 * d.std_error;
                parts.push(format!("{} {:+.1} SE", rival.label(), d.mean / d.std_error));
            }
            // a rival that can lose all wealth is outside the admissible class
            Err(Error::Simulation(_)) => parts.push(format!("{} inadmissible", rival.label())),
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok((ok, format!("p={p}: {}", parts.join(", "))))
}

fn both(a: Outcome, b: Outcome) -> Outcome {
    let (oa, da) = a?;
    let (ob, db) = b?;
    Ok((oa && ob, format!("{da}; {db}")))
}

fn above_merton() -> Outcome {
    let model = ramp(0.3, 0.05, 0.2);
    let s = solve(&model, 4.0);
    let merton = s.merton_fraction();
    let (t, pi) = s
        .grid()
        .iter()
        .map(|&t| (t, s.optimal_fraction(t, false)))
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok((pi > merton, format!("max pi = {pi:.4} at t = {t:.4}, Merton {merton}")))
}

fn strict_local_continuity() -> Outcome {
    let reference = solve(&uniform_excess(0.1, 1.0), 4.0);
    let mut dists = Vec::new();
    for alpha in [0.7, 0.9, 0.99] {
        let s = solve(&uniform_excess(0.1, alpha), 4.0);
        let d = s.grid().iter().map(|&t| (s.y_hat(t) - reference.y_hat(t)).abs()).fold(0.0, f64::max);
        dists.push(d);
    }
    let decreasing = dists.windows(2).all(|w| w[1] < w[0]);
    Ok((decreasing, format!("sup|y_a - y_1| for a = 0.7, 0.9, 0.99: {:.3e}, {:.3e}, {:.3e}", dists[0], dists[1], dists[2])))
}

fn resrl_monotone() -> Outcome {
    let vals: Vec<f64> = ALPHAS.iter().map(|&a| safe_rates(&solve(&cutoff(0.1, 0.2, a), 4.0)).resrl).collect();
    let ok = vals.windows(2).all(|w| w[1] > w[0]);
    Ok((ok, format!("rESRL {:.5?}", vals)))
}

fn elmm_identities() -> Outcome {
    let bounded = || {
        vec![
            TiltFunction::constant(0.5),
            TiltFunction::constant(-0.3),
            TiltFunction::from_fn(|t| 0.3 * (2.0 * t).sin(), |t| 0.6 * (2.0 * t).cos()).with_floor(0.7),
        ]
    };
    // on the uniform and LPPL models tilts must vanish at T like 1/κ to keep ∫(φ'y)² finite
    let damped = vec![
        TiltFunction::from_fn(|t| 0.5 * (1.0 - t), |_| -0.5),
        TiltFunction::from_fn(|t| -0.3 * (1.0 - t), |_| 0.3),
        TiltFunction::from_fn(|t| 0.3 * (2.0 * t).sin() * (1.0 - t), |t| 0.6 * (2.0 * t).cos() * (1.0 - t) - 0.3 * (2.0 * t).sin()),
    ];
    let cases = [(cutoff(0.1, 0.2, 0.2), bounded()), (uniform_excess(0.1, 0.7), damped.clone()), (lppl_model(), damped.clone())];
    let mut worst: f64 = 0.0;
    for (m, tilts) in &cases {
        for tilt in tilts {
            let q = build_tilted_measure(m, tilt, &[]).map_err(|e| format!("{tilt:?} on {:?}: {e}", m.hazard))?;
            for t in [0.01, 0.2, 0.5, 0.8, 0.95, 0.999] {
                worst = q.relation_residuals(t).iter().fold(worst, |w, &r| w.max(r));
            }
        }
    }
    let mut worst_xi: f64 = 0.0;
    for (_, _, s) in mc_scenarios().into_iter().chain([(4.0, uniform_excess(0.1, 0.7), solve(&uniform_excess(0.1, 0.7), 4.0))]) {
        for v in [0.05, 0.25, 0.5, 0.75, 0.95] {
            worst_xi = worst_xi.max(xihat_identity_check(&s, v).map_err(|e| e.to_string())?);
        }
    }
    Ok((worst <= 1e-10 && worst_xi <= 1e-6, format!("relation residual {worst:.2e}, xi-hat identity {worst_xi:.2e}")))
}

fn derivative_identities() -> Outcome {
    let models = [cutoff(0.1, 0.2, 0.4), lppl_model(), ramp(0.2, 0.3, 0.8)];
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut worst = [0.0f64; 4];
    for i in 0..10_000 {
        let model = &models[i % models.len()];
        let t: f64 = rng.gen_range(0.0..0.999);
        let p: f64 = (rng.gen_range(-2.0f64..2.5)).exp();
        let pr = prefs(p);
        let lb = lower_boundary(model, &pr, t);
        let y = lb + rng.gen_range(-6.0f64..1.5).exp();
        let e = aux_eval(model, &pr, t, y);
        let h = 0.05 * (y - lb).min(1.0);
        let fd = |f: &dyn Fn(f64) -> f64| ridders_derivative(f, y, h).0;
        let a_fd = fd(&|v| aux_eval(model, &pr, t, v).a);
        let m_fd = fd(&|v| aux_eval(model, &pr, t, v).m);
        let n_fd = fd(&|v| aux_eval(model, &pr, t, v).n);
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(x.abs()).max(1e-300);
        // a is affine in y, so its difference quotient is exact up to rounding
        worst[0] = worst[0].max((e.da_dy - a_fd).abs() / (1.0 + e.da_dy.abs()));
        worst[1] = worst[1].max(rel(e.dm_dy, m_fd));
        worst[2] = worst[2].max(rel(e.dn_dy, n_fd));
        let (mu, s2) = (model.mu, model.sigma * model.sigma);
        let q = model.phi_prime(t);
        let c = (1.0 - p) / (2.0 * p * p * s2);
        let b1 = aux_eval(model, &prefs(1.0), t, y).b;
        let n_id = -c * mu * mu + c * (q * y - mu).powi(2) + model.kappa(t) * (b1 - 1.0) / p;
        worst[3] = worst[3].max((n_id - e.n).abs() / (1.0 + e.n.abs()));
    }
    Ok((
        worst.iter().all(|&w| w <= 1e-6),
        format!("da/dy {:.1e}, dm/dy {:.1e}, dn/dy {:.1e}, n identity {:.1e}", worst[0], worst[1], worst[2], worst[3]),
    ))
}

fn main() -> ExitCode {
    let mut r = Report { failures: 0 };
    r.run(1, "classification", secs(1), classification);
    r.run(2, "martingale defect", secs(60), martingale_defect);
    r.run(3, "log-utility equivalence", secs(5), log_equivalence);
    r.run(4, "bracket and residual", secs(120), bracket_and_residual);
    r.run(5, "hedging-demand signs", secs(120), hedging_signs);
    r.run(6, "myopic bounds", secs(120), myopic_bounds);
    let sc = mc_scenarios();
    r.run(7, "certainty-equivalent cross-check", secs(120), || both(ce_cross_check(sc[0].0, &sc[0].1, &sc[0].2), ce_cross_check(sc[1].0, &sc[1].1, &sc[1].2)));
    r.run(8, "dual budget", secs(120), || both(budget(sc[0].0, &sc[0].1, &sc[0].2), budget(sc[1].0, &sc[1].1, &sc[1].2)));
    r.run(9, "optimality dominance", secs(300), || both(dominance(sc[0].0, &sc[0].1, &sc[0].2), dominance(sc[1].0, &sc[1].1, &sc[1].2)));
    r.run(10, "above-Merton fraction", secs(10), above_merton);
    r.run(11, "strict-local continuity", secs(30), strict_local_continuity);
    r.run(12, "rESRL monotone in alpha", secs(10), resrl_monotone);
    r.run(13, "ELMM identities", secs(60), elmm_identities);
    r.run(14, "derivative identities", secs(60), derivative_identities);
    if r.failures == 0 {
        println!("all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", r.failures);
        ExitCode::FAILURE
    }
}
