mod common;

use bubble_core::*;
use common::*;

fn quiet_uniform_full_jump() -> MarketModel {
    let excess = ExcessReturnProfile::HazardExcess { alpha: 1.0, offset: 1.0 };
    MarketModel::new(0.0, 1e-12, HazardModel::uniform(1.0).unwrap(), excess).unwrap()
}

#[test]
fn crash_time_examples() {
    let uniform = HazardModel::uniform(1.0).unwrap();
    assert!((sample_crash_time(&uniform, 0.37).unwrap() - 0.37).abs() < 1e-14);
    let cutoff = HazardModel::exponential_cutoff(1.0, 1.0).unwrap();
    assert_eq!(sample_crash_time(&cutoff, 0.8).unwrap(), 1.0);
    assert!((sample_crash_time(&cutoff, 0.5).unwrap() - 2f64.ln()).abs() < 1e-14);
    for u in [0.0, 1.0, -0.1, f64::NAN] {
        assert!(matches!(sample_crash_time(&cutoff, u), Err(Error::Domain { .. })));
    }
}

#[test]
fn silent_noise_path_on_uniform_full_jump() {
    let model = quiet_uniform_full_jump();
    let cfg = SimConfig::new(1, 256, 11);
    let mut seen = 0;
    for k in 0..40 {
        let path = simulate_price_path(&model, &cfg, k).unwrap();
        let g = path.crash_time;
        assert!(g > 0.0 && g < 1.0);
        // e^φ(γ) (1 − δ(γ)) with φ(γ) = −log(1−γ) − γ and δ(γ) = γ
        let s_t = *path.prices.last().unwrap();
        assert!((s_t - (-g).exp()).abs() < 1e-9, "γ = {g}: {s_t}");
        // before the crash S follows e^φ exactly
        for (&t, &s) in path.times.iter().zip(&path.prices) {
            if t < g {
                assert!((s - (-t).exp() / (1.0 - t)).abs() < 1e-9 * s);
            }
        }
        seen += 1;
    }
    assert_eq!(seen, 40);
}

#[test]
fn atom_paths_never_jump() {
    let model = MarketModel::new(0.0, 1e-12, HazardModel::exponential_cutoff(1.0, 1.0).unwrap(), ExcessReturnProfile::Constant { alpha: 0.2 })
        .unwrap();
    let cfg = SimConfig::new(1, 64, 5);
    let mut atoms = 0;
    for k in 0..200 {
        let path = simulate_price_path(&model, &cfg, k).unwrap();
        if path.crash_time == 1.0 {
            atoms += 1;
            // φ(t) = 0.2 t and nothing else
            for (&t, &s) in path.times.iter().zip(&path.prices) {
                assert!((s - (0.2 * t).exp()).abs() < 1e-9);
            }
        }
    }
    assert!(atoms > 40, "{atoms}");
}

#[test]
fn estimates_are_bit_identical() {
    let model = cutoff(0.1, 0.2, 0.2);
    let sol = solve(&model, 4.0);
    let cfg = SimConfig::new(2_000, 128, 77);
    let est = Estimand::utility(Strategy::optimal(&sol), &prefs(4.0));
    let a = estimate(&model, &cfg, &est).unwrap();
    let b = estimate(&model, &cfg, &est).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    let c = estimate(&model, &SimConfig::new(2_000, 128, 78), &est).unwrap();
    assert_ne!(a.mean, c.mean);
    assert_eq!((a.n_paths, a.seed, a.estimand), (2_000, 77, "E_U_of_XT"));
}

#[test]
fn paths_do_not_depend_on_the_batch() {
    let model = cutoff(0.1, 0.2, 0.2);
    let strategy = Strategy::constant(0.7);
    let small = SimConfig::new(10, 64, 3);
    let large = SimConfig::new(10_000, 64, 3);
    for k in [0, 1, 7] {
        let a = simulate_wealth_path(&model, &strategy, 1.0, &small, k).unwrap();
        let b = simulate_wealth_path(&model, &strategy, 1.0, &large, k).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn true_martingale_has_unit_mean() {
    let model = cutoff(0.0, 0.2, 0.2);
    let r = estimate(&model, &SimConfig::new(200_000, 16, 21), &Estimand::TerminalPrice).unwrap();
    assert!(r.covers(1.0, 3.0), "{} ± {}", r.mean, r.std_error);
}

#[test]
fn crash_times_under_q_follow_h() {
    let model = cutoff(0.1, 0.2, 0.2);
    let sol = solve(&model, 4.0);
    let q = build_tilted_measure(&model, &sol.tilt(), &[]).unwrap();
    let Measure::Q(measure) = Measure::dual(&sol).unwrap() else { unreachable!() };
    let cfg = SimConfig::new(1, 8, 2024).under(Measure::Q(measure));
    let n = 100_000u64;
    let mut times: Vec<f64> = (0..n / 2).map(|k| simulate_price_path(&model, &cfg, 2 * k).unwrap().crash_time).collect();
    times.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, &g) in times.iter().enumerate() {
        if g >= 1.0 {
            // the atom: compare the mass below T only
            ks = ks.max((i as f64 / times.len() as f64 - (1.0 - q.atom())).abs());
            break;
        }
        let f = q.cdf(g);
        let lo = i as f64 / times.len() as f64;
        let hi = (i + 1) as f64 / times.len() as f64;
        ks = ks.max((f - lo).abs()).max((hi - f).abs());
    }
    // 1% critical value
    let crit = 1.63 / (times.len() as f64).sqrt();
    assert!(ks < crit, "KS {ks} vs {crit}");
}

#[test]
fn wealth_discretisation_is_first_order() {
    // tiny volatility isolates the bias of freezing the fraction over each step
    let model = MarketModel::new(0.1, 1e-7, HazardModel::exponential_cutoff(1.0, 1.0).unwrap(), ExcessReturnProfile::Constant { alpha: 0.2 })
        .unwrap();
    let strategy = Strategy::new("ramp", |t| 0.5 + t * t, 0.5);
    let log_x = |n: usize, k: u64| simulate_wealth_path(&model, &strategy, 1.0, &SimConfig::new(1, n, 9), k).unwrap().ln();
    for k in 0..6 {
        let reference = log_x(1 << 14, k);
        let e: Vec<f64> = [256, 512, 1024].iter().map(|&n| (log_x(n, k) - reference).abs()).collect();
        let (r1, r2) = (e[0] / e[1], e[1] / e[2]);
        assert!((1.6..2.4).contains(&r1) && (1.6..2.4).contains(&r2), "path {k}: errors {e:?}");
    }
}
