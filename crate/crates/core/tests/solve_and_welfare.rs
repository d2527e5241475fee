mod common;

use bubble_core::*;
use common::*;

fn zero_profile() -> MarketModel {
    MarketModel::new(0.1, 0.2, HazardModel::exponential_cutoff(1.0, 1.0).unwrap(), ExcessReturnProfile::Zero).unwrap()
}

#[test]
fn zero_profile_is_black_scholes() {
    for p in [0.25, 1.0, 4.0] {
        let sol = solve(&zero_profile(), p);
        for &t in sol.grid().iter().step_by(37) {
            assert_eq!(sol.y_hat(t), 0.0);
            assert!((sol.optimal_fraction(t, false) - 0.1 / (p * 0.04)).abs() < 1e-14);
        }
        let w = safe_rates(&sol);
        assert!((w.esr_bs - 0.01 / (2.0 * p * 0.04)).abs() < 1e-15);
        assert!(w.resrl.abs() < 1e-14);
        assert!((w.ce - (0.01 / (2.0 * p * 0.04)).exp()).abs() < 1e-14);
        assert_eq!(xihat_identity_check(&sol, 0.5).unwrap(), 0.0);
    }
}

#[test]
fn decomposition_adds_up() {
    for model in [cutoff(0.1, 0.2, 0.2), lppl_model(), uniform_excess(0.1, 0.7)] {
        let sol = solve(&model, 4.0);
        let d = decompose(&sol);
        for (i, &t) in d.times().iter().enumerate().step_by(13) {
            let total = d.myopic.values()[i] + d.hedging.values()[i];
            let pi = sol.optimal_fraction(t, false);
            assert!((total - pi).abs() < 1e-9 * pi.abs().max(1.0), "t = {t}: {total} vs {pi}");
            assert!(d.hedging.values()[i] >= -1e-12);
        }
    }
}

#[test]
fn brackets_contain_the_solution() {
    for (model, p) in [(lppl_model(), 0.25), (lppl_model(), 4.0), (uniform_excess(0.1, 0.7), 0.25), (ramp(0.2, 0.3, 0.8), 2.0)] {
        let sol = solve(&model, p);
        let (lo, hi) = (sol.lower_bracket(), sol.upper_bracket());
        for (i, &t) in sol.grid().iter().enumerate() {
            let y = sol.curve().values()[i];
            assert!(lo.values()[i] <= y && y <= hi.values()[i], "p = {p}, t = {t}");
        }
        assert!(sol.max_residual() <= 1e-8);
    }
}

#[test]
fn certainty_equivalent_is_continuous_at_log_utility() {
    let model = cutoff(0.1, 0.2, 0.2);
    let log_ce = certainty_equivalent(&solve(&model, 1.0));
    for p in [1.0 - 1e-4, 1.0 + 1e-4] {
        let ce = certainty_equivalent(&solve(&model, p));
        assert!((ce / log_ce - 1.0).abs() < 1e-3, "p = {p}: {ce} vs {log_ce}");
    }
}

#[test]
fn certainty_equivalent_scales_with_capital() {
    let sol = solve(&cutoff(0.1, 0.2, 0.4), 4.0);
    let rich = sol.with_capital(3.0).unwrap();
    assert!((certainty_equivalent(&rich) - 3.0 * certainty_equivalent(&sol)).abs() < 1e-12);
    assert_eq!(safe_rates(&rich).resrl, safe_rates(&sol).resrl);
}

#[test]
fn crash_risk_lowers_the_certainty_equivalent() {
    let sol = solve(&cutoff(0.1, 0.2, 0.2), 4.0);
    let w = safe_rates(&sol);
    assert!(w.ce < (w.esr_bs).exp());
    assert!(w.resrl > 0.0 && w.resrl < 1.0);
}

#[test]
fn non_positive_drift_is_refused() {
    let model = cutoff(0.0, 0.2, 0.2);
    let err = solve_optimal(&model, &prefs(4.0), &SolverOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)), "{err}");
}
