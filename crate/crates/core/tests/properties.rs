mod common;

use bubble_core::*;
use common::*;
use proptest::prelude::{prop_assert, prop_assume, proptest, ProptestConfig};
use proptest::strategy::Strategy as _;

fn lppl() -> impl proptest::strategy::Strategy<Value = HazardModel> {
    (0.5f64..2.0, 0.0f64..0.9, -0.5f64..0.9, 0.0f64..8.0, 0.0f64..6.0).prop_map(|(b, rel, m, omega, psi)| {
        HazardModel::lppl(LpplHazard { b, c: rel * b, m, omega, psi }, 1.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn survival_is_a_decreasing_probability(h in lppl(), a in 0.0f64..0.999, b in 0.0f64..0.999) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (s_lo, atom) = h.survival_and_atom(lo).unwrap();
        let (s_hi, _) = h.survival_and_atom(hi).unwrap();
        prop_assert!((0.0..=1.0).contains(&s_hi) && s_hi <= s_lo);
        prop_assert!((0.0..=1.0).contains(&atom) && atom <= s_hi);
    }

    #[test]
    fn inverse_hazard_round_trips(h in lppl(), t in 0.001f64..0.99) {
        let level = h.cumulative(t);
        let back = h.inverse_cumulative_hazard(level);
        prop_assert!((back - t).abs() < 1e-9, "{} vs {}", back, t);
    }

    #[test]
    fn sampled_crash_times_have_the_right_law(h in lppl(), u in 0.001f64..0.999) {
        let g = sample_crash_time(&h, u).unwrap();
        prop_assert!(g > 0.0 && g <= 1.0);
        if g < 1.0 {
            prop_assert!((h.distribution(g) - u).abs() < 1e-9);
        } else {
            prop_assert!(u >= 1.0 - h.atom() - 1e-12);
        }
    }

    #[test]
    fn implicit_solve_inverts_m(mu in 0.02f64..0.3, sigma in 0.1f64..0.4, alpha in 0.05f64..0.8,
                                lp in -1.5f64..2.0, t in 0.0f64..0.99, target in 0.2f64..3.0) {
        let model = cutoff(mu, sigma, alpha);
        let pr = prefs(lp.exp());
        let y = implicit_solve(&model, &pr, t, target).unwrap();
        let e = aux_eval(&model, &pr, t, y);
        prop_assert!(y > lower_boundary(&model, &pr, t));
        prop_assert!((e.m - target).abs() <= 1e-10 * target.max(1.0) + 2.0 * e.dm_dy.abs() * f64::EPSILON * y.abs());
        prop_assert!(e.a > 0.0);
    }

    #[test]
    fn m_increases_in_y(lp in -1.5f64..2.0, t in 0.0f64..0.99, d1 in 1e-4f64..3.0, d2 in 1e-4f64..3.0) {
        let model = lppl_model();
        let pr = prefs(lp.exp());
        let lb = lower_boundary(&model, &pr, t);
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assume!(hi - lo > 1e-9);
        let m_lo = aux_eval(&model, &pr, t, lb + lo).m;
        let m_hi = aux_eval(&model, &pr, t, lb + hi).m;
        prop_assert!(m_lo < m_hi);
    }

    #[test]
    fn monotone_curves_stay_monotone(mut ys in proptest::collection::vec(-5.0f64..5.0, 3..20), x in 0.0f64..1.0) {
        ys.sort_by(f64::total_cmp);
        let n = ys.len();
        let ts: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let c = Curve::monotone(ts, ys.clone());
        let v = c.eval(x);
        prop_assert!(v >= ys[0] - 1e-12 && v <= ys[n - 1] + 1e-12);
        prop_assert!(c.derivative(x) >= -1e-12);
    }

    #[test]
    fn jump_size_is_a_fraction(alpha in 0.0f64..1.0, t in 0.0f64..0.999) {
        let model = uniform_excess(0.1, alpha);
        let d = model.jump_size(t).unwrap();
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - alpha * t).abs() < 1e-12);
    }
}
