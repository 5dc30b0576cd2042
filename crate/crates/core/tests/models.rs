use proptest::prelude::*;
use seamqec::fit::*;
use seamqec::resource::*;

fn forms() -> impl Strategy<Value = PseudoThreshold> {
    prop_oneof![Just(PseudoThreshold::Linear), Just(PseudoThreshold::Squared)]
}

/// Log-uniform draw over `[lo, hi]` from a unit fraction.
fn logu(lo: f64, hi: f64, u: f64) -> f64 {
    lo * (hi / lo).powf(u)
}

proptest! {
    #[test]
    fn seam_ansatz_is_monotone(
        d in 3usize..=13, u in 0.0f64..1.0, v in 0.0f64..1.0, du in 0.0f64..0.2, form in forms()
    ) {
        let (p, pb) = (logu(1e-4, 1e-3, u), logu(1e-3, 5e-2, v));
        let f = |p, pb| eval_seam(d, p, pb, &SeamParams::TABLE, form).unwrap();
        let base = f(p, pb);
        prop_assert!(f(p * (1.0 + du), pb) >= base);
        prop_assert!(f(p, pb * (1.0 + du)) >= base);
    }

    #[test]
    fn seam_ansatz_is_continuous_in_bell_rate(d in 3usize..=13, u in 0.0f64..1.0, v in 0.0f64..1.0, form in forms()) {
        let (p, pb) = (logu(1e-4, 1e-3, u), logu(1e-3, 5e-2, v));
        let f = |pb| eval_seam(d, p, pb, &SeamParams::TABLE, form).unwrap();
        let base = f(pb);
        let mut last = f64::INFINITY;
        for k in [1e-2, 1e-4, 1e-6, 1e-8] {
            let gap = (f(pb * (1.0 + k)) - base).abs() / base;
            prop_assert!(gap <= last);
            last = gap;
        }
        prop_assert!(last < 1e-6);
    }

    #[test]
    fn cnot_failure_grows_with_noise(
        d in 11usize..=49, u in 0.0f64..1.0, v in 0.0f64..1.0, bump in 1.0f64..1.5,
        n_proc in 1usize..500, n_rows in 1usize..10, distributed in any::<bool>(),
    ) {
        let mode = if distributed { Mode::Distributed } else { Mode::Monolithic };
        let model = ErrorModel::default();
        let (p, pb) = (logu(1e-4, 1.5e-3, u), logu(1e-3, 4e-2, v));
        let f = |p, pb| cnot_failure(d, p, pb, n_proc, n_rows, 8283, &model, mode).unwrap();
        let base = f(p, pb);
        for other in [f(p * bump, pb), f(p, pb * bump)] {
            prop_assert!(other.p_cx >= base.p_cx);
            prop_assert!(other.p_xx >= base.p_xx);
            prop_assert!(other.p_logq >= base.p_logq);
        }
    }

    #[test]
    fn toffoli_failure_grows_with_each_input(
        a in 0.0f64..0.1, b in 0.0f64..0.1, c in 0.0f64..0.1, k in 0usize..3, bump in 1.0f64..2.0,
    ) {
        let f = |x: [f64; 3]| toffoli_failure(x[0], x[1], x[2], 1e-5, 1e-6);
        let mut x = [a, b, c];
        let base = f(x);
        x[k] *= bump;
        prop_assert!(f(x) >= base);
    }

    #[test]
    fn metric_is_linear_in_qubit_count(d in 25usize..=49, idx in 0usize..8, extra in 1usize..6) {
        let cost = AlgorithmCost { label: "x".into(), n_toffoli: 1e8, n_cx: 1e8, n_log: 2000, p_classical: 0.0 };
        let model = ErrorModel::default();
        let layout = LayoutConfig::for_cost(d, cost.n_log, &FACTORIES[idx], Timing::default(), Mode::Distributed);
        let a = estimate_algorithm(&cost, &layout, &FACTORIES, idx, 1e-3, 0.02, &model).unwrap();
        let wider = LayoutConfig { n_factory_proc: layout.n_factory_proc + extra, ..layout };
        let b = estimate_algorithm(&cost, &wider, &FACTORIES, idx, 1e-3, 0.02, &model).unwrap();
        prop_assert_eq!(a.expected_duration, b.expected_duration);
        let ratio = b.n_phys as f64 / a.n_phys as f64;
        prop_assert!((b.metric / a.metric - ratio).abs() <= 1e-12 * ratio);
    }
}

#[test]
fn bell_fidelity_example() {
    assert!((bell_fidelity(0.02) - 0.984).abs() < 1e-12);
}

#[test]
fn factories_sit_above_the_floor() {
    let floor = distillation_floor(1e-3);
    assert!((2.9e-15..=3.1e-15).contains(&floor), "{floor}");
    assert!(FACTORIES.iter().all(|f| f.p_out > floor));
}
