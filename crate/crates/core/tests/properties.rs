use proptest::prelude::*;
use qudaqc::hamiltonian::{blbq_problem, zz_source};
use qudaqc::linalg::max_abs_diff;
use qudaqc::schedule::prune_short_blocks;
use qudaqc::sim::channels::{apply_gate_noise, apply_t1, NoiseModel};
use qudaqc::sim::state::QuantumState;
use qudaqc::sim::sweep::{from_csv, to_csv, SweepRow};
use qudaqc::weyl::{conjugation_phase, decompose, weyl_operator, weyl_product_phase};
use qudaqc::{compile, CompileOptions, Operator, WeylLabel, C64};

fn label(d: usize) -> impl Strategy<Value = WeylLabel> {
    (0..d as i64, 0..d as i64).prop_map(move |(a, b)| WeylLabel::new(d, a, b))
}

fn operator(d: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), d * d)
        .prop_map(move |v| Operator::from_iterator(d, d, v.into_iter().map(|(re, im)| C64::new(re, im))))
}

fn random_state(d: usize, n: usize, amps: &[(f64, f64)]) -> QuantumState {
    let mut v: Vec<C64> = amps.iter().map(|&(re, im)| C64::new(re, im)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-12);
    v.iter_mut().for_each(|z| *z /= norm);
    QuantumState::from_amplitudes(d, n, nalgebra::DVector::from_vec(v)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_reconstructs((d, op) in (2usize..=5).prop_flat_map(|d| (Just(d), operator(d)))) {
        let back = decompose(&op, d).unwrap().reconstruct();
        prop_assert!(max_abs_diff(&op, &back) < 1e-12);
    }

    #[test]
    fn conjugation_is_a_pure_phase((d, t, c) in (2usize..=5).prop_flat_map(|d| (Just(d), label(d), label(d)))) {
        let wt = weyl_operator(d, t).unwrap();
        let wc = weyl_operator(d, c).unwrap();
        let lhs = wc.adjoint() * &wt * &wc;
        let rhs = wt * conjugation_phase(d, t, c).unwrap();
        prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn product_phase_matches_dense((d, l, r) in (2usize..=5).prop_flat_map(|d| (Just(d), label(d), label(d)))) {
        let (phase, sum) = weyl_product_phase(d, l, r).unwrap();
        let lhs = weyl_operator(d, l).unwrap() * weyl_operator(d, r).unwrap();
        prop_assert!(max_abs_diff(&lhs, &(weyl_operator(d, sum).unwrap() * phase)) < 1e-12);
    }

    #[test]
    fn channels_preserve_trace_and_positivity(
        amps in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 9),
        duration in 0.0..5.0f64,
        f1 in 0.5..=1.0f64,
        f2 in 0.2..=1.0f64,
    ) {
        let mut state = random_state(3, 2, &amps);
        let noise = NoiseModel { t1: 1.0, ..NoiseModel::standard(1.0) };
        apply_t1(&mut state, duration, &noise).unwrap();
        apply_gate_noise(&mut state, &[1], f1).unwrap();
        apply_gate_noise(&mut state, &[0, 1], f2).unwrap();
        prop_assert!((state.trace() - 1.0).abs() < 1e-12);
        prop_assert!(state.min_eigenvalue() > -1e-12);
        prop_assert!(state.purity() <= 1.0 + 1e-12);
    }

    #[test]
    fn pruning_is_monotone(
        t in prop::collection::vec(0.0..0.2f64, 1..30),
        lo in 0.0..4.0f64,
        extra in 0.0..4.0f64,
    ) {
        let dt = 0.01;
        let (a, da) = prune_short_blocks(&t, dt, lo);
        let (b, db) = prune_short_blocks(&t, dt, lo + extra);
        let total: f64 = t.iter().sum();
        prop_assert!((a.iter().sum::<f64>() + da - total).abs() < 1e-12);
        prop_assert!(db >= da - 1e-15);
        for ((x, y), z) in a.iter().zip(&b).zip(&t) {
            prop_assert!(*x == *z || *x == 0.0);
            prop_assert!(*y <= *x);
            prop_assert!(*z == 0.0 || *z >= (lo + extra) * dt || *y == 0.0);
        }
    }

    #[test]
    fn compiled_schedules_are_certified(n in 2usize..=4, theta in 0.0..std::f64::consts::PI) {
        let source = zz_source(n, 3).unwrap();
        let problem = blbq_problem(n, theta).unwrap();
        let s = compile(&source, &problem, 1.0, &CompileOptions::default()).unwrap();
        prop_assert!(s.blocks.iter().all(|b| b.duration >= 0.0));
        prop_assert!(s.certificate_residual(&source, &problem).unwrap() < 1e-8);
    }

    #[test]
    fn result_table_roundtrips(
        rows in prop::collection::vec(
            (0.0..3.2f64, 0.0..2.0f64, 0.0..2.0f64, 0.0..=1.0f64, 0.0..=1.0f64, 0usize..100, 0usize..100),
            0..10,
        )
    ) {
        let rows: Vec<SweepRow> = rows
            .into_iter()
            .map(|(theta, t_a, t_a_r, fb, fd, g, b)| SweepRow { theta, t_a, t_a_r, fidelity_bdaqc: fb, fidelity_dqc: fd, gate_count: g, block_count: b })
            .collect();
        prop_assert_eq!(from_csv(&to_csv(&rows)).unwrap(), rows);
    }
}
