use proptest::prelude::*;
use qupload::decoder::build_decoding_graph;
use qupload::dense::{c, kron, max_abs, random_density, DenseOperator};
use qupload::imaging::{build_model, eigen_filter, pipeline_stats, FilterSpec, PipelineNoise};
use qupload::moments::CycleTest;
use qupload::pauli::{channel_n_coefficient, depolarize_coefficient, inverse_channel_coefficient, Pauli};
use qupload::replica::cycle_observable;
use qupload::shadows::{separation_exponent, step_layer, BrickworkSpec, SupportState};
use qupload::surface_code::{build_growth_layout, spacetime_distance, Sector};
use qupload::PauliString;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pauli_string() -> impl Strategy<Value = PauliString> {
    proptest::collection::vec(0usize..4, 1..9)
        .prop_filter("non-identity", |v| v.iter().any(|&i| i != 0))
        .prop_map(|v| PauliString::from_paulis(&v.into_iter().map(Pauli::from_index).collect::<Vec<_>>()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_channel_undoes_depolarizing(p in pauli_string(), lambda in 0.001f64..0.999) {
        let d = depolarize_coefficient(&p, lambda).unwrap();
        let inv = inverse_channel_coefficient(&p, lambda).unwrap();
        prop_assert!((d * inv - 1.0).abs() < 1e-12);
    }

    #[test]
    fn channel_n_is_weaker_than_depolarizing(p in pauli_string(), lambda in 0.0f64..1.0) {
        prop_assert!(channel_n_coefficient(&p, lambda).unwrap() <= depolarize_coefficient(&p, lambda).unwrap() + 1e-15);
    }

    #[test]
    fn products_match_matrix_multiplication(pair in (1usize..=3).prop_flat_map(|n| {
        let s = proptest::collection::vec(0usize..4, n);
        (s.clone(), s)
    })) {
        let make = |v: &[usize]| PauliString::from_paulis(&v.iter().map(|&i| Pauli::from_index(i)).collect::<Vec<_>>());
        let (a, b) = (make(&pair.0), make(&pair.1));
        let lhs = a.dense().unwrap() * b.dense().unwrap();
        let rhs = a.mul(&b).dense().unwrap();
        prop_assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn cycle_observable_measures_the_cubic_moment(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(1 << n, &mut rng);
        let h = cycle_observable(n).unwrap().matrix;
        let triple = kron(&rho, &kron(&rho, &rho));
        let lhs = (h * triple).trace().re;
        let rhs = (&rho * &rho * &rho).trace().re;
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn cycle_test_shots_respect_the_range(seed in any::<u64>(), lp in 0.0f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(4, &mut rng);
        let test = CycleTest::new(&rho, lp, true).unwrap();
        let rep = test.run(2000, seed);
        prop_assert_eq!(rep.get("range_violations"), Some(0.0));
    }

    #[test]
    fn shadow_support_never_vanishes(seed in any::<u64>(), k in 1usize..8, depth in 1usize..8) {
        let spec = BrickworkSpec::light_cone(k, depth).unwrap();
        let mut st = SupportState::contiguous(spec.n, spec.start, k).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in 0..depth {
            step_layer(&spec, layer, &mut st, &mut rng);
            prop_assert!(st.weight() >= 1);
            if layer == 0 {
                prop_assert!(st.weight() as usize >= (k - 1) / 2);
            }
        }
    }

    #[test]
    fn equal_noise_injection_wins(lambda in 1e-4f64..0.3) {
        prop_assert!(separation_exponent(lambda, lambda).unwrap() > 0.0);
    }

    #[test]
    fn long_windows_saturate_the_distance(x in 0usize..9, y in 0usize..9, extra in 0usize..5) {
        let d2 = 9;
        prop_assert_eq!(spacetime_distance(x, y, d2 + extra, 5, d2).unwrap(), d2);
    }

    #[test]
    fn mirror_flips_the_decision_statistic(b in 0.55f64..0.98, dx in 0.3f64..2.5, lambda in 0.0f64..0.01) {
        let right = build_model(8, b, dx, 1.0).unwrap();
        let left = right.mirrored().unwrap();
        let spec = FilterSpec::matched(&right, 2, 8);
        for noise in [PipelineNoise::raw(lambda), PipelineNoise::uploaded(lambda, 3.0)] {
            let r = pipeline_stats(&right, &noise, &spec).unwrap();
            let l = pipeline_stats(&left, &noise, &spec).unwrap();
            prop_assert!((r.mean + l.mean).abs() < 1e-10);
            let out = eigen_filter(&right, &noise, &spec).unwrap();
            prop_assert!((out.probabilities[0] + out.probabilities[1] - 1.0).abs() < 1e-10);
        }
        prop_assert!((right.reconstruct(&right.observable()) - right.target_value()).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn corrections_close_the_syndrome(seed in any::<u64>(), p in 0.0f64..0.03, d2 in prop::sample::select(vec![5usize, 7])) {
        let layout = build_growth_layout(5, d2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for sector in Sector::BOTH {
            let graph = build_decoding_graph(&layout, d2, sector).unwrap();
            for _ in 0..20 {
                let rec = graph.run_shot(p, &mut rng).unwrap();
                let mut both = rec.faults.clone();
                both.extend(&rec.correction);
                prop_assert!(graph.syndrome_of(&both).is_empty());
            }
        }
    }
}

#[test]
fn depolarizing_scales_pauli_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let lambda = 0.23;
    for _ in 0..10 {
        let a = random_density(4, &mut rng) * c(2.0) - DenseOperator::identity(4, 4) * c(0.3);
        let direct = qupload::dense::depolarize_all(&a, 2, lambda);
        let mut rebuilt = DenseOperator::zeros(4, 4);
        for p in qupload::pauli::all_paulis(2) {
            let m = p.dense().unwrap();
            let coeff = (&m * &a).trace() / c(4.0);
            rebuilt += m * coeff * c(depolarize_coefficient(&p, lambda).unwrap());
        }
        assert!(max_abs(&(direct - rebuilt)) < 1e-12);
    }
}
