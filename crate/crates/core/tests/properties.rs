use proptest::prelude::*;

use secmeas_core::config::RunConfig;
use secmeas_core::measurement::{outcome_probs, solve_oim_with, srm, validate_povm, OimOptions};
use secmeas_core::numerics::{c64, kron, partial_trace, Complex64, ComplexMatrix, Tolerances};
use secmeas_core::pipeline::Pipeline;
use secmeas_core::protocol::{check_secrecy, equivalence_deviation, MapKind};
use secmeas_core::states::AguStateSet;
use secmeas_core::symmetry::{AbelianGroup, UnitaryRep};

fn options() -> OimOptions {
    OimOptions {
        restarts: 2,
        dominance_samples: 0,
        ..OimOptions::default()
    }
}

/// Normalized seed with random phases and no vanishing component.
fn arb_seed(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((0.05f64..1.0, -3.2f64..3.2), len).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        parts
            .into_iter()
            .map(|(w, phase)| {
                let r = (w / total).sqrt();
                c64(r * phase.cos(), r * phase.sin())
            })
            .collect()
    })
}

fn cyclic_set(seed: Vec<Complex64>) -> AguStateSet {
    let rep = UnitaryRep::regular(AbelianGroup::cyclic(seed.len()).unwrap());
    AguStateSet::new(rep.group(), rep.clone(), vec![seed], &Tolerances::default()).unwrap()
}

fn arb_density(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
        let a = ComplexMatrix::new(dim, dim, v.into_iter().map(|(x, y)| c64(x, y)).collect()).unwrap();
        let rho = &a * &a.adjoint();
        let t = rho.trace().re.max(1e-12);
        rho.scale_real(1.0 / t)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oim_is_valid_and_hits_the_failure_target(seed in (2usize..=4).prop_flat_map(arb_seed), p in 0.0f64..0.95) {
        let tol = Tolerances::default();
        let set = cyclic_set(seed);
        let sol = solve_oim_with(&set, p, &options(), &tol).unwrap();
        prop_assert!(validate_povm(&sol.povm, Some(set.rep())) <= 1e-9);
        prop_assert!((sol.p_achieved - p).abs() <= 1e-6);
        prop_assert!(sol.correct_prob + sol.p_achieved <= 1.0 + 1e-9);
        let me = outcome_probs(&set, &srm(&set, &tol).unwrap()).unwrap().avg_correct();
        prop_assert!(sol.correct_prob >= (1.0 - p) * me - 1e-9);
    }

    #[test]
    fn success_decreases_with_failure(seed in arb_seed(3), a in 0.0f64..0.9, b in 0.0f64..0.9) {
        let tol = Tolerances::default();
        let set = cyclic_set(seed);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let c_lo = solve_oim_with(&set, lo, &options(), &tol).unwrap().correct_prob;
        let c_hi = solve_oim_with(&set, hi, &options(), &tol).unwrap().correct_prob;
        prop_assert!(c_lo >= c_hi - 1e-9, "{lo}: {c_lo} < {hi}: {c_hi}");
    }

    #[test]
    fn preprocessed_states_hide_the_message(
        seed in arb_seed(3),
        p in 0.0f64..0.9,
        setting in prop_oneof![
            Just((2usize, MapKind::Entangled)),
            Just((2, MapKind::Separable)),
            Just((3, MapKind::Entangled)),
        ],
    ) {
        let (n, kind) = setting;
        let mut config = RunConfig::shift(vec![3], vec![seed], p, n);
        config.preprocessing = kind;
        let pl = Pipeline::build(&config).unwrap();
        prop_assert!(check_secrecy(&pl.states).unwrap() <= 1e-9);
        prop_assert!(equivalence_deviation(&pl.set, &pl.dilation, &pl.states, &pl.receiver).unwrap() <= 1e-9);
    }

    #[test]
    fn decoding_is_a_homomorphism(
        t in proptest::collection::vec(0usize..4, 3),
        s in proptest::collection::vec(0usize..2, 3),
        r in 0usize..1,
        g in 0usize..4,
    ) {
        let seed = vec![c64(0.4f64.sqrt(), 0.0), c64(0.3f64.sqrt(), 0.0), c64(0.2f64.sqrt(), 0.0), c64(0.1f64.sqrt(), 0.0)];
        let pl = Pipeline::build(&RunConfig::shift(vec![2, 2], vec![seed], 0.2, 3)).unwrap();
        let group = pl.set.group().clone();
        let labels: Vec<(usize, usize, usize)> = (0..3).map(|i| (s[i], t[i], r)).collect();
        let before = pl.receiver.decode(&labels).unwrap().outcome;
        let mut shifted = labels.clone();
        shifted[1].1 = group.compose(shifted[1].1, g);
        let after = pl.receiver.decode(&shifted).unwrap().outcome;
        prop_assert_eq!(after, before.map(|k| group.compose(k, g)));
        prop_assert_eq!(before.is_some(), s.iter().sum::<usize>() % 2 == 0);
    }

    #[test]
    fn reduced_product_states(a in arb_density(2), b in arb_density(3), c in arb_density(2)) {
        let rho = kron(&kron(&a, &b).unwrap(), &c).unwrap();
        let dims = [2, 3, 2];
        prop_assert!(partial_trace(&rho, &dims, &[1]).unwrap().distance(&b) <= 1e-12);
        prop_assert!(partial_trace(&rho, &dims, &[0, 2]).unwrap().distance(&kron(&a, &c).unwrap()) <= 1e-12);
        let ab = partial_trace(&rho, &dims, &[0, 1]).unwrap();
        prop_assert!(partial_trace(&ab, &[2, 3], &[0]).unwrap().distance(&a) <= 1e-12);
    }

    #[test]
    fn composite_reduction_matches_partial_trace(seed in arb_seed(3), p in 0.0f64..0.9, keep in prop_oneof![Just(vec![0usize]), Just(vec![1]), Just(vec![0, 2]), Just(vec![1, 2])]) {
        let pl = Pipeline::build(&RunConfig::shift(vec![3], vec![seed], p, 3)).unwrap();
        for state in &pl.states {
            let full = state.matrix().unwrap();
            let direct = partial_trace(&full, state.dims(), &keep).unwrap();
            prop_assert!(state.reduced(&keep).unwrap().distance(&direct) <= 1e-12);
            prop_assert!((full.trace().re - 1.0).abs() <= 1e-9);
        }
    }
}
