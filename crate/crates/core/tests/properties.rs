mod common;

use cvsteg::channels::{loss_kraus, werner_apply};
use cvsteg::fock::{c64, displacement, Cutoff, DensityOperator, Mode, PureState};
use cvsteg::metrics::{fidelity, trace_distance};
use cvsteg::states::{coherent, random_density, thermal};
use cvsteg::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ok(check: common::Check) -> Result<(), TestCaseError> {
    check.map_err(TestCaseError::fail)
}

fn two_mode(seed: u64, levels: usize) -> DensityOperator {
    common::random_two_mode(&mut ChaCha8Rng::seed_from_u64(seed), levels)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constructors_meet_invariants(r in 0.0f64..1.6, nbar in 0.0f64..4.0, alpha in -2.0f64..2.0) {
        ok(common::constructor_invariants(r, nbar, alpha))?;
    }

    #[test]
    fn random_states_meet_invariants(seed in any::<u64>(), levels in 2usize..6) {
        ok(common::density_invariants(&two_mode(seed, levels)))?;
    }

    #[test]
    fn channels_preserve_trace(seed in any::<u64>(), levels in 2usize..6, p in 0.0f64..=1.0, eta in 0.0f64..=1.0) {
        ok(common::channel_trace_preservation(&two_mode(seed, levels), p, eta))?;
    }

    #[test]
    fn loss_kraus_is_complete(eta in 0.0f64..=1.0, levels in 2usize..20) {
        let cut = Cutoff::new(levels).unwrap();
        let ops = loss_kraus(eta, cut).unwrap();
        let sum = ops.iter().fold(cvsteg::fock::CMatrix::zeros(levels, levels), |acc, k| acc + k.adjoint() * k);
        let defect = (sum - cvsteg::fock::CMatrix::identity(levels, levels)).norm();
        prop_assert!(defect < 1e-10, "completeness defect {defect}");
    }

    #[test]
    fn werner_is_affine(seed in any::<u64>(), p in 0.0f64..=1.0) {
        let rho = two_mode(seed, 3);
        let intact = werner_apply(&rho, 0.0).unwrap();
        let broken = werner_apply(&rho, 1.0).unwrap();
        let mixed = werner_apply(&rho, p).unwrap();
        let expect = DensityOperator::mix(p, &broken, &intact).unwrap();
        prop_assert!((mixed.matrix() - expect.matrix()).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_inverts_tensor(seed in any::<u64>(), levels in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cut = Cutoff::new(levels).unwrap();
        let a = random_density(&mut rng, cut, 1, levels).unwrap();
        let b = random_density(&mut rng, cut, 1, 1).unwrap();
        let joint = random_density(&mut rng, cut, 2, levels).unwrap();
        ok(common::partial_trace_tensor(&a, &b, &joint))?;
    }

    #[test]
    fn fidelity_monotone_under_partial_trace(seed in any::<u64>(), levels in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = common::random_two_mode(&mut rng, levels);
        let sigma = common::random_two_mode(&mut rng, levels);
        ok(common::fidelity_monotone(&rho, &sigma))?;
    }

    #[test]
    fn metrics_are_symmetric_and_bounded(seed in any::<u64>(), levels in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cut = Cutoff::new(levels).unwrap();
        let rho = random_density(&mut rng, cut, 1, levels).unwrap();
        let sigma = random_density(&mut rng, cut, 1, 1).unwrap();
        let (f, g) = (fidelity(&rho, &sigma).unwrap(), fidelity(&sigma, &rho).unwrap());
        let (t, u) = (trace_distance(&rho, &sigma).unwrap(), trace_distance(&sigma, &rho).unwrap());
        prop_assert!((f - g).abs() < 1e-9 && (t - u).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&f) && (0.0..=1.0 + 1e-12).contains(&t));
        prop_assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn wigner_integrates_to_trace(seed in any::<u64>(), levels in 2usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density(&mut rng, Cutoff::new(levels).unwrap(), 1, levels).unwrap();
        ok(common::wigner_normalization(&rho))?;
    }

    #[test]
    fn displacement_is_unitary_away_from_the_edge(re in -1.5f64..1.5, im in -1.5f64..1.5) {
        let cut = Cutoff::new(60).unwrap();
        let d = displacement(c64(re, im), cut);
        let vac = PureState::vacuum(cut, 1).unwrap();
        let shifted = d.apply(&vac).unwrap();
        let overlap = shifted.inner(&coherent(c64(re, im), cut)).unwrap().norm();
        prop_assert!((overlap - 1.0).abs() < 1e-9, "overlap {overlap}");
    }

    #[test]
    fn seeded_teleportation_replays(seed in any::<u64>()) {
        ok(common::seed_replay(seed))?;
    }
}

#[test]
fn monotonicity_on_100_random_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..100 {
        let levels = 2 + i % 4;
        let rho = common::random_two_mode(&mut rng, levels);
        let sigma = common::random_two_mode(&mut rng, levels);
        common::fidelity_monotone(&rho, &sigma).unwrap();
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    assert!(Cutoff::new(0).is_err());
    let cut = Cutoff::new(4).unwrap();
    assert!(thermal(-0.1, cut).is_err());
    assert!(werner_apply(&thermal(0.5, cut).unwrap(), 0.5).is_err());
    let one = thermal(0.5, cut).unwrap();
    let other = thermal(0.5, Cutoff::new(5).unwrap()).unwrap();
    assert!(matches!(fidelity(&one, &other), Err(Error::CutoffMismatch { .. })));
    assert!(one.partial_trace(Mode::A).is_err());
}
