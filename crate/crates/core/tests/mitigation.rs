//! Behaviour of the error-mitigation stack on small fixtures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spt_core::circuit::{build_brickwork, initial_parameters, BrickworkCircuit};
use spt_core::lattice::PhaseLabel;
use spt_core::linalg::TruncationPolicy;
use spt_core::mps::{Pauli, PauliString};
use spt_core::noisy::{
    estimate, identity_circuit_validation, zne_estimates, FlipRates, NoiseModel, ReadoutNoise, ShotConfig,
    ValidationConfig, ZneSettings,
};

/// Even-init L = 2 circuit near the singlet product state on 10 qubits.
fn haldane_fixture(seed: u64) -> (BrickworkCircuit, Vec<f64>) {
    let c = build_brickwork(10, 2.0, Some(PhaseLabel::EvenHaldane)).unwrap();
    let mut reduced = initial_parameters(&c, PhaseLabel::EvenHaldane).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for x in reduced.iter_mut() {
        *x += rng.random_range(-0.1..0.1);
    }
    let full = c.expand(&reduced).unwrap();
    (c, full)
}

#[test]
fn zne_beats_raw_estimates() {
    let noise = NoiseModel::depolarizing(0.01).with_readout(ReadoutNoise::uniform(0.01, 0.02));
    let op = PauliString::z_string(2, 6).with_sign(-1);
    let trials = 50;
    let mut wins = 0;
    for t in 0..trials {
        let (c, full) = haldane_fixture(t);
        let (psi, _) = c.prepare(&full, &TruncationPolicy::lossless()).unwrap();
        let ideal = psi.expect_pauli(&op).unwrap();
        let cfg = ShotConfig { seed: t, ..ShotConfig::default() };
        let raw = estimate(&c, &full, &op, &noise, &cfg).unwrap();
        let z = zne_estimates(&c, &full, std::slice::from_ref(&op), &noise, &noise.readout, &cfg, &ZneSettings::default())
            .unwrap()
            .remove(0);
        if (z.extrapolated_value - ideal).abs() < (raw.mean - ideal).abs() {
            wins += 1;
        }
    }
    assert!(wins * 10 >= trials * 9, "ZNE closer in {} of {} trials", wins, trials);
}

#[test]
fn identity_validation_recovers_one() {
    let skeleton = build_brickwork(20, 3.0, None).unwrap();
    let noise = NoiseModel::depolarizing(0.005).with_readout(ReadoutNoise::uniform(0.01, 0.02));
    for seed in 0..5 {
        let cfg = ShotConfig { seed, ..ShotConfig::default() };
        let v = identity_circuit_validation(&skeleton, &noise, &noise.readout, &cfg, &ValidationConfig::default())
            .unwrap();
        for q in &v {
            assert!(!q.flagged, "seed {} qubit {}: {:?}", seed, q.qubit, q.fit);
            assert!(q.deviation < 0.03, "seed {} qubit {}: {:?}", seed, q.qubit, q.fit);
        }
    }
}

#[test]
fn identity_validation_flags_faulty_readout() {
    let skeleton = build_brickwork(20, 3.0, None).unwrap();
    let (p01, p10) = (0.01, 0.02);
    let nominal = ReadoutNoise::uniform(p01, p10);
    for (k, faulty) in [0usize, 7, 13, 19].into_iter().enumerate() {
        let rates = |p: f64| FlipRates::PerQubit((0..20).map(|q| if q == faulty { 10.0 * p } else { p }).collect());
        let device = NoiseModel::depolarizing(0.005).with_readout(ReadoutNoise { p01: rates(p01), p10: rates(p10) });
        let cfg = ShotConfig { seed: k as u64, ..ShotConfig::default() };
        let v = identity_circuit_validation(&skeleton, &device, &nominal, &cfg, &ValidationConfig::default()).unwrap();
        let flagged: Vec<usize> = v.iter().filter(|q| q.flagged).map(|q| q.qubit).collect();
        assert_eq!(flagged, vec![faulty]);
    }
}

/// Random two-layer circuits on 8 qubits: unlike the near-singlet fixture,
/// their states are far from `ZZ` eigenstates, so a coherent `ZZ` error
/// visibly rotates them.
fn scrambled_fixture(seed: u64) -> (BrickworkCircuit, Vec<f64>) {
    let c = build_brickwork(8, 2.0, None).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = (0..c.full_param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
    (c, full)
}

#[test]
fn twirling_improves_coherent_error_fits() {
    let noise = NoiseModel { coherent_zz: 0.8, ..NoiseModel::depolarizing(0.002) };
    let op = PauliString::new([(3, Pauli::X), (4, Pauli::X)]).unwrap();
    let fixtures = 8;
    let mut with = 0.0;
    let mut without = 0.0;
    for t in 0..fixtures {
        let (c, full) = scrambled_fixture(100 + t);
        for (twirl, acc) in [(true, &mut with), (false, &mut without)] {
            let cfg = ShotConfig { seed: t, pauli_twirling: twirl, ..ShotConfig::default() };
            let z = zne_estimates(&c, &full, std::slice::from_ref(&op), &noise, &noise.readout, &cfg, &ZneSettings::default())
                .unwrap()
                .remove(0);
            *acc += z.fit_residual / fixtures as f64;
        }
    }
    assert!(with <= without, "mean reduced chi2 {} with twirling, {} without", with, without);
}
