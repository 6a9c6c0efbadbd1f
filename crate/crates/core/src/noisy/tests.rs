use nalgebra::{DMatrix, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::circuit::{build_brickwork, gate::gate_unitary, Alignment, HalfLayer};
use crate::linalg::{C64, ONE, ZERO};

/// Dense density matrix of the noisy circuit: each gate is followed by the
/// Pauli channel `(1 - p) rho + p/15 sum_P P rho P` on its two qubits.
fn dense_channel(c: &BrickworkCircuit, full: &[f64], p: f64) -> DMatrix<C64> {
    let n = c.n_qubits();
    let dim = 1 << n;
    let embed = |u: &Matrix4<C64>, left: usize| {
        let shift = n - 2 - left;
        DMatrix::from_fn(dim, dim, |r, col| {
            let rest = !(3 << shift);
            if r & rest != col & rest {
                return ZERO;
            }
            u[((r >> shift) & 3, (col >> shift) & 3)]
        })
    };
    let paulis: Vec<Matrix4<C64>> = (1..16u8).map(sampler::pauli_pair).collect();
    let mut rho = DMatrix::from_element(dim, dim, ZERO);
    rho[(0, 0)] = ONE;
    for (g, &(_, site)) in c.gates().iter().enumerate() {
        let u = embed(&gate_unitary(&full[g * 15..(g + 1) * 15]), site);
        rho = &u * rho * u.adjoint();
        let mut mixed = &rho * C64::new(1.0 - p, 0.0);
        for q in &paulis {
            let e = embed(q, site);
            mixed += &e * &rho * e.adjoint() * C64::new(p / 15.0, 0.0);
        }
        rho = mixed;
    }
    rho
}

fn dense_expect(rho: &DMatrix<C64>, n: usize, op: &PauliString) -> f64 {
    let mut o = DMatrix::from_element(1, 1, ONE);
    for site in 0..n {
        o = o.kronecker(&DMatrix::from_column_slice(2, 2, op.get(site).matrix().as_slice()));
    }
    (rho * o).trace().re * f64::from(op.sign())
}

fn three_gate_circuit() -> BrickworkCircuit {
    let layers = vec![HalfLayer { alignment: Alignment::Even, sites: vec![0, 2, 4] }];
    BrickworkCircuit::from_layers(6, layers, None).unwrap()
}

fn random_params(c: &BrickworkCircuit, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..c.full_param_count()).map(|_| rng.random_range(-1.5..1.5)).collect()
}

#[test]
fn analytic_noiseless_matches_exact() {
    let c = build_brickwork(6, 2.0, None).unwrap();
    let full = random_params(&c, 1);
    let (psi, _) = c.prepare(&full, &TruncationPolicy::lossless()).unwrap();
    let cfg = ShotConfig { shots: 20, twirls: 4, analytic: true, ..ShotConfig::default() };
    let ops = vec![
        PauliString::z_string(1, 3),
        PauliString::new([(0, Pauli::X), (2, Pauli::Y)]).unwrap(),
        PauliString::new([(4, Pauli::Y)]).unwrap().with_sign(-1),
    ];
    for (op, r) in ops.iter().zip(estimate_many(&c, &full, &ops, &NoiseModel::noiseless(), &cfg).unwrap()) {
        assert!((r.mean - psi.expect_pauli(op).unwrap()).abs() < 1e-10);
        assert!(r.stderr < 1e-12);
    }
}

#[test]
fn noiseless_z_on_zero_state() {
    let c = three_gate_circuit();
    let full = vec![0.0; c.full_param_count()];
    let r = estimate(&c, &full, &PauliString::z_string(0, 1), &NoiseModel::noiseless(), &ShotConfig::default()).unwrap();
    assert_eq!((r.mean, r.stderr, r.shots, r.twirls), (1.0, 0.0, 10_000, 100));
}

#[test]
fn depolarized_estimates_match_dense_channel() {
    let c = three_gate_circuit();
    let full = random_params(&c, 3);
    let p = 0.01;
    let noise = NoiseModel::depolarizing(p).with_readout(ReadoutNoise::uniform(0.02, 0.04));
    let op = PauliString::z_string(0, 1);
    let want = dense_expect(&dense_channel(&c, &full, p), 6, &op);
    for seed in 0..20 {
        let cfg = ShotConfig { seed, ..ShotConfig::default() };
        let r = estimate(&c, &full, &op, &noise, &cfg).unwrap();
        assert!(r.stderr > 0.0);
        assert!((r.mean - want).abs() < 3.0 * r.stderr, "seed {}: {} vs {} +- {}", seed, r.mean, want, r.stderr);
    }
}

#[test]
fn analytic_trajectories_converge_to_channel() {
    let c = build_brickwork(4, 2.0, None).unwrap();
    let full = random_params(&c, 8);
    let p = 0.05;
    let rho = dense_channel(&c, &full, p);
    let cfg = ShotConfig { shots: 20_000, twirls: 20, analytic: true, ..ShotConfig::default() };
    let ops = vec![PauliString::z_string(1, 2), PauliString::new([(0, Pauli::X), (3, Pauli::Z)]).unwrap()];
    for (op, r) in ops.iter().zip(estimate_many(&c, &full, &ops, &NoiseModel::depolarizing(p), &cfg).unwrap()) {
        let want = dense_expect(&rho, 4, op);
        assert!((r.mean - want).abs() < 4.0 * r.stderr + 1e-12, "{}: {} vs {}", op, r.mean, want);
    }
}

#[test]
fn unbiased_at_zero_noise() {
    let c = build_brickwork(6, 1.5, None).unwrap();
    let full = random_params(&c, 11);
    let (psi, _) = c.prepare(&full, &TruncationPolicy::lossless()).unwrap();
    let ops = vec![
        PauliString::z_string(2, 2),
        PauliString::new([(1, Pauli::X), (2, Pauli::X)]).unwrap(),
        PauliString::new([(3, Pauli::Y), (5, Pauli::Z)]).unwrap(),
    ];
    let cfg = ShotConfig { shots: 100_000, ..ShotConfig::default() };
    for (op, r) in ops.iter().zip(estimate_many(&c, &full, &ops, &NoiseModel::noiseless(), &cfg).unwrap()) {
        let exact = psi.expect_pauli(op).unwrap();
        assert!((r.mean - exact).abs() < 4.0 * r.stderr, "{}: {} vs {}", op, r.mean, exact);
    }
}

#[test]
fn deterministic_per_seed() {
    let c = build_brickwork(6, 1.0, None).unwrap();
    let full = random_params(&c, 2);
    let noise = NoiseModel::depolarizing(0.03).with_readout(ReadoutNoise::uniform(0.01, 0.03));
    let cfg = ShotConfig { shots: 2_000, twirls: 10, seed: 42, ..ShotConfig::default() };
    let op = PauliString::z_string(1, 3);
    let a = estimate(&c, &full, &op, &noise, &cfg).unwrap();
    assert_eq!(a, estimate(&c, &full, &op, &noise, &cfg).unwrap());
    let b = estimate(&c, &full, &op, &noise, &ShotConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(a.mean, b.mean);
}

#[test]
fn rejects_invalid_requests() {
    let c = three_gate_circuit();
    let full = vec![0.0; c.full_param_count()];
    let op = PauliString::z_string(0, 1);
    let cfg = ShotConfig::default();
    assert!(estimate(&c, &full, &op, &NoiseModel::depolarizing(0.6).amplified(2.0), &cfg).is_err());
    assert!(estimate(&c, &full, &PauliString::z_string(5, 2), &NoiseModel::noiseless(), &cfg).is_err());
    assert!(estimate(&c, &full, &op, &NoiseModel::noiseless(), &ShotConfig { twirls: 0, ..cfg.clone() }).is_err());
    let per_qubit = ReadoutNoise { p01: FlipRates::PerQubit(vec![0.1; 3]), p10: FlipRates::Uniform(0.0) };
    assert!(estimate(&c, &full, &op, &NoiseModel::noiseless().with_readout(per_qubit), &cfg).is_err());
}

#[test]
fn trex_factors() {
    let cal = trex_calibrate(&ReadoutNoise::default(), &[0, 1, 2], 1000, 1).unwrap();
    assert_eq!(cal.factor(&[0, 1, 2]).unwrap(), Estimate { mean: 1.0, stderr: 0.0 });
    let noisy = ReadoutNoise::uniform(0.05, 0.05);
    let cal = trex_calibrate(&noisy, &[3, 4], 10_000, 2).unwrap();
    let f = cal.factor(&[3]).unwrap();
    assert!((f.mean - 0.9).abs() < 3.0 * f.stderr, "{:?}", f);
    let f = cal.factor(&[3, 4]).unwrap();
    assert!((f.mean - 0.81).abs() < 3.0 * f.stderr, "{:?}", f);
    // twirling symmetrizes asymmetric flips to their mean
    let cal = trex_calibrate(&ReadoutNoise::uniform(0.02, 0.08), &[0], 10_000, 3).unwrap();
    let f = cal.factor(&[0]).unwrap();
    assert!((f.mean - 0.9).abs() < 3.0 * f.stderr, "{:?}", f);
    assert!(cal.factor(&[1]).is_err());
    let flipped = trex_calibrate(&ReadoutNoise::uniform(1.0, 1.0), &[0], 10, 0).unwrap();
    assert!(flipped.factor(&[0]).is_err());
}

#[test]
fn trex_removes_readout_bias() {
    let c = three_gate_circuit();
    let full = random_params(&c, 5);
    let (psi, _) = c.prepare(&full, &TruncationPolicy::lossless()).unwrap();
    let op = PauliString::z_string(2, 2);
    let exact = psi.expect_pauli(&op).unwrap();
    let noise = NoiseModel::noiseless().with_readout(ReadoutNoise::uniform(0.03, 0.07));
    let cfg = ShotConfig { shots: 50_000, ..ShotConfig::default() };
    let raw = estimate(&c, &full, &op, &noise, &ShotConfig { trex: false, ..cfg.clone() }).unwrap();
    let fixed = estimate(&c, &full, &op, &noise, &cfg).unwrap();
    assert!((fixed.mean - exact).abs() < 4.0 * fixed.stderr);
    assert!((raw.mean - exact).abs() > 4.0 * raw.stderr);
}

#[test]
fn identity_validation_without_noise() {
    let skeleton = build_brickwork(6, 2.0, None).unwrap();
    let cfg = ShotConfig { shots: 100, twirls: 10, ..ShotConfig::default() };
    let v = identity_circuit_validation(
        &skeleton,
        &NoiseModel::noiseless(),
        &ReadoutNoise::default(),
        &cfg,
        &ValidationConfig::default(),
    )
    .unwrap();
    assert_eq!(v.len(), 6);
    for q in &v {
        assert_eq!(q.fit.extrapolated_value, 1.0);
        assert!(!q.flagged);
    }
}

#[test]
fn provider_groups_commuting_strings() {
    let ops = vec![
        PauliString::z_string(0, 2),
        PauliString::new([(0, Pauli::X)]).unwrap(),
        PauliString::z_string(1, 3),
        PauliString::new([(0, Pauli::X), (3, Pauli::Y)]).unwrap(),
    ];
    let groups = measurement_groups(&ops);
    assert_eq!(groups.iter().map(|g| g.members.clone()).collect::<Vec<_>>(), vec![vec![0, 2], vec![1, 3]]);
    let c = three_gate_circuit();
    let full = random_params(&c, 9);
    let provider = NoisyProvider {
        circuit: &c,
        full: full.clone(),
        noise: NoiseModel::noiseless(),
        shots: ShotConfig { analytic: true, shots: 1, twirls: 1, ..ShotConfig::default() },
        zne: None,
    };
    let (psi, _) = c.prepare(&full, &TruncationPolicy::lossless()).unwrap();
    for (op, e) in ops.iter().zip(provider.expect_all(&ops).unwrap()) {
        assert!((e.mean - psi.expect_pauli(op).unwrap()).abs() < 1e-10);
    }
    assert!(!provider.zne_used());
}
