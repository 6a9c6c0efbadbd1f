//! Library results against naive dense computations.

use nalgebra::{DMatrix, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spt_core::aqc::{cost, cost_and_full_gradient};
use spt_core::circuit::{build_brickwork, gate_unitary, GATE_PARAMS};
use spt_core::dmrg::{default_initial_state, run_dmrg, DmrgConfig};
use spt_core::lattice::{build_hamiltonian_mpo, CouplingPattern};
use spt_core::linalg::{contract, svd_truncate_matrix, Tensor, TruncationPolicy, C64};
use spt_core::mps::{compress, Mps, Pauli, PauliString};
use spt_core::observables::tomography_rdm;
use spt_oracle as dense;

fn lossless() -> TruncationPolicy {
    TruncationPolicy::lossless()
}

fn to_dense4(u: &Matrix4<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |r, c| u[(r, c)])
}

fn to_m4(u: &DMatrix<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| u[(r, c)])
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_pauli_string(n: usize, len: usize, rng: &mut ChaCha8Rng) -> (PauliString, Vec<(usize, char)>) {
    let start = rng.random_range(0..=n - len);
    let ps: Vec<Pauli> = (0..len).map(|_| [Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..3)]).collect();
    let ops = ps.iter().enumerate().map(|(k, p)| (start + k, p.label())).collect();
    (PauliString::from_dense(start, &ps), ops)
}

#[test]
fn contraction_is_matrix_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut r = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let a: Vec<C64> = (0..9).map(|_| r()).collect();
    let b: Vec<C64> = (0..9).map(|_| r()).collect();
    let c = contract(&Tensor::from_vec(&[3, 3], a.clone()).unwrap(), &Tensor::from_vec(&[3, 3], b.clone()).unwrap(), &[(1, 0)])
        .unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let mut want = C64::new(0.0, 0.0);
            for k in 0..3 {
                want += a[3 * i + k] * b[3 * k + j];
            }
            assert!((c.data()[3 * i + j] - want).norm() < 1e-12);
        }
    }
}

#[test]
fn truncation_error_is_dropped_weight() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = DMatrix::from_fn(8, 8, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let policy = TruncationPolicy { chi_max: 3, svd_min: 0.0, trunc_cut: 0.0 };
    let t = svd_truncate_matrix(&m, &policy).unwrap();
    let full = m.clone().svd(false, false).singular_values;
    let dropped: f64 = full.iter().skip(3).map(|s| s * s).sum();
    let mut us = t.u.clone();
    for (c, s) in t.s.iter().enumerate() {
        us.column_mut(c).scale_mut(*s);
    }
    let err = (&m - us * &t.vt).norm_squared();
    assert!((err - dropped).abs() < 1e-10);
    assert!((t.discarded_weight - dropped).abs() < 1e-10);
}

#[test]
fn canonical_centers_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let psi = Mps::random(6, 4, &mut rng).unwrap();
    let v = psi.to_statevector().unwrap();
    let strings: Vec<_> = (0..10).map(|_| random_pauli_string(6, 3, &mut rng)).collect();
    for center in [0, 5, 2] {
        let c = psi.clone().canonicalize(center).unwrap();
        for (p, ops) in &strings {
            assert!((c.expect_pauli(p).unwrap() - dense::pauli_expectation(&v, ops)).abs() < 1e-10);
        }
    }
}

#[test]
fn inner_products() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = Mps::random(8, 5, &mut rng).unwrap();
    let b = Mps::random(8, 3, &mut rng).unwrap();
    let want = dense::inner(&a.to_statevector().unwrap(), &b.to_statevector().unwrap());
    assert!((a.inner(&b).unwrap() - want).norm() < 1e-10);
}

#[test]
fn pauli_expectations_on_ten_sites() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let psi = Mps::random(10, 6, &mut rng).unwrap();
    let v = psi.to_statevector().unwrap();
    for _ in 0..20 {
        let (p, ops) = random_pauli_string(10, 4, &mut rng);
        assert!((psi.expect_pauli(&p).unwrap() - dense::pauli_expectation(&v, &ops)).abs() < 1e-10);
    }
}

#[test]
fn statevector_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let v = dense::random_state(9, &mut rng);
    let psi = Mps::from_statevector(&v, &lossless()).unwrap();
    assert!(max_diff(&psi.to_statevector().unwrap(), &v) < 1e-12);
}

#[test]
fn ground_state_spectrum_matches_exact_diagonalization() {
    let model = CouplingPattern::new(1.0, 0.5, 8).unwrap();
    let h = dense::heisenberg(1.0, 0.5, 8);
    let e = h.clone().symmetric_eigen();
    let k = e.eigenvalues.imin();
    let v: Vec<C64> = e.eigenvectors.column(k).iter().copied().collect();
    let cfg = DmrgConfig { target_sector: Some(0), ..DmrgConfig::default() };
    let r = run_dmrg(&build_hamiltonian_mpo(&model).unwrap(), &default_initial_state(&model).unwrap(), &cfg).unwrap();
    let got = r.state.entanglement_spectrum(3).unwrap();
    let want = dense::hermitian_eigenvalues(&dense::reduced_density(&v, 0..4));
    for (i, w) in want.iter().enumerate() {
        assert!((got.get(i).copied().unwrap_or(0.0) - w).abs() < 1e-8, "{}: {:?} vs {:?}", i, got, want);
    }
}

#[test]
fn gate_sequence_matches_statevector() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut psi = Mps::zero_state(8).unwrap();
    let mut v = dense::zero(8);
    for _ in 0..3 {
        let u = dense::random_unitary(4, &mut rng);
        let left = rng.random_range(0..7);
        psi = psi.apply_two_qubit_gate(&to_m4(&u), left, &TruncationPolicy::unlimited()).unwrap().0;
        v = dense::apply_2q(&v, &u, left);
    }
    assert!(max_diff(&psi.to_statevector().unwrap(), &v) < 1e-10);
}

#[test]
fn hamiltonian_mpo_is_the_pauli_sum() {
    let mpo = build_hamiltonian_mpo(&CouplingPattern::new(1.0, 0.5, 8).unwrap()).unwrap();
    let got = mpo.to_dense().unwrap();
    let want = dense::heisenberg(1.0, 0.5, 8);
    assert!((got - want).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-12);
}

#[test]
fn dmrg_matches_exact_diagonalization() {
    let model = CouplingPattern::new(1.0, 0.5, 10).unwrap();
    let exact = dense::ground_energy(&dense::heisenberg(1.0, 0.5, 10));
    let r = run_dmrg(&build_hamiltonian_mpo(&model).unwrap(), &default_initial_state(&model).unwrap(), &DmrgConfig::default())
        .unwrap();
    assert!((r.energy - exact).abs() < 1e-8, "{} vs {}", r.energy, exact);
}

#[test]
fn sector_targeting_matches_restricted_diagonalization() {
    for (j0, j1, m) in [(0.5, 1.0, 1), (0.5, 1.0, 0), (1.0, 0.5, 0), (1.0, -2.0, 0), (1.0, -2.0, 2)] {
        let model = CouplingPattern::new(j0, j1, 10).unwrap();
        let exact = dense::sector_ground_energy(&dense::heisenberg(j0, j1, 10), 10, m);
        let cfg = DmrgConfig { target_sector: Some(m), ..DmrgConfig::default() };
        // Neel state with the first m down spins flipped up
        let mut flips = m;
        let bits: Vec<u8> = (0..10)
            .map(|i| if i % 2 == 1 && flips > 0 { flips -= 1; 0 } else { (i % 2) as u8 })
            .collect();
        let start = Mps::product_state(&bits).unwrap();
        let r = run_dmrg(&build_hamiltonian_mpo(&model).unwrap(), &start, &cfg).unwrap();
        assert!((r.energy - exact).abs() < 1e-8, "({}, {}) sector {}: {} vs {}", j0, j1, m, r.energy, exact);
        assert!((r.magnetization - m as f64).abs() < 1e-8);
    }
}

fn simulate_circuit(n: usize, layers: f64, full: &[f64]) -> Vec<C64> {
    let c = build_brickwork(n, layers, None).unwrap();
    let mut v = dense::zero(n);
    for (g, &(_, left)) in c.gates().iter().enumerate() {
        let u = to_dense4(&gate_unitary(&full[g * GATE_PARAMS..(g + 1) * GATE_PARAMS]));
        v = dense::apply_2q(&v, &u, left);
    }
    v
}

#[test]
fn brickwork_preparation_matches_statevector() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let c = build_brickwork(4, 1.0, None).unwrap();
    let full: Vec<f64> = (0..c.full_param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
    let (psi, _) = c.prepare(&full, &lossless()).unwrap();
    assert!(max_diff(&psi.to_statevector().unwrap(), &simulate_circuit(4, 1.0, &full)) < 1e-9);
}

#[test]
fn aqc_cost_matches_statevector() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let c = build_brickwork(8, 2.0, None).unwrap();
    let target = Mps::random(8, 4, &mut rng).unwrap().normalize().unwrap();
    let reduced: Vec<f64> = (0..c.parameter_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
    let full = c.expand(&reduced).unwrap();
    let ov = dense::inner(&target.to_statevector().unwrap(), &simulate_circuit(8, 2.0, &full));
    let got = cost(&target, &c, &reduced, &lossless()).unwrap();
    assert!((got.cost - (1.0 - ov.norm_sqr())).abs() < 1e-9);
}

#[test]
fn single_gate_gradient_is_analytic() {
    // U(a, b, c)|00> = cos(a - b)|00> + i sin(a - b)|11> up to phase, so
    // C = sin^2(a - b) against |00>
    let c = build_brickwork(2, 0.5, None).unwrap();
    let target = Mps::zero_state(2).unwrap();
    for a in [0.3, -1.1, 2.0] {
        let mut full = vec![0.0; GATE_PARAMS];
        full[6] = a;
        let (eval, g) = cost_and_full_gradient(&target, &c, &full, &lossless()).unwrap();
        assert!((eval.cost - a.sin().powi(2)).abs() < 1e-12);
        assert!((g[6] - (2.0 * a).sin()).abs() < 1e-10);
        assert!((g[7] + (2.0 * a).sin()).abs() < 1e-10);
        assert!(g[8].abs() < 1e-10);
    }
}

#[test]
fn tomography_matches_partial_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let psi = Mps::random(8, 4, &mut rng).unwrap().normalize().unwrap();
    let v = psi.to_statevector().unwrap();
    let got = tomography_rdm(&psi, &[2, 3, 4]).unwrap();
    let want = dense::reduced_density(&v, 2..5);
    assert!((got.entries() - &want).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
    let direct = psi.reduced_density_matrix(&[2, 3, 4]).unwrap();
    assert!((direct.entries() - &want).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
}

#[test]
fn compression_above_the_bond_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let psi = Mps::random(10, 5, &mut rng).unwrap().normalize().unwrap();
    let (c, f) = compress(&psi, 8, 5).unwrap();
    assert!((f - 1.0).abs() < 1e-10);
    let v = psi.to_statevector().unwrap();
    assert!((dense::inner(&v, &c.to_statevector().unwrap()).norm_sqr() - 1.0).abs() < 1e-10);
}
