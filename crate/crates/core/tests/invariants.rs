use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spt_core::circuit::{build_brickwork, gate_unitary, GATE_PARAMS};
use spt_core::lattice::{phase_label, PhaseLabel};
use spt_core::linalg::{truncation_rank, TruncationPolicy, C64};
use spt_core::mps::Mps;
use spt_core::noisy::{zne_extrapolate, ZneModel};
use spt_core::observables::{bootstrap_spectrum, tomography_expectations, DEFAULT_TOMOGRAPHY_CAP};

fn random_mps(n: usize, chi: usize, seed: u64) -> Mps {
    Mps::random(n, chi, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn angles(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-4.0..4.0f64, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonicalization_preserves_the_state(n in 2usize..8, chi in 1usize..6, seed: u64, c in 0usize..8) {
        let psi = random_mps(n, chi, seed);
        let before = psi.to_statevector().unwrap();
        let center = c % n;
        let moved = psi.canonicalize(center).unwrap();
        prop_assert_eq!(moved.ortho_center(), Some(center));
        prop_assert!(distance(&before, &moved.to_statevector().unwrap()) < 1e-12);
        prop_assert!((moved.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn truncation_respects_the_policy(
        mut s in prop::collection::vec(0.0..1.0f64, 1..40),
        chi_max in 1usize..50,
        svd_min in 0.0..0.5f64,
        trunc_cut in 0.0..0.2f64,
    ) {
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let t = truncation_rank(&s, &TruncationPolicy { chi_max, svd_min, trunc_cut });
        prop_assert!(t.keep >= 1 && t.keep <= s.len().min(chi_max));
        let dropped: f64 = s[t.keep..].iter().map(|x| x * x).sum();
        prop_assert!((t.discarded_weight - dropped).abs() < 1e-12);
    }

    #[test]
    fn capped_gate_application_bounds_the_bond(n in 3usize..8, seed: u64, chi in 1usize..4, p in angles(GATE_PARAMS)) {
        let psi = random_mps(n, 4, seed);
        let (out, err) = psi.apply_two_qubit_gate(&gate_unitary(&p), n / 2 - 1, &TruncationPolicy::with_chi(chi)).unwrap();
        prop_assert!(out.max_bond_dim() <= chi.max(4));
        prop_assert!(out.bond_dims()[n / 2 - 1] <= chi);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&err));
    }

    #[test]
    fn gates_are_unitary(p in angles(GATE_PARAMS)) {
        let u = gate_unitary(&p);
        let dev = (u.adjoint() * u - nalgebra::Matrix4::identity()).norm();
        prop_assert!(dev < 1e-12);
    }

    #[test]
    fn reduced_density_matrices_are_states(n in 2usize..8, seed: u64, first in 0usize..7, len in 1usize..4) {
        let psi = random_mps(n, 4, seed);
        let first = first % n;
        let sites: Vec<usize> = (first..(first + len).min(n)).collect();
        let rho = psi.reduced_density_matrix(&sites).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
        prop_assert!(rho.asymmetry() < 1e-10);
        prop_assert!(rho.spectrum().iter().all(|&e| e > -1e-10 && e < 1.0 + 1e-10));
        prop_assert!((rho.spectrum().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn entanglement_spectra_sum_to_one(n in 2usize..9, seed: u64, bond in 0usize..8) {
        let psi = random_mps(n, 5, seed);
        let spec = psi.entanglement_spectrum(bond % (n - 1)).unwrap();
        prop_assert!((spec.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(spec.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn mps_json_round_trip_is_exact(n in 1usize..7, chi in 1usize..4, seed: u64) {
        let psi = random_mps(n, chi, seed);
        let text = psi.to_json().unwrap();
        let back = Mps::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), text);
        prop_assert_eq!(back.to_statevector().unwrap(), psi.to_statevector().unwrap());
    }

    #[test]
    fn brickwork_metrics_follow_the_layout(pairs in 1usize..10, halves in 1usize..12) {
        let c = build_brickwork(2 * pairs, halves as f64 / 2.0, None).unwrap();
        let m = c.metrics();
        prop_assert_eq!(m.cnot_count, 3 * c.n_gates());
        let busy = c.layers().iter().filter(|l| !l.sites.is_empty()).count();
        prop_assert_eq!(m.cnot_depth, 3 * busy);
        prop_assert!(m.parameter_count <= c.full_param_count());
        let full: usize = (0..c.n_half_layers()).map(|h| c.layer_gates(h).len()).sum();
        prop_assert_eq!(full, c.n_gates());
    }

    #[test]
    fn expand_then_gather_is_identity(pairs in 1usize..5, halves in 1usize..8, seed: u64) {
        let c = build_brickwork(2 * pairs, halves as f64 / 2.0, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let reduced: Vec<f64> = (0..c.parameter_count()).map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0)).collect();
        let full = c.expand(&reduced).unwrap();
        prop_assert_eq!(c.gather(&full).unwrap(), reduced.clone());
        prop_assert_eq!(c.reduce(&full).unwrap().len(), reduced.len());
    }

    #[test]
    fn reduction_keeps_the_prepared_state(pairs in 1usize..4, halves in 1usize..6, seed: u64) {
        let c = build_brickwork(2 * pairs, halves as f64 / 2.0, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let full: Vec<f64> = (0..c.full_param_count()).map(|_| rand::Rng::random_range(&mut rng, -3.0..3.0)).collect();
        let reduced = c.expand(&c.reduce(&full).unwrap()).unwrap();
        let policy = TruncationPolicy::lossless();
        let (a, _) = c.prepare(&full, &policy).unwrap();
        let (b, _) = c.prepare(&reduced, &policy).unwrap();
        prop_assert!((a.fidelity(&b).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bootstrap_without_noise_is_the_direct_spectrum(n in 3usize..7, seed: u64) {
        let psi = random_mps(n, 3, seed);
        let (means, stderrs) = tomography_expectations(&psi, &[0, 1], DEFAULT_TOMOGRAPHY_CAP).unwrap();
        prop_assert!(stderrs.iter().all(|&s| s == 0.0));
        let b = bootstrap_spectrum(&means, &stderrs, 4, seed).unwrap();
        prop_assert!((b.direct.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for (d, m) in b.direct.iter().zip(&b.mean_eigenvalues) {
            prop_assert!((d - m).abs() < 1e-10);
        }
        prop_assert!(b.stddevs.iter().all(|s| s.abs() < 1e-10));
        let direct = psi.reduced_density_matrix(&[0, 1]).unwrap();
        for (x, y) in b.direct.iter().zip(direct.spectrum()) {
            prop_assert!((x - y).abs() < 1e-10, "{} vs {}", x, y);
        }
    }
}

proptest! {
    #[test]
    fn phase_labels_are_consistent(j0 in 0.01..5.0f64, j1 in 0.01..5.0f64) {
        prop_assume!((j0 - j1).abs() > 1e-9);
        let want = if j0 > j1 { PhaseLabel::EvenHaldane } else { PhaseLabel::OddHaldane };
        prop_assert_eq!(phase_label(j0, j1), want);
        prop_assert_eq!(phase_label(j0, -j1), PhaseLabel::EvenHaldane);
        prop_assert_eq!(phase_label(-j0, j1), PhaseLabel::OddHaldane);
        prop_assert_eq!(phase_label(-j0, -j1), PhaseLabel::Ferromagnetic);
    }

    #[test]
    fn linear_extrapolation_is_exact_on_lines(b in -1.0..1.0f64, a in -0.5..0.5f64) {
        let series: Vec<(f64, f64, f64)> = [1.0, 1.5, 2.0, 2.5].iter().map(|&x| (x, b + a * x, 0.01)).collect();
        let fit = zne_extrapolate(&series, &[ZneModel::Linear], None).unwrap();
        prop_assert!((fit.extrapolated_value - b).abs() < 1e-9);
    }
}
