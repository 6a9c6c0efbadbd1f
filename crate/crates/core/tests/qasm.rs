use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spt_core::circuit::{build_brickwork, export_qasm, gate_unitary, parse_qasm, GATE_PARAMS};

/// `|tr(U^dag V)| / 4`, which is 1 exactly when the gates agree up to phase.
fn phase_free_overlap(u: &nalgebra::Matrix4<spt_core::linalg::C64>, v: &nalgebra::Matrix4<spt_core::linalg::C64>) -> f64 {
    (u.adjoint() * v).trace().norm() / 4.0
}

#[test]
fn thousand_random_gates_survive_export_and_parse() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let c = build_brickwork(2, 0.5, None).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p: Vec<f64> = (0..GATE_PARAMS).map(|_| rng.random_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI)).collect();
        let prog = parse_qasm(&export_qasm(&c, &p).unwrap()).unwrap();
        assert_eq!(prog.gates.len(), 1);
        assert_eq!(prog.cx_count(), 3);
        let want = gate_unitary(&p);
        let got = prog.gates[0].1;
        let ov = phase_free_overlap(&want, &got);
        // entrywise comparison after removing the global phase
        let k = (want.adjoint() * got).trace();
        let phase = k / k.norm();
        let dev = (got - want * phase).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(dev).max((ov - 1.0).abs());
    }
    assert!(worst < 1e-10, "worst deviation {:e}", worst);
}

#[test]
fn whole_circuits_keep_gate_order_and_sites() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (n, layers) in [(4, 1.0), (8, 2.5), (10, 3.5)] {
        let c = build_brickwork(n, layers, None).unwrap();
        let full: Vec<f64> = (0..c.full_param_count()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let text = export_qasm(&c, &full).unwrap();
        assert!(text.starts_with("OPENQASM 3.0;"));
        let prog = parse_qasm(&text).unwrap();
        assert_eq!(prog.n_qubits, n);
        assert_eq!(prog.cx_count(), c.metrics().cnot_count);
        for (g, (site, u)) in prog.gates.iter().enumerate() {
            assert_eq!(*site, c.gates()[g].1);
            let want = gate_unitary(&full[g * GATE_PARAMS..(g + 1) * GATE_PARAMS]);
            assert!((phase_free_overlap(&want, u) - 1.0).abs() < 1e-10);
        }
    }
}
