//! Fifteen-parameter two-qubit gates.
//!
//! Parameter layout: `[pre q0 (3), pre q1 (3), a, b, c, post q0 (3), post q1 (3)]`
//! and `U = (post0 x post1) exp(i(a XX + b YY + c ZZ)) (pre0 x pre1)`. Each
//! single-qubit factor is `u(alpha, beta, gamma) = Rz(alpha) Rx(beta) Rz(gamma)`
//! with `Rz(t) = exp(-i t Z / 2)`. The left qubit is the most significant bit
//! of the 4-dimensional index. All-zero parameters give the identity.

use nalgebra::{Matrix2, Matrix4};

use crate::linalg::{C64, ONE, ZERO};
use crate::mps::Pauli;

pub const GATE_PARAMS: usize = 15;

pub const PRE0: usize = 0;
pub const PRE1: usize = 3;
pub const INTERACTION: usize = 6;
pub const POST0: usize = 9;
pub const POST1: usize = 12;

const I: C64 = C64::new(0.0, 1.0);

pub fn rz(t: f64) -> Matrix2<C64> {
    Matrix2::new(C64::from_polar(1.0, -t / 2.0), ZERO, ZERO, C64::from_polar(1.0, t / 2.0))
}

pub fn rx(t: f64) -> Matrix2<C64> {
    let (s, c) = (t / 2.0).sin_cos();
    Matrix2::new(C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0))
}

pub fn ry(t: f64) -> Matrix2<C64> {
    let (s, c) = (t / 2.0).sin_cos();
    Matrix2::new(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0))
}

pub fn euler(p: &[f64]) -> Matrix2<C64> {
    rz(p[0]) * rx(p[1]) * rz(p[2])
}

/// `u` and its derivatives with respect to `(alpha, beta, gamma)`.
pub fn euler_with_grad(p: &[f64]) -> (Matrix2<C64>, [Matrix2<C64>; 3]) {
    let (a, b, g) = (rz(p[0]), rx(p[1]), rz(p[2]));
    let hz = Pauli::Z.matrix() * (-I * 0.5);
    let hx = Pauli::X.matrix() * (-I * 0.5);
    let u = a * b * g;
    (u, [hz * u, a * hx * b * g, u * hz])
}

/// `(alpha, beta, gamma)` with `u(alpha, beta, gamma)` equal to `v` up to a
/// global phase.
pub fn zxz_decompose(v: &Matrix2<C64>) -> [f64; 3] {
    let det = v.determinant();
    let w = v / det.sqrt();
    let c = w[(0, 0)].norm().min(1.0);
    let s = w[(1, 0)].norm().min(1.0);
    let beta = 2.0 * s.atan2(c);
    // w11 = cos(beta/2) e^{i(alpha+gamma)/2}, i w10 = sin(beta/2) e^{i(alpha-gamma)/2}
    let sum = if c > 1e-12 { 2.0 * w[(1, 1)].arg() } else { 0.0 };
    let diff = if s > 1e-12 { 2.0 * (I * w[(1, 0)]).arg() } else { 0.0 };
    [(sum + diff) / 2.0, beta, (sum - diff) / 2.0]
}

pub fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

fn pauli_pair(p: Pauli) -> Matrix4<C64> {
    let m = p.matrix();
    kron(&m, &m)
}

/// `exp(i(a XX + b YY + c ZZ))`; the three terms commute.
pub fn interaction(a: f64, b: f64, c: f64) -> Matrix4<C64> {
    let f = |x: f64, p: Pauli| Matrix4::<C64>::identity() * C64::new(x.cos(), 0.0) + pauli_pair(p) * (I * x.sin());
    f(a, Pauli::X) * f(b, Pauli::Y) * f(c, Pauli::Z)
}

pub fn gate_unitary(p: &[f64]) -> Matrix4<C64> {
    assert_eq!(p.len(), GATE_PARAMS, "gate parameter count");
    let pre = kron(&euler(&p[PRE0..PRE0 + 3]), &euler(&p[PRE1..PRE1 + 3]));
    let post = kron(&euler(&p[POST0..POST0 + 3]), &euler(&p[POST1..POST1 + 3]));
    post * interaction(p[INTERACTION], p[INTERACTION + 1], p[INTERACTION + 2]) * pre
}

/// The unitary and its 15 partial derivatives in parameter order.
pub fn gate_unitary_with_grad(p: &[f64]) -> (Matrix4<C64>, Vec<Matrix4<C64>>) {
    assert_eq!(p.len(), GATE_PARAMS, "gate parameter count");
    let (u0, d0) = euler_with_grad(&p[PRE0..PRE0 + 3]);
    let (u1, d1) = euler_with_grad(&p[PRE1..PRE1 + 3]);
    let (v0, e0) = euler_with_grad(&p[POST0..POST0 + 3]);
    let (v1, e1) = euler_with_grad(&p[POST1..POST1 + 3]);
    let n = interaction(p[INTERACTION], p[INTERACTION + 1], p[INTERACTION + 2]);
    let pre = kron(&u0, &u1);
    let post = kron(&v0, &v1);
    let pn = post * n;
    let np = n * pre;
    let mut grads = Vec::with_capacity(GATE_PARAMS);
    for d in &d0 {
        grads.push(pn * kron(d, &u1));
    }
    for d in &d1 {
        grads.push(pn * kron(&u0, d));
    }
    for p in [Pauli::X, Pauli::Y, Pauli::Z] {
        grads.push(post * pauli_pair(p) * (I * ONE) * np);
    }
    for d in &e0 {
        grads.push(kron(d, &v1) * np);
    }
    for d in &e1 {
        grads.push(kron(&v0, d) * np);
    }
    (post * np, grads)
}

/// Parameters of a gate taking `|00>` to the singlet `(|01> - |10>)/sqrt 2` up
/// to phase. Only the interaction and post rotations are used, so the gate
/// survives removal of pre-rotations.
pub fn singlet_gate_params() -> [f64; GATE_PARAMS] {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    let mut p = [0.0; GATE_PARAMS];
    p[INTERACTION] = FRAC_PI_4;
    p[POST0] = -FRAC_PI_2;
    p[POST1 + 1] = PI;
    p[POST1 + 2] = PI;
    p
}

/// Local invariants `(G1, G2)` of a two-qubit unitary; equal values mean the
/// gates differ only by single-qubit operations.
pub fn makhlin_invariants(u: &Matrix4<C64>) -> (C64, f64) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let q = Matrix4::new(
        ONE, ZERO, ZERO, I,
        ZERO, I, ONE, ZERO,
        ZERO, I, -ONE, ZERO,
        ONE, ZERO, ZERO, -I,
    ) * C64::new(h, 0.0);
    let ub = q.adjoint() * u * q;
    let m = ub.transpose() * ub;
    let det = u.determinant();
    let tr = m.trace();
    let tr2 = (m * m).trace();
    let g1 = tr * tr / (det * 16.0);
    let g2 = (tr * tr - tr2) / (det * 4.0);
    (g1, g2.re)
}
