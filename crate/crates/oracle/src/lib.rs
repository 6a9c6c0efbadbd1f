//! Naive dense reference implementations. Nothing here shares code with the
//! tensor-network library; amplitudes are indexed with site 0 as the most
//! significant bit.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::Rng;

pub type State = Vec<C>;

pub fn zero(n: usize) -> State {
    let mut v = vec![C::new(0.0, 0.0); 1 << n];
    v[0] = C::new(1.0, 0.0);
    v
}

fn bit(idx: usize, n: usize, site: usize) -> usize {
    (idx >> (n - 1 - site)) & 1
}

fn n_of(psi: &[C]) -> usize {
    psi.len().trailing_zeros() as usize
}

pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> State {
    let mut v: State = (0..1 << n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|a| *a /= norm);
    v
}

/// Haar-ish random unitary of dimension `d` by Gram-Schmidt on a complex
/// Gaussian-like matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C> {
    let mut m = DMatrix::from_fn(d, d, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    for j in 0..d {
        for k in 0..j {
            let proj: C = (0..d).map(|i| m[(i, k)].conj() * m[(i, j)]).sum();
            for i in 0..d {
                let v = m[(i, k)];
                m[(i, j)] -= proj * v;
            }
        }
        let norm = (0..d).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..d {
            m[(i, j)] /= norm;
        }
    }
    m
}

/// Applies a 2x2 matrix to `site`.
pub fn apply_1q(psi: &[C], u: &DMatrix<C>, site: usize) -> State {
    let n = n_of(psi);
    let mut out = vec![C::new(0.0, 0.0); psi.len()];
    for (idx, a) in psi.iter().enumerate() {
        let s = bit(idx, n, site);
        let base = idx & !(1 << (n - 1 - site));
        for t in 0..2 {
            out[base | (t << (n - 1 - site))] += u[(t, s)] * a;
        }
    }
    out
}

/// Applies a 4x4 matrix to `(left, left + 1)`, basis index `2 s_left + s_right`.
pub fn apply_2q(psi: &[C], u: &DMatrix<C>, left: usize) -> State {
    let n = n_of(psi);
    let (ml, mr) = (1 << (n - 1 - left), 1 << (n - 2 - left));
    let mut out = vec![C::new(0.0, 0.0); psi.len()];
    for (idx, a) in psi.iter().enumerate() {
        let s = 2 * bit(idx, n, left) + bit(idx, n, left + 1);
        let base = idx & !(ml | mr);
        for t in 0..4 {
            let j = base | if t & 2 != 0 { ml } else { 0 } | if t & 1 != 0 { mr } else { 0 };
            out[j] += u[(t, s)] * a;
        }
    }
    out
}

pub fn inner(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// `<psi| prod P |psi>` for `(site, 'X' | 'Y' | 'Z')` factors on distinct sites.
pub fn pauli_expectation(psi: &[C], ops: &[(usize, char)]) -> f64 {
    let mut phi = psi.to_vec();
    for &(site, p) in ops {
        let m = pauli(p);
        phi = apply_1q(&phi, &m, site);
    }
    inner(psi, &phi).re / norm_sqr(psi)
}

pub fn pauli(p: char) -> DMatrix<C> {
    let (o, i, z) = (C::new(1.0, 0.0), C::new(0.0, 1.0), C::new(0.0, 0.0));
    match p {
        'I' => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        'X' => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        'Y' => DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        'Z' => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
        _ => panic!("unknown Pauli {}", p),
    }
}

/// Reduced density matrix of the contiguous block `sites`, by explicit
/// partial trace.
pub fn reduced_density(psi: &[C], sites: std::ops::Range<usize>) -> DMatrix<C> {
    let n = n_of(psi);
    let l = sites.len();
    let mut rho = DMatrix::from_element(1 << l, 1 << l, C::new(0.0, 0.0));
    let norm = norm_sqr(psi);
    let block = |idx: usize| sites.clone().fold(0, |acc, s| 2 * acc + bit(idx, n, s));
    let rest = |idx: usize| (0..n).filter(|s| !sites.contains(s)).fold(0, |acc, s| 2 * acc + bit(idx, n, s));
    for (i, a) in psi.iter().enumerate() {
        for (j, b) in psi.iter().enumerate() {
            if rest(i) == rest(j) {
                rho[(block(i), block(j))] += a * b.conj() / norm;
            }
        }
    }
    rho
}

/// Eigenvalues of a Hermitian matrix, descending.
pub fn hermitian_eigenvalues(m: &DMatrix<C>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev
}

/// Squared Schmidt values across the bond after `cut` sites, descending.
pub fn schmidt_spectrum(psi: &[C], cut: usize) -> Vec<f64> {
    let n = n_of(psi);
    let rows = 1 << cut;
    let cols = 1 << (n - cut);
    let m = DMatrix::from_fn(rows, cols, |r, c| psi[r * cols + c]);
    let mut s: Vec<f64> = m.svd(false, false).singular_values.iter().map(|x| x * x / norm_sqr(psi)).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// `(1/4) sum_i J_i (XX + YY + ZZ)` with `J_i = j0` on even `i`, `j1` on odd,
/// assembled term by term from Pauli matrices.
pub fn heisenberg(j0: f64, j1: f64, n: usize) -> DMatrix<C> {
    let d = 1 << n;
    let mut h = DMatrix::from_element(d, d, C::new(0.0, 0.0));
    for i in 0..n - 1 {
        let j = if i % 2 == 0 { j0 } else { j1 };
        for p in ['X', 'Y', 'Z'] {
            let mut term = DMatrix::from_element(1, 1, C::new(1.0, 0.0));
            for s in 0..n {
                let f = if s == i || s == i + 1 { pauli(p) } else { pauli('I') };
                term = term.kronecker(&f);
            }
            h += term * C::new(j / 4.0, 0.0);
        }
    }
    h
}

/// Lowest eigenvalue of a Hermitian matrix.
pub fn ground_energy(h: &DMatrix<C>) -> f64 {
    *hermitian_eigenvalues(h).last().unwrap()
}

/// Lowest eigenvalue of `h` restricted to basis states with
/// `sum_i Z_i / 2 = m`, where `|0>` has `Z = +1`.
pub fn sector_ground_energy(h: &DMatrix<C>, n: usize, m: i32) -> f64 {
    let idx: Vec<usize> =
        (0..1usize << n).filter(|i| n as i32 - 2 * i.count_ones() as i32 == 2 * m).collect();
    let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| h[(idx[r], idx[c])]);
    ground_energy(&block)
}

pub fn expectation(h: &DMatrix<C>, psi: &[C]) -> f64 {
    let v = nalgebra::DVector::from_column_slice(psi);
    (v.adjoint() * h * &v)[(0, 0)].re / norm_sqr(psi)
}

/// Matrix exponential `exp(-i t H)` of a Hermitian matrix by
/// eigendecomposition.
pub fn expm_hermitian(h: &DMatrix<C>, t: f64) -> DMatrix<C> {
    let e = h.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|l| C::new(0.0, -t * l).exp()));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_pair() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0].map(|x| C::new(x / 2f64.sqrt(), 0.0)));
        let mut cnot = DMatrix::from_element(4, 4, C::new(0.0, 0.0));
        for (r, c) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            cnot[(r, c)] = C::new(1.0, 0.0);
        }
        let psi = apply_2q(&apply_1q(&zero(2), &h, 0), &cnot, 0);
        assert!((psi[0].re - 0.5f64.sqrt()).abs() < 1e-15 && (psi[3].re - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((pauli_expectation(&psi, &[(0, 'Z'), (1, 'Z')]) - 1.0).abs() < 1e-14);
        assert!((pauli_expectation(&psi, &[(0, 'Y'), (1, 'Y')]) + 1.0).abs() < 1e-14);
        assert_eq!(schmidt_spectrum(&psi, 1).len(), 2);
        let rho = reduced_density(&psi, 0..1);
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn two_site_singlet_energy() {
        assert!((ground_energy(&heisenberg(1.0, 0.0, 2)) + 0.75).abs() < 1e-12);
    }
}
