//! Open-boundary matrix product states.
//!
//! Site tensors have shape `(chi_left, 2, chi_right)`. Physical index 0 is
//! `|0>` (spin up, `Z = +1`). When a state is flattened into a statevector,
//! site 0 is the most significant bit.

mod compress;
mod io;
mod pauli;
mod rdm;

use nalgebra::{Matrix2, Matrix4};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{bail, Error, Result};
use crate::linalg::{matmul, qr, svd, svd_truncate_matrix, Matrix, Tensor, TruncationPolicy, C64, ONE, ZERO};

pub use compress::{compress, compress_to_fidelity};
pub use io::{read_mps, write_mps, MPS_FORMAT_VERSION};
pub use pauli::{Pauli, PauliString};
pub use rdm::{ReducedDensityMatrix, DEFAULT_RDM_CAP};

/// Largest chain that may be expanded into a dense statevector.
pub const STATEVECTOR_CAP: usize = 14;

const UNITARITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    tensors: Vec<Tensor>,
    ortho_center: Option<usize>,
}

impl Mps {
    /// Builds a state from site tensors, checking shapes and bond matching.
    pub fn from_tensors(tensors: Vec<Tensor>) -> Result<Mps> {
        if tensors.is_empty() {
            bail!(InvalidArgument, "an MPS needs at least one site");
        }
        for (i, t) in tensors.iter().enumerate() {
            if t.rank() != 3 || t.shape()[1] != 2 {
                bail!(Dimension, "site {} has shape {:?}, expected (l, 2, r)", i, t.shape());
            }
        }
        if tensors[0].shape()[0] != 1 || tensors[tensors.len() - 1].shape()[2] != 1 {
            bail!(Dimension, "boundary bond dimensions must be 1");
        }
        for i in 0..tensors.len() - 1 {
            if tensors[i].shape()[2] != tensors[i + 1].shape()[0] {
                bail!(
                    Dimension,
                    "bond {} mismatch: {} vs {}",
                    i,
                    tensors[i].shape()[2],
                    tensors[i + 1].shape()[0]
                );
            }
        }
        Ok(Mps { tensors, ortho_center: None })
    }

    pub(crate) fn from_parts(tensors: Vec<Tensor>, ortho_center: Option<usize>) -> Mps {
        Mps { tensors, ortho_center }
    }

    /// Computational basis product state; `bits[i]` is the state of site `i`.
    pub fn product_state(bits: &[u8]) -> Result<Mps> {
        if bits.is_empty() {
            bail!(InvalidArgument, "an MPS needs at least one site");
        }
        let tensors = bits
            .iter()
            .map(|&b| {
                if b > 1 {
                    bail!(InvalidArgument, "bit value {} is not 0 or 1", b);
                }
                let mut t = Tensor::zeros(&[1, 2, 1]);
                t.set(&[0, b as usize, 0], ONE);
                Ok(t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mps { tensors, ortho_center: Some(0) })
    }

    pub fn zero_state(n: usize) -> Result<Mps> {
        Mps::product_state(&vec![0; n])
    }

    /// Product of arbitrary single-site states (each normalized).
    pub fn product_of(states: &[[C64; 2]]) -> Result<Mps> {
        if states.is_empty() {
            bail!(InvalidArgument, "an MPS needs at least one site");
        }
        let tensors = states
            .iter()
            .map(|s| {
                let n = (s[0].norm_sqr() + s[1].norm_sqr()).sqrt();
                Tensor::from_vec(&[1, 2, 1], vec![s[0] / n, s[1] / n])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mps { tensors, ortho_center: Some(0) })
    }

    /// Random normalized state with bond dimensions up to `chi`.
    pub fn random<R: Rng + ?Sized>(n: usize, chi: usize, rng: &mut R) -> Result<Mps> {
        if n == 0 || chi == 0 {
            bail!(InvalidArgument, "random MPS needs n >= 1 and chi >= 1");
        }
        let bond = |b: usize| -> usize {
            // bond b sits between sites b-1 and b
            let left = 1usize.checked_shl(b as u32).unwrap_or(usize::MAX);
            let right = 1usize.checked_shl((n - b) as u32).unwrap_or(usize::MAX);
            chi.min(left).min(right)
        };
        let mut tensors = Vec::with_capacity(n);
        for i in 0..n {
            let (l, r) = (bond(i), bond(i + 1));
            let data = (0..l * 2 * r)
                .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            tensors.push(Tensor::from_vec(&[l, 2, r], data)?);
        }
        Mps { tensors, ortho_center: None }.normalize()
    }

    /// Exact MPS decomposition of a statevector (site 0 = most significant bit).
    pub fn from_statevector(v: &[C64], policy: &TruncationPolicy) -> Result<Mps> {
        let n = v.len().trailing_zeros() as usize;
        if v.is_empty() || 1usize << n != v.len() {
            bail!(Dimension, "statevector length {} is not a power of two", v.len());
        }
        let mut tensors = Vec::with_capacity(n);
        let mut rest = Matrix::from_row_slice(1, v.len(), v);
        let mut left = 1;
        for _ in 0..n.saturating_sub(1) {
            let cols = rest.ncols() / 2;
            let reshaped = Matrix::from_row_slice(left * 2, cols, &row_major(&rest));
            let r = svd_truncate_matrix(&reshaped, policy)?;
            let k = r.s.len();
            tensors.push(Tensor::from_matrix(&r.u, &[left, 2, k])?);
            let mut sv = r.vt;
            for (row, s) in r.s.iter().enumerate() {
                sv.row_mut(row).scale_mut(*s);
            }
            rest = sv;
            left = k;
        }
        tensors.push(Tensor::from_vec(&[left, 2, 1], row_major(&rest))?);
        let c = tensors.len() - 1;
        Ok(Mps { tensors, ortho_center: Some(c) })
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn ortho_center(&self) -> Option<usize> {
        self.ortho_center
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensor(&self, i: usize) -> &Tensor {
        &self.tensors[i]
    }

    /// Bond dimensions between neighbouring sites (`n_sites - 1` entries).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.shape()[2]).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn check_site(&self, i: usize) -> Result<()> {
        if i >= self.n_sites() {
            bail!(OutOfRange, "site {} on a chain of {} sites", i, self.n_sites());
        }
        Ok(())
    }

    /// Moves the center one site right with a QR step.
    fn shift_right(&mut self, i: usize) {
        let t = &self.tensors[i];
        let (l, r) = (t.shape()[0], t.shape()[2]);
        let (q, rr) = qr(&t.to_matrix(2));
        let k = q.ncols();
        self.tensors[i] = Tensor::from_matrix(&q, &[l, 2, k]).expect("qr shape");
        let next = &self.tensors[i + 1];
        let nr = next.shape()[2];
        let data = matmul(k, r, 2 * nr, &row_major(&rr), next.data());
        self.tensors[i + 1] = Tensor::from_vec(&[k, 2, nr], data).expect("qr shape");
    }

    /// Moves the center one site left with an LQ step.
    fn shift_left(&mut self, i: usize) {
        let t = &self.tensors[i];
        let (l, r) = (t.shape()[0], t.shape()[2]);
        let (q, rr) = qr(&t.to_matrix(1).adjoint());
        // t = rr^dagger q^dagger
        let k = q.ncols();
        self.tensors[i] = Tensor::from_matrix(&q.adjoint(), &[k, 2, r]).expect("lq shape");
        let prev = &self.tensors[i - 1];
        let pl = prev.shape()[0];
        let data = matmul(pl * 2, l, k, prev.data(), &row_major(&rr.adjoint()));
        self.tensors[i - 1] = Tensor::from_vec(&[pl, 2, k], data).expect("lq shape");
    }

    pub(crate) fn move_center(&mut self, center: usize) {
        match self.ortho_center {
            Some(c) => {
                for i in c..center {
                    self.shift_right(i);
                }
                for i in (center + 1..=c).rev() {
                    self.shift_left(i);
                }
            }
            None => {
                for i in 0..center {
                    self.shift_right(i);
                }
                for i in (center + 1..self.n_sites()).rev() {
                    self.shift_left(i);
                }
            }
        }
        self.ortho_center = Some(center);
    }

    /// Mixed-canonical form with the orthogonality center at `center`.
    pub fn canonicalize(mut self, center: usize) -> Result<Mps> {
        self.check_site(center)?;
        self.move_center(center);
        Ok(self)
    }

    pub fn norm_sqr(&self) -> f64 {
        match self.ortho_center {
            Some(c) => self.tensors[c].norm_sqr(),
            None => self.inner(self).expect("same length").re,
        }
    }

    pub fn normalize(mut self) -> Result<Mps> {
        let c = self.ortho_center.unwrap_or(0);
        self.move_center(c);
        let n = self.tensors[c].norm();
        if !(n > 0.0) || !n.is_finite() {
            bail!(Numerical, "cannot normalize a state of norm {}", n);
        }
        self.tensors[c].scale(C64::new(1.0 / n, 0.0));
        Ok(self)
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Mps) -> Result<C64> {
        if self.n_sites() != other.n_sites() {
            bail!(Dimension, "overlap between chains of {} and {} sites", self.n_sites(), other.n_sites());
        }
        let mut env = vec![ONE];
        for (a, b) in self.tensors.iter().zip(&other.tensors) {
            env = transfer_left(&env, a, b);
        }
        Ok(env[0])
    }

    /// `|<a|b>|^2 / (<a|a><b|b>)`, clamped into [0, 1].
    pub fn fidelity(&self, other: &Mps) -> Result<f64> {
        let ov = self.inner(other)?;
        let f = ov.norm_sqr() / (self.norm_sqr() * other.norm_sqr());
        Ok(f.clamp(0.0, 1.0))
    }

    pub fn to_statevector(&self) -> Result<Vec<C64>> {
        let n = self.n_sites();
        if n > STATEVECTOR_CAP {
            bail!(InvalidArgument, "statevector of {} sites exceeds cap {}", n, STATEVECTOR_CAP);
        }
        let mut v = vec![ONE];
        let mut rows = 1;
        for t in &self.tensors {
            let (l, r) = (t.shape()[0], t.shape()[2]);
            v = matmul(rows, l, 2 * r, &v, t.data());
            rows *= 2;
        }
        Ok(v)
    }

    /// Applies a single-site unitary in place of the site tensor.
    pub fn apply_one_site(mut self, op: &Matrix2<C64>, site: usize) -> Result<Mps> {
        self.check_site(site)?;
        check_unitary(op.as_slice(), 2)?;
        apply_one_site_raw(&mut self.tensors[site], op);
        Ok(self)
    }

    /// Applies a 4x4 unitary to sites `(left, left + 1)`. The gate's row index
    /// is `2 * s_left + s_right`. Returns the new state (center at `left + 1`)
    /// and the discarded squared weight; kept weight is renormalized to the
    /// input norm.
    pub fn apply_two_qubit_gate(
        mut self,
        gate: &Matrix4<C64>,
        left: usize,
        policy: &TruncationPolicy,
    ) -> Result<(Mps, f64)> {
        if left + 1 >= self.n_sites() {
            bail!(OutOfRange, "two-site gate at {} on {} sites", left, self.n_sites());
        }
        check_unitary(gate.as_slice(), 4)?;
        policy.validate()?;
        let discarded = self.apply_two_site_unchecked(gate, left, policy)?;
        Ok((self, discarded))
    }

    pub(crate) fn apply_two_site_unchecked(
        &mut self,
        gate: &Matrix4<C64>,
        left: usize,
        policy: &TruncationPolicy,
    ) -> Result<f64> {
        // Center at `left` or `left + 1` both make the two-site block the
        // only non-orthonormal part.
        match self.ortho_center {
            Some(c) if c == left || c == left + 1 => {}
            _ => self.move_center(left),
        }
        let a = &self.tensors[left];
        let b = &self.tensors[left + 1];
        let (l, m, r) = (a.shape()[0], a.shape()[2], b.shape()[2]);
        // theta[l, s1, s2, r]
        let theta = matmul(l * 2, m, 2 * r, a.data(), b.data());
        let mut out = vec![ZERO; theta.len()];
        for il in 0..l {
            for ir in 0..r {
                let mut inp = [ZERO; 4];
                for (s, x) in inp.iter_mut().enumerate() {
                    *x = theta[((il * 2 + s / 2) * 2 + s % 2) * r + ir];
                }
                for so in 0..4 {
                    let mut acc = ZERO;
                    for (si, x) in inp.iter().enumerate() {
                        acc += gate[(so, si)] * x;
                    }
                    out[((il * 2 + so / 2) * 2 + so % 2) * r + ir] = acc;
                }
            }
        }
        let mat = Matrix::from_row_slice(l * 2, 2 * r, &out);
        let norm_before = mat.norm();
        let res = svd_truncate_matrix(&mat, policy)?;
        let k = res.s.len();
        let kept: f64 = res.s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let rescale = if kept > 0.0 { norm_before / kept } else { 1.0 };
        self.tensors[left] = Tensor::from_matrix(&res.u, &[l, 2, k])?;
        let mut sv = res.vt;
        for (row, s) in res.s.iter().enumerate() {
            sv.row_mut(row).scale_mut(s * rescale);
        }
        self.tensors[left + 1] = Tensor::from_matrix(&sv, &[k, 2, r])?;
        self.ortho_center = Some(left + 1);
        let total = norm_before * norm_before;
        Ok(if total > 0.0 { res.discarded_weight / total } else { 0.0 })
    }

    /// Squared Schmidt values across the bond between `bond` and `bond + 1`,
    /// descending and normalized to unit sum.
    pub fn entanglement_spectrum(&self, bond: usize) -> Result<Vec<f64>> {
        if bond + 1 >= self.n_sites() {
            bail!(OutOfRange, "bond {} on a chain of {} sites", bond, self.n_sites());
        }
        let mut s = self.clone();
        s.move_center(bond);
        let (_, sv, _) = svd(&s.tensors[bond].to_matrix(2))?;
        let mut w: Vec<f64> = sv.iter().map(|x| x * x).collect();
        let total: f64 = w.iter().sum();
        if total <= 0.0 {
            bail!(Numerical, "zero-norm state has no spectrum");
        }
        w.iter_mut().for_each(|x| *x /= total);
        Ok(w)
    }
}

pub(crate) fn row_major(m: &Matrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub(crate) fn check_unitary(entries_col_major: &[C64], n: usize) -> Result<()> {
    let m = Matrix::from_column_slice(n, n, entries_col_major);
    let dev = (m.adjoint() * &m - Matrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(dev <= UNITARITY_TOL) {
        return Err(Error::InvalidArgument(format!("matrix deviates from unitarity by {:.3e}", dev)));
    }
    Ok(())
}

pub(crate) fn apply_one_site_raw(t: &mut Tensor, op: &Matrix2<C64>) {
    let (l, r) = (t.shape()[0], t.shape()[2]);
    let d = t.data_mut();
    for il in 0..l {
        for ir in 0..r {
            let a0 = d[(il * 2) * r + ir];
            let a1 = d[(il * 2 + 1) * r + ir];
            d[(il * 2) * r + ir] = op[(0, 0)] * a0 + op[(0, 1)] * a1;
            d[(il * 2 + 1) * r + ir] = op[(1, 0)] * a0 + op[(1, 1)] * a1;
        }
    }
}

/// Left environment update: `env'[ra, rb] = sum conj(a[la,s,ra]) env[la,lb] b[lb,s,rb]`.
pub(crate) fn transfer_left(env: &[C64], a: &Tensor, b: &Tensor) -> Vec<C64> {
    let (la, ra) = (a.shape()[0], a.shape()[2]);
    let (lb, rb) = (b.shape()[0], b.shape()[2]);
    let t1 = matmul(la, lb, 2 * rb, env, b.data());
    let ah = adjoint_rm(a.data(), la * 2, ra);
    matmul(ra, la * 2, rb, &ah, &t1)
}

/// Right environment update: `env'[la, lb] = sum conj(a[la,s,ra]) b[lb,s,rb] env[ra,rb]`.
pub(crate) fn transfer_right(env: &[C64], a: &Tensor, b: &Tensor) -> Vec<C64> {
    let (la, ra) = (a.shape()[0], a.shape()[2]);
    let (lb, rb) = (b.shape()[0], b.shape()[2]);
    let et = transpose_rm(env, ra, rb);
    let t1 = matmul(lb * 2, rb, ra, b.data(), &et);
    let t1t = transpose_rm(&t1, lb, 2 * ra);
    let ac: Vec<C64> = a.data().iter().map(|z| z.conj()).collect();
    matmul(la, 2 * ra, lb, &ac, &t1t)
}

pub(crate) fn transpose_rm(m: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![ZERO; m.len()];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = m[i * cols + j];
        }
    }
    out
}

pub(crate) fn adjoint_rm(m: &[C64], rows: usize, cols: usize) -> Vec<C64> {
    let mut out = vec![ZERO; m.len()];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = m[i * cols + j].conj();
        }
    }
    out
}
