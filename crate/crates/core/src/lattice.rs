//! Bond-alternating spin-1/2 Heisenberg chain.
//!
//! `H = 1/4 sum_i J_i (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1})` with
//! `J_i = j0` on even bonds and `j1` on odd bonds.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::linalg::{matmul, Matrix, Tensor, C64, ONE, ZERO};
use crate::mps::{Mps, Pauli};

/// Largest chain that [`Mpo::to_dense`] will expand.
pub const DENSE_CAP: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingPattern {
    pub j0: f64,
    pub j1: f64,
    pub n_sites: usize,
}

impl CouplingPattern {
    pub fn new(j0: f64, j1: f64, n_sites: usize) -> Result<CouplingPattern> {
        let c = CouplingPattern { j0, j1, n_sites };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.j0.is_finite() || !self.j1.is_finite() {
            bail!(InvalidArgument, "couplings must be finite, got ({}, {})", self.j0, self.j1);
        }
        if self.n_sites < 2 || self.n_sites % 2 != 0 {
            bail!(InvalidArgument, "n_sites must be even and at least 2, got {}", self.n_sites);
        }
        Ok(())
    }

    /// Coupling on the bond between sites `i` and `i + 1`.
    pub fn coupling(&self, i: usize) -> f64 {
        if i % 2 == 0 {
            self.j0
        } else {
            self.j1
        }
    }

    pub fn phase(&self) -> PhaseLabel {
        phase_label(self.j0, self.j1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseLabel {
    OddHaldane,
    EvenHaldane,
    Ferromagnetic,
    Boundary,
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PhaseLabel::OddHaldane => "odd_haldane",
            PhaseLabel::EvenHaldane => "even_haldane",
            PhaseLabel::Ferromagnetic => "ferromagnetic",
            PhaseLabel::Boundary => "boundary",
        })
    }
}

/// Points on a phase line are labelled `Boundary`.
pub fn phase_label(j0: f64, j1: f64) -> PhaseLabel {
    if j1 > 0.0 && j1 > j0 {
        PhaseLabel::OddHaldane
    } else if j0 > 0.0 && j0 > j1 {
        PhaseLabel::EvenHaldane
    } else if j0 < 0.0 && j1 < 0.0 {
        PhaseLabel::Ferromagnetic
    } else {
        PhaseLabel::Boundary
    }
}

/// Matrix product operator with site tensors `W[w_left, s_out, s_in, w_right]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    tensors: Vec<Tensor>,
}

impl Mpo {
    pub fn from_tensors(tensors: Vec<Tensor>) -> Result<Mpo> {
        if tensors.is_empty() {
            bail!(InvalidArgument, "an MPO needs at least one site");
        }
        for (i, t) in tensors.iter().enumerate() {
            if t.rank() != 4 || t.shape()[1] != 2 || t.shape()[2] != 2 {
                bail!(Dimension, "MPO site {} has shape {:?}", i, t.shape());
            }
        }
        if tensors[0].shape()[0] != 1 || tensors[tensors.len() - 1].shape()[3] != 1 {
            bail!(Dimension, "MPO boundary extents must be 1");
        }
        for i in 0..tensors.len() - 1 {
            if tensors[i].shape()[3] != tensors[i + 1].shape()[0] {
                bail!(Dimension, "MPO bond {} mismatch", i);
            }
        }
        Ok(Mpo { tensors })
    }

    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.tensors.len() - 1].iter().map(|t| t.shape()[3]).collect()
    }

    /// Dense `2^N x 2^N` matrix, site 0 most significant.
    pub fn to_dense(&self) -> Result<Matrix> {
        let n = self.n_sites();
        if n > DENSE_CAP {
            bail!(InvalidArgument, "dense MPO of {} sites exceeds cap {}", n, DENSE_CAP);
        }
        // acc[(row, col), w] for the sites processed so far.
        let mut acc = vec![ONE];
        let mut dim = 1;
        let mut w = 1;
        for t in &self.tensors {
            let wr = t.shape()[3];
            let nd = dim * 2;
            let mut next = vec![ZERO; nd * nd * wr];
            for r in 0..dim {
                for c in 0..dim {
                    for wl in 0..w {
                        let a = acc[(r * dim + c) * w + wl];
                        if a == ZERO {
                            continue;
                        }
                        for so in 0..2 {
                            for si in 0..2 {
                                for k in 0..wr {
                                    let x = t.get(&[wl, so, si, k]);
                                    if x != ZERO {
                                        next[((r * 2 + so) * nd + c * 2 + si) * wr + k] += a * x;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            acc = next;
            dim = nd;
            w = wr;
        }
        Ok(Matrix::from_row_slice(dim, dim, &acc))
    }

    /// `<psi|H|psi> / <psi|psi>`.
    pub fn expectation(&self, psi: &Mps) -> Result<f64> {
        if psi.n_sites() != self.n_sites() {
            bail!(Dimension, "MPO of {} sites on a state of {} sites", self.n_sites(), psi.n_sites());
        }
        let mut env = Tensor::from_vec(&[1, 1, 1], vec![ONE])?;
        for (a, w) in psi.tensors().iter().zip(&self.tensors) {
            env = left_env_step(&env, a, w, a);
        }
        Ok(env.data()[0].re / psi.norm_sqr())
    }
}

/// `L'[a', w', b'] = sum conj(A[a,s,a']) L[a,w,b] W[w,s,t,w'] B[b,t,b']`.
pub(crate) fn left_env_step(env: &Tensor, bra: &Tensor, w: &Tensor, ket: &Tensor) -> Tensor {
    let (a, wl, b) = (env.shape()[0], env.shape()[1], env.shape()[2]);
    let (ar, wr, br) = (bra.shape()[2], w.shape()[3], ket.shape()[2]);
    let t1 = matmul(a * wl, b, 2 * br, env.data(), ket.data());
    let t1 = Tensor::from_vec(&[a, wl, 2, br], t1).expect("env shape").permute(&[0, 3, 1, 2]).expect("perm");
    let wp = w.permute(&[0, 2, 1, 3]).expect("perm");
    let t2 = matmul(a * br, wl * 2, 2 * wr, t1.data(), wp.data());
    let t2 = Tensor::from_vec(&[a, br, 2, wr], t2).expect("env shape").permute(&[0, 2, 3, 1]).expect("perm");
    let ah = bra_adjoint(bra);
    let out = matmul(ar, a * 2, wr * br, &ah, t2.data());
    Tensor::from_vec(&[ar, wr, br], out).expect("env shape")
}

/// `R'[a, w, b] = sum conj(A[a,s,a']) W[w,s,t,w'] B[b,t,b'] R[a',w',b']`.
pub(crate) fn right_env_step(env: &Tensor, bra: &Tensor, w: &Tensor, ket: &Tensor) -> Tensor {
    let (ar, wr, br) = (env.shape()[0], env.shape()[1], env.shape()[2]);
    let (al, wl, bl) = (bra.shape()[0], w.shape()[0], ket.shape()[0]);
    let rp = env.permute(&[2, 0, 1]).expect("perm");
    let t1 = matmul(bl * 2, br, ar * wr, ket.data(), rp.data());
    let t1 = Tensor::from_vec(&[bl, 2, ar, wr], t1).expect("env shape").permute(&[0, 2, 1, 3]).expect("perm");
    let wp = w.permute(&[2, 3, 0, 1]).expect("perm");
    let t2 = matmul(bl * ar, 2 * wr, wl * 2, t1.data(), wp.data());
    let t2 = Tensor::from_vec(&[bl, ar, wl, 2], t2).expect("env shape").permute(&[3, 1, 2, 0]).expect("perm");
    let ac: Vec<C64> = bra.data().iter().map(|z| z.conj()).collect();
    let out = matmul(al, 2 * ar, wl * bl, &ac, t2.data());
    Tensor::from_vec(&[al, wl, bl], out).expect("env shape")
}

/// `conj(A)` laid out as `(a', (a, s))`.
fn bra_adjoint(a: &Tensor) -> Vec<C64> {
    let (l, r) = (a.shape()[0], a.shape()[2]);
    let d = a.data();
    let mut out = vec![ZERO; d.len()];
    for i in 0..l * 2 {
        for j in 0..r {
            out[j * l * 2 + i] = d[i * r + j].conj();
        }
    }
    out
}

/// Five-state upper-triangular MPO; the coupling of bond `i` sits in the
/// outgoing row of site `i`.
pub fn build_hamiltonian_mpo(c: &CouplingPattern) -> Result<Mpo> {
    c.validate()?;
    let n = c.n_sites;
    let paulis = [Pauli::X, Pauli::Y, Pauli::Z].map(Pauli::matrix);
    let id = Pauli::I.matrix();
    let mut tensors = Vec::with_capacity(n);
    for i in 0..n {
        let coeff = C64::new(c.coupling(i) / 4.0, 0.0);
        let mut w = Tensor::zeros(&[5, 2, 2, 5]);
        for so in 0..2 {
            for si in 0..2 {
                w.set(&[0, so, si, 0], id[(so, si)]);
                w.set(&[4, so, si, 4], id[(so, si)]);
                for (k, p) in paulis.iter().enumerate() {
                    w.set(&[0, so, si, k + 1], coeff * p[(so, si)]);
                    w.set(&[k + 1, so, si, 4], p[(so, si)]);
                }
            }
        }
        if i == 0 {
            w = slice_row(&w, 0);
        }
        if i == n - 1 {
            w = slice_col(&w, 4);
        }
        tensors.push(w);
    }
    Mpo::from_tensors(tensors)
}

fn slice_row(w: &Tensor, row: usize) -> Tensor {
    let s = w.shape();
    let mut out = Tensor::zeros(&[1, 2, 2, s[3]]);
    for so in 0..2 {
        for si in 0..2 {
            for k in 0..s[3] {
                out.set(&[0, so, si, k], w.get(&[row, so, si, k]));
            }
        }
    }
    out
}

fn slice_col(w: &Tensor, col: usize) -> Tensor {
    let s = w.shape();
    let mut out = Tensor::zeros(&[s[0], 2, 2, 1]);
    for k in 0..s[0] {
        for so in 0..2 {
            for si in 0..2 {
                out.set(&[k, so, si, 0], w.get(&[k, so, si, col]));
            }
        }
    }
    out
}

/// Product of singlets `(|01> - |10>)/sqrt 2`. The even phase pairs
/// `(2k, 2k+1)`; the odd phase pairs `(2k+1, 2k+2)` and leaves both edge
/// spins in `|0>`.
pub fn singlet_reference_state(phase: PhaseLabel, n_sites: usize) -> Result<Mps> {
    if n_sites < 2 || n_sites % 2 != 0 {
        bail!(InvalidArgument, "n_sites must be even and at least 2, got {}", n_sites);
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let first = Tensor::from_real(&[1, 2, 2], &[1.0, 0.0, 0.0, 1.0])?;
    let second = Tensor::from_real(&[2, 2, 1], &[0.0, h, -h, 0.0])?;
    let up = Tensor::from_real(&[1, 2, 1], &[1.0, 0.0])?;
    let mut tensors = Vec::with_capacity(n_sites);
    match phase {
        PhaseLabel::EvenHaldane => {
            for _ in 0..n_sites / 2 {
                tensors.push(first.clone());
                tensors.push(second.clone());
            }
        }
        PhaseLabel::OddHaldane => {
            tensors.push(up.clone());
            for _ in 0..n_sites / 2 - 1 {
                tensors.push(first.clone());
                tensors.push(second.clone());
            }
            tensors.push(up);
        }
        other => bail!(InvalidArgument, "no singlet reference state for the {} phase", other),
    }
    Mps::from_tensors(tensors)?.canonicalize(0)
}
