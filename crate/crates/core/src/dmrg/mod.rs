//! Two-site DMRG for MPO Hamiltonians with optional total-Z conservation.

mod lanczos;
mod sector;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::lattice::{left_env_step, right_env_step, CouplingPattern, Mpo, PhaseLabel};
use crate::linalg::{matmul, Matrix, Tensor, TruncationPolicy, C64, ONE, ZERO};
use crate::mps::{Mps, PauliString};

pub use lanczos::{lowest_eigenpair, LanczosOutcome, LanczosParams};
use sector::{grouped_basis, infer_charges, mask_pair, mask_site, PhysicalCharges};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DmrgConfig {
    pub max_sweeps: usize,
    pub policy: TruncationPolicy,
    pub mixer_enabled: bool,
    pub mixer_strength: f64,
    /// Factor applied to the mixer strength after every sweep.
    pub mixer_decay: f64,
    /// The mixer is switched off from this sweep on.
    pub mixer_sweeps: usize,
    pub energy_tol: f64,
    pub lanczos_tol: f64,
    pub lanczos_max_restarts: usize,
    /// Conserved magnetization `M = sum_i Z_i / 2`; `None` disables
    /// conservation.
    pub target_sector: Option<i32>,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        DmrgConfig {
            max_sweeps: 20,
            policy: TruncationPolicy::default(),
            mixer_enabled: true,
            mixer_strength: 1e-2,
            mixer_decay: 0.5,
            mixer_sweeps: 10,
            energy_tol: 1e-10,
            lanczos_tol: 1e-12,
            lanczos_max_restarts: 200,
            target_sector: None,
        }
    }
}

impl DmrgConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_sweeps == 0 {
            bail!(InvalidArgument, "max_sweeps must be at least 1");
        }
        self.policy.validate()?;
        for (name, v) in [
            ("mixer_strength", self.mixer_strength),
            ("mixer_decay", self.mixer_decay),
            ("energy_tol", self.energy_tol),
            ("lanczos_tol", self.lanczos_tol),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                bail!(InvalidArgument, "{} must be finite and non-negative, got {}", name, v);
            }
        }
        Ok(())
    }

    fn mixer_at(&self, sweep: usize) -> f64 {
        if self.mixer_enabled && sweep < self.mixer_sweeps {
            self.mixer_strength * self.mixer_decay.powi(sweep as i32)
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug)]
pub struct DmrgResult {
    pub state: Mps,
    pub energy: f64,
    pub max_chi: usize,
    pub sweeps_used: usize,
    /// Lowest Ritz value at the end of each sweep.
    pub energy_history: Vec<f64>,
    pub converged: bool,
    /// Largest discarded weight of any split in the final sweep.
    pub truncation_error: f64,
    /// `sum_i <Z_i> / 2` of the final state.
    pub magnetization: f64,
}

/// Sector chosen for each phase: `+1` for the odd phase (both edge spins up),
/// `0` otherwise.
pub fn default_sector(c: &CouplingPattern) -> Option<i32> {
    match c.phase() {
        PhaseLabel::OddHaldane => Some(1),
        PhaseLabel::EvenHaldane => Some(0),
        _ => None,
    }
}

/// Néel product state, with both edge spins up in the odd phase so that it
/// lies in the `+1` magnetization sector.
pub fn default_initial_state(c: &CouplingPattern) -> Result<Mps> {
    c.validate()?;
    let n = c.n_sites;
    let bits: Vec<u8> = match c.phase() {
        PhaseLabel::OddHaldane => std::iter::once(0)
            .chain((0..n - 2).map(|i| (i % 2) as u8))
            .chain(std::iter::once(0))
            .collect(),
        _ => (0..n).map(|i| (i % 2) as u8).collect(),
    };
    Mps::product_state(&bits)
}

pub fn run_dmrg(mpo: &Mpo, initial: &Mps, cfg: &DmrgConfig) -> Result<DmrgResult> {
    cfg.validate()?;
    let n = mpo.n_sites();
    if initial.n_sites() != n {
        bail!(Dimension, "initial state has {} sites, MPO has {}", initial.n_sites(), n);
    }
    let phys = PhysicalCharges::new(cfg.target_sector.is_some());
    let charges = infer_charges(initial, phys, 1e-12)?;
    if let Some(m) = cfg.target_sector {
        let total = charges[n][0];
        if total != 2 * m {
            bail!(Sector, "initial state has magnetization {}, target sector is {}", total as f64 / 2.0, m);
        }
    }
    let mut eng = Engine::new(mpo, initial, charges, phys, cfg)?;
    let mut history = Vec::new();
    let mut converged = false;
    let mut trunc_err: f64 = 0.0;
    let mut sweeps_used = 0;
    for sweep in 0..cfg.max_sweeps {
        let alpha = cfg.mixer_at(sweep);
        trunc_err = 0.0;
        let mut energy = f64::NAN;
        for i in 0..n - 1 {
            let (e, dw) = eng.optimize_pair(i, alpha, true)?;
            energy = e;
            trunc_err = trunc_err.max(dw);
        }
        for i in (0..n - 1).rev() {
            let (e, dw) = eng.optimize_pair(i, alpha, false)?;
            energy = e;
            trunc_err = trunc_err.max(dw);
        }
        sweeps_used = sweep + 1;
        log::debug!(
            "dmrg sweep {} energy {:.12} chi {} mixer {:.1e} trunc {:.2e}",
            sweep,
            energy,
            eng.max_chi(),
            alpha,
            trunc_err
        );
        let prev = history.last().copied();
        history.push(energy);
        if alpha == 0.0 {
            if let Some(p) = prev {
                if (energy - p).abs() < cfg.energy_tol {
                    converged = true;
                    break;
                }
            }
        }
    }
    let state = Mps::from_parts(eng.tensors, Some(0));
    let energy = mpo.expectation(&state)?;
    let magnetization = (0..n)
        .map(|i| state.expect_pauli(&PauliString::z_string(i, 1)))
        .sum::<Result<f64>>()?
        / 2.0;
    if let Some(m) = cfg.target_sector {
        if (magnetization - m as f64).abs() > 1e-8 {
            bail!(Sector, "final magnetization {} left sector {}", magnetization, m);
        }
    }
    Ok(DmrgResult {
        max_chi: state.max_bond_dim(),
        state,
        energy,
        sweeps_used,
        energy_history: history,
        converged,
        truncation_error: trunc_err,
        magnetization,
    })
}

struct Engine {
    /// MPO tensors permuted to `(w, s_in, s_out, w')`.
    wp: Vec<Tensor>,
    w: Vec<Tensor>,
    tensors: Vec<Tensor>,
    charges: Vec<Vec<i32>>,
    phys: PhysicalCharges,
    left: Vec<Tensor>,
    right: Vec<Tensor>,
    policy: TruncationPolicy,
    lanczos: LanczosParams,
}

fn mixer_ops() -> [Matrix2<C64>; 3] {
    let h = C64::new(0.5, 0.0);
    [
        Matrix2::new(h, ZERO, ZERO, -h),
        Matrix2::new(ZERO, ONE, ZERO, ZERO),
        Matrix2::new(ZERO, ZERO, ONE, ZERO),
    ]
}

impl Engine {
    fn new(mpo: &Mpo, initial: &Mps, charges: Vec<Vec<i32>>, phys: PhysicalCharges, cfg: &DmrgConfig) -> Result<Engine> {
        let n = mpo.n_sites();
        let w: Vec<Tensor> = mpo.tensors().to_vec();
        let wp = w.iter().map(|t| t.permute(&[0, 2, 1, 3])).collect::<Result<Vec<_>>>()?;
        let mut eng = Engine {
            wp,
            w,
            tensors: initial.tensors().to_vec(),
            charges,
            phys,
            left: vec![Tensor::zeros(&[1, 1, 1]); n + 1],
            right: vec![Tensor::zeros(&[1, 1, 1]); n + 1],
            policy: cfg.policy,
            lanczos: LanczosParams { tol: cfg.lanczos_tol, max_restarts: cfg.lanczos_max_restarts },
        };
        for i in 0..n {
            mask_site(&mut eng.tensors[i], &eng.charges[i], &eng.charges[i + 1], phys);
        }
        eng.right_canonicalize()?;
        eng.left[0] = Tensor::from_vec(&[1, 1, 1], vec![ONE])?;
        eng.right[n] = Tensor::from_vec(&[1, 1, 1], vec![ONE])?;
        for i in (1..n).rev() {
            eng.right[i] = right_env_step(&eng.right[i + 1], &eng.tensors[i], &eng.w[i], &eng.tensors[i]);
        }
        Ok(eng)
    }

    fn max_chi(&self) -> usize {
        self.tensors.iter().map(|t| t.shape()[2]).max().unwrap_or(1)
    }

    fn right_canonicalize(&mut self) -> Result<()> {
        let n = self.tensors.len();
        let exact = TruncationPolicy { chi_max: usize::MAX, svd_min: 1e-14, trunc_cut: 0.0 };
        for i in (1..n).rev() {
            let t = &self.tensors[i];
            let (l, r) = (t.shape()[0], t.shape()[2]);
            let m = t.to_matrix(1);
            let col_q = self.col_charges(i);
            let g = grouped_basis(&m.adjoint(), &col_q, &exact)?;
            let k = g.s.len();
            let carry = &m * &g.u;
            self.tensors[i] = Tensor::from_matrix(&g.u.adjoint(), &[k, 2, r])?;
            let prev = &self.tensors[i - 1];
            let pl = prev.shape()[0];
            let data = matmul(pl * 2, l, k, prev.data(), &row_major(&carry));
            self.tensors[i - 1] = Tensor::from_vec(&[pl, 2, k], data)?;
            self.charges[i] = g.charges;
        }
        let nrm = self.tensors[0].norm();
        if !(nrm > 0.0) {
            bail!(Numerical, "initial state has zero norm");
        }
        self.tensors[0].scale(C64::new(1.0 / nrm, 0.0));
        Ok(())
    }

    /// Charges of the combined `(s, r)` index of site `i`, expressed as the
    /// left-bond charge they require.
    fn col_charges(&self, i: usize) -> Vec<i32> {
        let qr = &self.charges[i + 1];
        let mut out = Vec::with_capacity(2 * qr.len());
        for s in 0..2 {
            for q in qr {
                out.push(q - self.phys.z[s]);
            }
        }
        out
    }

    fn row_charges(&self, i: usize) -> Vec<i32> {
        let ql = &self.charges[i];
        let mut out = Vec::with_capacity(2 * ql.len());
        for q in ql {
            for s in 0..2 {
                out.push(q + self.phys.z[s]);
            }
        }
        out
    }

    /// Effective two-site Hamiltonian on `theta[b, t1, t2, c]`.
    fn apply_heff(&self, i: usize, theta: &[C64], rp: &Tensor) -> Vec<C64> {
        let l = &self.left[i];
        let (a, wl, b) = (l.shape()[0], l.shape()[1], l.shape()[2]);
        let c = rp.shape()[1];
        let wm = self.w[i].shape()[3];
        let wr = self.w[i + 1].shape()[3];
        let x1 = matmul(a * wl, b, 4 * c, l.data(), theta);
        let x1 = Tensor::from_vec(&[a, wl, 2, 2, c], x1).expect("shape").permute(&[0, 3, 4, 1, 2]).expect("perm");
        let x2 = matmul(a * 2 * c, wl * 2, 2 * wm, x1.data(), self.wp[i].data());
        let x2 = Tensor::from_vec(&[a, 2, c, 2, wm], x2).expect("shape").permute(&[0, 2, 3, 4, 1]).expect("perm");
        let x3 = matmul(a * c * 2, wm * 2, 2 * wr, x2.data(), self.wp[i + 1].data());
        let x3 = Tensor::from_vec(&[a, c, 2, 2, wr], x3).expect("shape").permute(&[0, 2, 3, 4, 1]).expect("perm");
        let ar = rp.shape()[2];
        let mut out = matmul(a * 4, wr * c, ar, x3.data(), rp.data());
        mask_pair(&mut out, &self.charges[i], &self.charges[i + 2], self.phys);
        out
    }

    /// Optimizes sites `(i, i + 1)` and moves the center one step in the
    /// sweep direction. Returns the Ritz value and the discarded weight.
    fn optimize_pair(&mut self, i: usize, alpha: f64, to_right: bool) -> Result<(f64, f64)> {
        let (ta, tb) = (&self.tensors[i], &self.tensors[i + 1]);
        let (l, m, r) = (ta.shape()[0], ta.shape()[2], tb.shape()[2]);
        let mut theta = matmul(l * 2, m, 2 * r, ta.data(), tb.data());
        mask_pair(&mut theta, &self.charges[i], &self.charges[i + 2], self.phys);
        if theta.iter().all(|z| *z == ZERO) {
            bail!(Numerical, "two-site tensor at {} vanished under the sector mask", i);
        }
        // R[a', w, c] laid out as (w, c, a') for the final contraction.
        let rp = self.right[i + 2].permute(&[1, 2, 0])?;
        let out = lowest_eigenpair(|x| self.apply_heff(i, x, &rp), theta, &self.lanczos)?;
        if !out.converged {
            log::warn!("Lanczos did not converge at sites {}-{}", i, i + 1);
        }
        let theta = Matrix::from_row_slice(l * 2, 2 * r, &out.vector);
        let ops = mixer_ops();
        let dw = if to_right {
            let mut aug = theta.clone();
            if alpha > 0.0 {
                let sa = C64::new(alpha.sqrt(), 0.0);
                let mut cols = vec![theta.clone()];
                for op in &ops {
                    cols.push(apply_row_site_op(&theta, op) * sa);
                }
                aug = hstack(&cols);
            }
            let g = grouped_basis(&aug, &self.row_charges(i), &self.policy)?;
            let k = g.s.len();
            let mut rest = g.u.adjoint() * &theta;
            let kept = rest.norm_squared();
            rest /= C64::new(kept.sqrt(), 0.0);
            let mut a = Tensor::from_matrix(&g.u, &[l, 2, k])?;
            let mut b = Tensor::from_matrix(&rest, &[k, 2, r])?;
            mask_site(&mut a, &self.charges[i], &g.charges, self.phys);
            mask_site(&mut b, &g.charges, &self.charges[i + 2], self.phys);
            self.tensors[i] = a;
            self.tensors[i + 1] = b;
            self.charges[i + 1] = g.charges;
            self.left[i + 1] = left_env_step(&self.left[i], &self.tensors[i], &self.w[i], &self.tensors[i]);
            1.0 - kept
        } else {
            let mut aug = theta.clone();
            if alpha > 0.0 {
                let sa = C64::new(alpha.sqrt(), 0.0);
                let mut rows = vec![theta.clone()];
                for op in &ops {
                    rows.push(apply_col_site_op(&theta, op) * sa);
                }
                aug = vstack(&rows);
            }
            let g = grouped_basis(&aug.adjoint(), &self.col_charges(i + 1), &self.policy)?;
            let k = g.s.len();
            let mut rest = &theta * &g.u;
            let kept = rest.norm_squared();
            rest /= C64::new(kept.sqrt(), 0.0);
            let mut a = Tensor::from_matrix(&rest, &[l, 2, k])?;
            let mut b = Tensor::from_matrix(&g.u.adjoint(), &[k, 2, r])?;
            mask_site(&mut a, &self.charges[i], &g.charges, self.phys);
            mask_site(&mut b, &g.charges, &self.charges[i + 2], self.phys);
            self.tensors[i] = a;
            self.tensors[i + 1] = b;
            self.charges[i + 1] = g.charges;
            self.right[i + 1] =
                right_env_step(&self.right[i + 2], &self.tensors[i + 1], &self.w[i + 1], &self.tensors[i + 1]);
            1.0 - kept
        };
        Ok((out.value, dw.max(0.0)))
    }
}

fn row_major(m: &Matrix) -> Vec<C64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// `op` on the physical index of rows `(a, s)`.
fn apply_row_site_op(m: &Matrix, op: &Matrix2<C64>) -> Matrix {
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for a in 0..m.nrows() / 2 {
        for j in 0..m.ncols() {
            let (x0, x1) = (m[(2 * a, j)], m[(2 * a + 1, j)]);
            out[(2 * a, j)] = op[(0, 0)] * x0 + op[(0, 1)] * x1;
            out[(2 * a + 1, j)] = op[(1, 0)] * x0 + op[(1, 1)] * x1;
        }
    }
    out
}

/// `op` on the physical index of columns `(s, c)`.
fn apply_col_site_op(m: &Matrix, op: &Matrix2<C64>) -> Matrix {
    let half = m.ncols() / 2;
    let mut out = Matrix::zeros(m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for c in 0..half {
            let (x0, x1) = (m[(i, c)], m[(i, half + c)]);
            out[(i, c)] = op[(0, 0)] * x0 + op[(0, 1)] * x1;
            out[(i, half + c)] = op[(1, 0)] * x0 + op[(1, 1)] * x1;
        }
    }
    out
}

fn hstack(blocks: &[Matrix]) -> Matrix {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        out.view_mut((0, off), (rows, b.ncols())).copy_from(b);
        off += b.ncols();
    }
    out
}

fn vstack(blocks: &[Matrix]) -> Matrix {
    let cols = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Matrix::zeros(rows, cols);
    let mut off = 0;
    for b in blocks {
        out.view_mut((off, 0), (b.nrows(), cols)).copy_from(b);
        off += b.nrows();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_hamiltonian_mpo;
    use crate::linalg::eigh;

    fn ground_energy(c: &CouplingPattern) -> f64 {
        let h = build_hamiltonian_mpo(c).unwrap().to_dense().unwrap();
        let (vals, _) = eigh(&h).unwrap();
        *vals.last().unwrap()
    }

    fn sector_ground_energy(c: &CouplingPattern, m: i32) -> f64 {
        let h = build_hamiltonian_mpo(c).unwrap().to_dense().unwrap();
        let n = c.n_sites as i32;
        let idx: Vec<usize> = (0..h.nrows()).filter(|b| n - 2 * b.count_ones() as i32 == 2 * m).collect();
        let block = Matrix::from_fn(idx.len(), idx.len(), |i, j| h[(idx[i], idx[j])]);
        let (vals, _) = eigh(&block).unwrap();
        *vals.last().unwrap()
    }

    #[test]
    fn two_site_singlet() {
        let c = CouplingPattern::new(1.0, 0.0, 2).unwrap();
        let mpo = build_hamiltonian_mpo(&c).unwrap();
        let cfg = DmrgConfig { target_sector: Some(0), ..Default::default() };
        let r = run_dmrg(&mpo, &default_initial_state(&c).unwrap(), &cfg).unwrap();
        assert!((r.energy + 0.75).abs() < 1e-12);
        let v = r.state.to_statevector().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let ov = (v[1] - v[2]) * h;
        assert!((ov.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn matches_exact_diagonalization() {
        let c = CouplingPattern::new(1.0, 0.5, 8).unwrap();
        let mpo = build_hamiltonian_mpo(&c).unwrap();
        for sector in [None, Some(0)] {
            let cfg = DmrgConfig { target_sector: sector, ..Default::default() };
            let r = run_dmrg(&mpo, &default_initial_state(&c).unwrap(), &cfg).unwrap();
            assert!((r.energy - ground_energy(&c)).abs() < 1e-8, "{:?}: {}", sector, r.energy);
            assert!(r.converged);
        }
    }

    #[test]
    fn odd_sector_has_unit_magnetization() {
        let c = CouplingPattern::new(0.5, 1.0, 8).unwrap();
        let mpo = build_hamiltonian_mpo(&c).unwrap();
        let init = default_initial_state(&c).unwrap();
        let cfg = DmrgConfig { target_sector: Some(1), ..Default::default() };
        let r = run_dmrg(&mpo, &init, &cfg).unwrap();
        assert!((r.magnetization - 1.0).abs() < 1e-10);
        assert!((r.energy - sector_ground_energy(&c, 1)).abs() < 1e-8);
        // finite-size splitting puts the M = 0 member lowest
        assert!(r.energy > ground_energy(&c));
    }

    #[test]
    fn initial_states() {
        let even = default_initial_state(&CouplingPattern::new(1.0, 0.5, 4).unwrap()).unwrap();
        assert_eq!(even, Mps::product_state(&[0, 1, 0, 1]).unwrap());
        let odd = default_initial_state(&CouplingPattern::new(0.5, 1.0, 4).unwrap()).unwrap();
        assert_eq!(odd, Mps::product_state(&[0, 0, 1, 0]).unwrap());
    }

    #[test]
    fn wrong_sector_rejected() {
        let c = CouplingPattern::new(1.0, 0.5, 4).unwrap();
        let mpo = build_hamiltonian_mpo(&c).unwrap();
        let cfg = DmrgConfig { target_sector: Some(1), ..Default::default() };
        let r = run_dmrg(&mpo, &default_initial_state(&c).unwrap(), &cfg);
        assert!(matches!(r, Err(crate::Error::Sector(_))));
    }
}
