use super::{row_major, transfer_left, transfer_right, transpose_rm, Mps};
use crate::error::{bail, Result};
use crate::linalg::{matmul, svd_truncate_matrix, Matrix, Tensor, TruncationPolicy, C64, ONE};

const MIN_GAIN: f64 = 1e-10;

/// Approximates `state` by an MPS with bond dimension at most `target_chi`.
///
/// A right-to-left SVD truncation seeds up to `max_sweeps` two-site
/// variational sweeps; sweeping stops once a sweep improves the overlap by
/// less than 1e-10. Returns the normalized approximation and its fidelity
/// with the normalized input.
pub fn compress(state: &Mps, target_chi: usize, max_sweeps: usize) -> Result<(Mps, f64)> {
    if target_chi == 0 {
        bail!(InvalidArgument, "target_chi must be positive");
    }
    let policy = TruncationPolicy { chi_max: target_chi, svd_min: 1e-14, trunc_cut: 0.0 };
    let phi = state.clone().normalize()?;
    let n = phi.n_sites();
    let mut psi = svd_seed(&phi, &policy)?;
    if n == 1 {
        let f = psi.fidelity(&phi)?;
        return Ok((psi, f));
    }

    let mut right: Vec<Vec<C64>> = vec![Vec::new(); n + 1];
    right[n] = vec![ONE];
    for i in (1..n).rev() {
        right[i] = transfer_right(&right[i + 1], &psi.tensors[i], &phi.tensors[i]);
    }
    let mut left: Vec<Vec<C64>> = vec![Vec::new(); n + 1];
    left[0] = vec![ONE];

    let mut best = psi.fidelity(&phi)?;
    for sweep in 0..max_sweeps {
        for i in 0..n - 1 {
            let x = optimal_pair(&psi, &phi, &left[i], &right[i + 2], i);
            split_pair(&mut psi, x, i, &policy, true)?;
            left[i + 1] = transfer_left(&left[i], &psi.tensors[i], &phi.tensors[i]);
        }
        let mut fid = 0.0;
        for i in (0..n - 1).rev() {
            let x = optimal_pair(&psi, &phi, &left[i], &right[i + 2], i);
            fid = split_pair(&mut psi, x, i, &policy, false)?;
            right[i + 1] = transfer_right(&right[i + 2], &psi.tensors[i + 1], &phi.tensors[i + 1]);
        }
        log::trace!("compress sweep {} fidelity {:.12}", sweep, fid);
        let gain = fid - best;
        best = best.max(fid);
        if gain < MIN_GAIN {
            break;
        }
    }
    psi.ortho_center = Some(0);
    let f = psi.fidelity(&phi)?;
    Ok((psi, f))
}

/// Smallest bond dimension up to `max_chi` whose compression reaches
/// `floor` fidelity, with that compression. Fails if none does.
pub fn compress_to_fidelity(state: &Mps, floor: f64, max_chi: usize, max_sweeps: usize) -> Result<(Mps, f64)> {
    if !(floor > 0.0 && floor <= 1.0) {
        bail!(InvalidArgument, "fidelity floor {} outside (0, 1]", floor);
    }
    let cap = max_chi.min(state.max_bond_dim().max(1));
    let mut best = 0.0;
    for chi in 1..=cap {
        let (psi, f) = compress(state, chi, max_sweeps)?;
        if f >= floor {
            return Ok((psi, f));
        }
        best = f;
    }
    bail!(Numerical, "fidelity {:.6} at chi = {} is below the floor {}", best, cap, floor)
}

/// Right-to-left truncated SVD sweep; the result is normalized with its
/// center at site 0.
fn svd_seed(phi: &Mps, policy: &TruncationPolicy) -> Result<Mps> {
    let n = phi.n_sites();
    let mut psi = phi.clone();
    psi.move_center(n - 1);
    for i in (1..n).rev() {
        let t = &psi.tensors[i];
        let (l, r) = (t.shape()[0], t.shape()[2]);
        let res = svd_truncate_matrix(&t.to_matrix(1), policy)?;
        let k = res.s.len();
        psi.tensors[i] = Tensor::from_matrix(&res.vt, &[k, 2, r])?;
        let mut us = res.u;
        for (c, s) in res.s.iter().enumerate() {
            us.column_mut(c).scale_mut(*s);
        }
        let prev = &psi.tensors[i - 1];
        let pl = prev.shape()[0];
        let data = matmul(pl * 2, l, k, prev.data(), &row_major(&us));
        psi.tensors[i - 1] = Tensor::from_vec(&[pl, 2, k], data)?;
    }
    psi.ortho_center = Some(0);
    psi.normalize()
}

/// `x[a, s1, s2, b] = sum L[a, a'] phi_i[a', s1, m] phi_{i+1}[m, s2, b'] R[b, b']`.
fn optimal_pair(psi: &Mps, phi: &Mps, left: &[C64], right: &[C64], i: usize) -> Tensor {
    let (p0, p1) = (&phi.tensors[i], &phi.tensors[i + 1]);
    let (al, m, br) = (p0.shape()[0], p0.shape()[2], p1.shape()[2]);
    let a = psi.tensors[i].shape()[0];
    let b = psi.tensors[i + 1].shape()[2];
    let pair = matmul(al * 2, m, 2 * br, p0.data(), p1.data());
    let x1 = matmul(a, al, 4 * br, left, &pair);
    let rt = transpose_rm(right, b, br);
    let x = matmul(a * 4, br, b, &x1, &rt);
    Tensor::from_vec(&[a, 2, 2, b], x).expect("pair shape")
}

/// Splits the normalized optimum into sites `i`, `i + 1`, leaving the center
/// on the right site when `to_right`. Returns the kept squared weight relative
/// to the untruncated optimum, which is the fidelity of the updated state.
fn split_pair(psi: &mut Mps, x: Tensor, i: usize, policy: &TruncationPolicy, to_right: bool) -> Result<f64> {
    let (a, b) = (x.shape()[0], x.shape()[3]);
    let mat: Matrix = x.to_matrix(2);
    let res = svd_truncate_matrix(&mat, policy)?;
    let kept: f64 = res.s.iter().map(|s| s * s).sum();
    if !(kept > 0.0) {
        bail!(Numerical, "compression lost all overlap with the target at sites {}-{}", i, i + 1);
    }
    let k = res.s.len();
    let norm = kept.sqrt();
    let (mut u, mut vt) = (res.u, res.vt);
    if to_right {
        for (r, s) in res.s.iter().enumerate() {
            vt.row_mut(r).scale_mut(s / norm);
        }
    } else {
        for (c, s) in res.s.iter().enumerate() {
            u.column_mut(c).scale_mut(s / norm);
        }
    }
    psi.tensors[i] = Tensor::from_matrix(&u, &[a, 2, k])?;
    psi.tensors[i + 1] = Tensor::from_matrix(&vt, &[k, 2, b])?;
    psi.ortho_center = Some(if to_right { i + 1 } else { i });
    Ok(kept)
}
