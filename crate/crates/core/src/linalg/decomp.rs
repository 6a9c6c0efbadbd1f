use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::tensor::{Tensor, C64};
use crate::error::{Error, Result};

pub type Matrix = DMatrix<C64>;

/// Limits applied when cutting singular values.
///
/// `trunc_cut` is a budget on the *squared* weight of the discarded tail.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationPolicy {
    pub chi_max: usize,
    pub svd_min: f64,
    pub trunc_cut: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy { chi_max: 100, svd_min: 1e-10, trunc_cut: 1e-12 }
    }
}

impl TruncationPolicy {
    pub fn unlimited() -> Self {
        TruncationPolicy { chi_max: usize::MAX, svd_min: 0.0, trunc_cut: 0.0 }
    }

    /// No bond limit; drops only numerically zero singular values.
    pub fn lossless() -> Self {
        TruncationPolicy { chi_max: usize::MAX, svd_min: 1e-14, trunc_cut: 0.0 }
    }

    pub fn with_chi(chi_max: usize) -> Self {
        TruncationPolicy { chi_max, svd_min: 0.0, trunc_cut: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.chi_max == 0 {
            return Err(Error::InvalidArgument("chi_max must be positive".into()));
        }
        if !(self.svd_min >= 0.0) || !(self.trunc_cut >= 0.0) {
            return Err(Error::InvalidArgument("svd_min and trunc_cut must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindingConstraint {
    None,
    ChiMax,
    SvdMin,
    TruncCut,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Truncation {
    pub keep: usize,
    pub discarded_weight: f64,
    pub binding: BindingConstraint,
}

/// Decides how many of the descending values `s` survive `policy`.
///
/// Stages run in order chi_max, svd_min, trunc_cut; the reported binding
/// constraint is the last stage that removed anything. At least one value is
/// always kept.
pub fn truncation_rank(s: &[f64], policy: &TruncationPolicy) -> Truncation {
    let n = s.len();
    let mut binding = BindingConstraint::None;
    let mut keep = n.min(policy.chi_max.max(1));
    if keep < n {
        binding = BindingConstraint::ChiMax;
    }
    let after_chi = keep;
    while keep > 1 && s[keep - 1] < policy.svd_min {
        keep -= 1;
    }
    if keep < after_chi {
        binding = BindingConstraint::SvdMin;
    }
    let after_min = keep;
    let mut tail = 0.0;
    while keep > 1 {
        let w = s[keep - 1] * s[keep - 1];
        if tail + w < policy.trunc_cut {
            tail += w;
            keep -= 1;
        } else {
            break;
        }
    }
    if keep < after_min {
        binding = BindingConstraint::TruncCut;
    }
    let discarded_weight = s[keep.min(n)..].iter().map(|x| x * x).sum();
    Truncation { keep: keep.min(n), discarded_weight, binding }
}

/// Thin SVD with singular values sorted descending (stable for ties).
///
/// Uses faer: nalgebra's complex SVD returns inaccurate singular vectors on a
/// few percent of inputs.
pub fn svd(m: &Matrix) -> Result<(Matrix, Vec<f64>, Matrix)> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("svd of empty {}x{} matrix", rows, cols)));
    }
    let f = faer::Mat::<C64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let svd = f.thin_svd().map_err(|e| {
        Error::Numerical(format!("svd did not converge ({}x{}, frobenius norm {:.3e}): {:?}", rows, cols, m.norm(), e))
    })?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = s.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].re.partial_cmp(&s[a].re).unwrap_or(std::cmp::Ordering::Equal));
    let u_sorted = Matrix::from_fn(rows, k, |i, new| u[(i, order[new])]);
    let vt_sorted = Matrix::from_fn(k, cols, |new, j| v[(j, order[new])].conj());
    let s_sorted = order.iter().map(|&old| s[old].re.max(0.0)).collect();
    Ok((u_sorted, s_sorted, vt_sorted))
}

#[derive(Clone, Debug)]
pub struct SvdTruncated {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
    pub discarded_weight: f64,
    pub binding: BindingConstraint,
}

pub fn svd_truncate_matrix(m: &Matrix, policy: &TruncationPolicy) -> Result<SvdTruncated> {
    let (u, s, vt) = svd(m)?;
    let t = truncation_rank(&s, policy);
    Ok(SvdTruncated {
        u: u.columns(0, t.keep).into_owned(),
        s: s[..t.keep].to_vec(),
        vt: vt.rows(0, t.keep).into_owned(),
        discarded_weight: t.discarded_weight,
        binding: t.binding,
    })
}

/// Truncated SVD of a tensor viewed as a matrix with the first `row_axes`
/// axes as rows. Returns `U` shaped `(row dims.., k)` and `V†` shaped
/// `(k, col dims..)`.
pub fn svd_truncate(
    t: &Tensor,
    row_axes: usize,
    policy: &TruncationPolicy,
) -> Result<(Tensor, Vec<f64>, Tensor, f64)> {
    if row_axes == 0 || row_axes >= t.rank() {
        return Err(Error::InvalidArgument(format!("row split {} for rank {}", row_axes, t.rank())));
    }
    let r = svd_truncate_matrix(&t.to_matrix(row_axes), policy)?;
    let k = r.s.len();
    let mut ushape = t.shape()[..row_axes].to_vec();
    ushape.push(k);
    let mut vshape = vec![k];
    vshape.extend_from_slice(&t.shape()[row_axes..]);
    Ok((
        Tensor::from_matrix(&r.u, &ushape)?,
        r.s,
        Tensor::from_matrix(&r.vt, &vshape)?,
        r.discarded_weight,
    ))
}

/// Thin QR: `m = q * r` with `q` having orthonormal columns.
pub fn qr(m: &Matrix) -> (Matrix, Matrix) {
    let qr = m.clone().qr();
    (qr.q(), qr.r())
}

/// Eigen-decomposition of a Hermitian matrix (symmetrized first), eigenvalues
/// descending with matching eigenvector columns.
pub fn eigh(m: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension(format!("eigh of non-square {}x{}", n, m.ncols())));
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = h
        .try_symmetric_eigen(1e-15, 100_000)
        .ok_or_else(|| Error::Numerical(format!("hermitian eigensolver did not converge ({}x{})", n, n)))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut vecs = Matrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (new, &old) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[old]);
        vecs.set_column(new, &eig.eigenvectors.column(old));
    }
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_spectra_reconstruct() {
        use rand::{Rng, SeedableRng};
        // inputs of this shape broke nalgebra's complex singular vectors
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mut unitary = |n: usize| {
            Matrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).qr().q()
        };
        for t in 0..600 {
            let (r, c) = ([2, 4, 8, 16][t % 4], [2, 4, 8, 16][(t / 4) % 4]);
            let k = r.min(c);
            let mut sigma = Matrix::zeros(r, c);
            for i in 0..k {
                sigma[(i, i)] = C64::new((-2.3 * (t % 9) as f64 * i as f64 / k as f64).exp(), 0.0);
            }
            let m = unitary(r) * sigma * unitary(c);
            let (u, s, vt) = svd(&m).unwrap();
            let rec = &u * Matrix::from_diagonal(&nalgebra::DVector::from_iterator(k, s.iter().map(|&x| C64::new(x, 0.0)))) * &vt;
            assert!((rec - &m).norm() < 1e-12 * m.norm(), "case {}", t);
            assert!((u.adjoint() * &u - Matrix::identity(k, k)).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let r = svd_truncate_matrix(&Matrix::identity(4, 4), &TruncationPolicy::with_chi(4)).unwrap();
        assert_eq!(r.s.len(), 4);
        assert!(r.s.iter().all(|&x| (x - 1.0).abs() < 1e-14));
        assert_eq!(r.discarded_weight, 0.0);
    }

    #[test]
    fn rank_one_outer_product() {
        let u = [1.0, 2.0, -1.0];
        let v = [0.5, 0.0, 3.0, 1.0];
        let m = Matrix::from_fn(3, 4, |i, j| C64::new(u[i] * v[j], 0.0));
        let r = svd_truncate_matrix(&m, &TruncationPolicy::with_chi(1)).unwrap();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((r.s[0] - nu * nv).abs() < 1e-12);
        assert!(r.discarded_weight < 1e-24);
    }

    #[test]
    fn stages_apply_in_order() {
        let s = [1.0, 0.5, 1e-3, 1e-7, 1e-11];
        let p = TruncationPolicy { chi_max: 10, svd_min: 1e-10, trunc_cut: 1e-12 };
        let t = truncation_rank(&s, &p);
        // 1e-11 falls to svd_min, 1e-7 (squared 1e-14) to trunc_cut.
        assert_eq!(t.keep, 3);
        assert_eq!(t.binding, BindingConstraint::TruncCut);
        let t = truncation_rank(&s, &TruncationPolicy { chi_max: 2, ..p });
        assert_eq!(t.keep, 2);
        assert_eq!(t.binding, BindingConstraint::ChiMax);
        let t = truncation_rank(&s, &TruncationPolicy { trunc_cut: 0.0, ..p });
        assert_eq!(t.keep, 4);
        assert_eq!(t.binding, BindingConstraint::SvdMin);
    }

    #[test]
    fn always_keeps_one() {
        let t = truncation_rank(&[1e-20, 1e-21], &TruncationPolicy::default());
        assert_eq!(t.keep, 1);
    }
}
