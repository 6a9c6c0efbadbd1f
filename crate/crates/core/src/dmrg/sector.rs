//! Abelian total-Z bookkeeping on dense tensors.
//!
//! Bond `k` (left of site `k`) carries one charge per index: the total `Z` of
//! sites `0..k` in that basis state. A site entry `A[l, s, r]` is allowed only
//! when `q_k[l] + z[s] == q_{k+1}[r]`. With conservation off every charge is
//! zero and all entries are allowed.

use crate::error::{bail, Result};
use crate::linalg::{svd, truncation_rank, Matrix, Tensor, TruncationPolicy, ZERO};
use crate::mps::Mps;

#[derive(Clone, Copy, Debug)]
pub struct PhysicalCharges {
    pub z: [i32; 2],
}

impl PhysicalCharges {
    pub fn new(conserve: bool) -> PhysicalCharges {
        PhysicalCharges { z: if conserve { [1, -1] } else { [0, 0] } }
    }
}

/// Reads bond charges off the nonzero entries of `psi`. Fails if an entry
/// contradicts an earlier assignment.
pub fn infer_charges(psi: &Mps, phys: PhysicalCharges, eps: f64) -> Result<Vec<Vec<i32>>> {
    let mut charges = vec![vec![0]];
    for (site, t) in psi.tensors().iter().enumerate() {
        let (l, r) = (t.shape()[0], t.shape()[2]);
        let mut right: Vec<Option<i32>> = vec![None; r];
        for il in 0..l {
            for s in 0..2 {
                for ir in 0..r {
                    if t.get(&[il, s, ir]).norm() <= eps {
                        continue;
                    }
                    let q = charges[site][il] + phys.z[s];
                    match right[ir] {
                        None => right[ir] = Some(q),
                        Some(p) if p != q => {
                            bail!(Sector, "site {} mixes total-Z sectors {} and {} on one bond index", site, p, q)
                        }
                        _ => {}
                    }
                }
            }
        }
        charges.push(right.into_iter().map(|q| q.unwrap_or(0)).collect());
    }
    Ok(charges)
}

/// Zeroes every entry of a site tensor that breaks charge conservation.
pub fn mask_site(t: &mut Tensor, ql: &[i32], qr: &[i32], phys: PhysicalCharges) {
    let (l, r) = (t.shape()[0], t.shape()[2]);
    let d = t.data_mut();
    for il in 0..l {
        for s in 0..2 {
            for ir in 0..r {
                if ql[il] + phys.z[s] != qr[ir] {
                    d[(il * 2 + s) * r + ir] = ZERO;
                }
            }
        }
    }
}

/// Zeroes two-site entries `theta[l, s1, s2, r]` outside the sector.
pub fn mask_pair(theta: &mut [crate::linalg::C64], ql: &[i32], qr: &[i32], phys: PhysicalCharges) {
    let (l, r) = (ql.len(), qr.len());
    for il in 0..l {
        for s1 in 0..2 {
            for s2 in 0..2 {
                for ir in 0..r {
                    if ql[il] + phys.z[s1] + phys.z[s2] != qr[ir] {
                        theta[((il * 2 + s1) * 2 + s2) * r + ir] = ZERO;
                    }
                }
            }
        }
    }
}

pub struct GroupedBasis {
    /// Orthonormal columns, ordered by descending singular value.
    pub u: Matrix,
    pub s: Vec<f64>,
    pub charges: Vec<i32>,
}

/// Left singular basis of `m` computed block by block over rows sharing a
/// charge, then truncated jointly by `policy`. Ties in singular value keep
/// block order, which follows increasing charge.
pub fn grouped_basis(m: &Matrix, row_charges: &[i32], policy: &TruncationPolicy) -> Result<GroupedBasis> {
    let rows = m.nrows();
    let mut labels: Vec<i32> = row_charges.to_vec();
    labels.sort_unstable();
    labels.dedup();
    // (singular value, charge, column of u restricted to the block rows)
    let mut cands: Vec<(f64, i32, Vec<(usize, crate::linalg::C64)>)> = Vec::new();
    for q in labels {
        let idx: Vec<usize> = (0..rows).filter(|&i| row_charges[i] == q).collect();
        let block = Matrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)]);
        if block.iter().all(|z| *z == ZERO) {
            continue;
        }
        let (u, s, _) = svd(&block)?;
        for (k, sv) in s.iter().enumerate() {
            let col = idx.iter().enumerate().map(|(i, &row)| (row, u[(i, k)])).collect();
            cands.push((*sv, q, col));
        }
    }
    if cands.is_empty() {
        bail!(Numerical, "cannot split an all-zero tensor");
    }
    cands.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let s: Vec<f64> = cands.iter().map(|c| c.0).collect();
    let t = truncation_rank(&s, policy);
    let mut u = Matrix::zeros(rows, t.keep);
    for (k, c) in cands.iter().take(t.keep).enumerate() {
        for &(row, z) in &c.2 {
            u[(row, k)] = z;
        }
    }
    Ok(GroupedBasis {
        u,
        s: s[..t.keep].to_vec(),
        charges: cands.iter().take(t.keep).map(|c| c.1).collect(),
    })
}
