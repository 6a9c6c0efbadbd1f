use super::Mps;
use crate::error::{bail, Result};
use crate::linalg::{eigh, matmul, Matrix, C64};

pub const DEFAULT_RDM_CAP: usize = 8;

/// Density matrix of a contiguous block, with its clipped eigenvalues.
///
/// The first site of the block is the most significant bit of the row index.
#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix {
    first_site: usize,
    n_sites: usize,
    entries: Matrix,
    spectrum: Vec<f64>,
    asymmetry: f64,
}

impl ReducedDensityMatrix {
    /// Symmetrizes `m` to `(m + m^dagger) / 2` and computes the spectrum,
    /// clipping eigenvalues into [0, 1]. The raw asymmetry is retained.
    pub fn from_matrix(first_site: usize, m: Matrix) -> Result<ReducedDensityMatrix> {
        let dim = m.nrows();
        if dim == 0 || dim != m.ncols() || !dim.is_power_of_two() {
            bail!(Dimension, "density matrix of shape {}x{}", m.nrows(), m.ncols());
        }
        let asymmetry = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asymmetry > 1e-10 {
            log::debug!("density matrix asymmetry {:.3e} removed by symmetrization", asymmetry);
        }
        let entries = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let (vals, _) = eigh(&entries)?;
        let spectrum = vals.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(ReducedDensityMatrix {
            first_site,
            n_sites: dim.trailing_zeros() as usize,
            entries,
            spectrum,
            asymmetry,
        })
    }

    pub fn first_site(&self) -> usize {
        self.first_site
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    /// Descending eigenvalues clipped into [0, 1].
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }
}

impl Mps {
    pub fn reduced_density_matrix(&self, sites: &[usize]) -> Result<ReducedDensityMatrix> {
        self.reduced_density_matrix_with_cap(sites, DEFAULT_RDM_CAP)
    }

    /// Partial trace onto the contiguous ascending block `sites`.
    pub fn reduced_density_matrix_with_cap(&self, sites: &[usize], cap: usize) -> Result<ReducedDensityMatrix> {
        let Some(&first) = sites.first() else {
            bail!(InvalidArgument, "empty site set");
        };
        if sites.windows(2).any(|w| w[1] != w[0] + 1) {
            bail!(InvalidArgument, "sites {:?} are not a contiguous ascending range", sites);
        }
        let l = sites.len();
        if l > cap {
            bail!(InvalidArgument, "block of {} sites exceeds cap {}", l, cap);
        }
        let last = first + l - 1;
        if last >= self.n_sites() {
            bail!(OutOfRange, "site {} on a chain of {} sites", last, self.n_sites());
        }
        let moved;
        let state = match self.ortho_center {
            Some(c) if (first..=last).contains(&c) => self,
            _ => {
                let mut s = self.clone();
                s.move_center(first);
                moved = s;
                &moved
            }
        };
        let chi_l = state.tensors[first].shape()[0];
        // m[a, s, r] with s running over the block.
        let mut m = state.tensors[first].data().to_vec();
        let mut rows = chi_l * 2;
        let mut r = state.tensors[first].shape()[2];
        for site in first + 1..=last {
            let t = &state.tensors[site];
            let nr = t.shape()[2];
            m = matmul(rows, r, 2 * nr, &m, t.data());
            rows *= 2;
            r = nr;
        }
        let d = 1usize << l;
        // x[s, (a, b)]
        let cols = chi_l * r;
        let mut x = Matrix::zeros(d, cols);
        for a in 0..chi_l {
            for s in 0..d {
                for b in 0..r {
                    x[(s, a * r + b)] = m[(a * d + s) * r + b];
                }
            }
        }
        let rho = &x * x.adjoint();
        ReducedDensityMatrix::from_matrix(first, rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{TruncationPolicy, ZERO};

    fn singlet_pairs(n_pairs: usize) -> Mps {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pair = [ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO];
        let mut v = vec![C64::new(1.0, 0.0)];
        for _ in 0..n_pairs {
            let mut w = vec![ZERO; v.len() * 4];
            for (i, a) in v.iter().enumerate() {
                for (j, b) in pair.iter().enumerate() {
                    w[i * 4 + j] = a * b;
                }
            }
            v = w;
        }
        Mps::from_statevector(&v, &TruncationPolicy::unlimited()).unwrap()
    }

    #[test]
    fn singlet_single_site() {
        let psi = singlet_pairs(1);
        let r = psi.reduced_density_matrix(&[1]).unwrap();
        assert!((r.spectrum()[0] - 0.5).abs() < 1e-12 && (r.spectrum()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn isolated_singlet_is_pure() {
        let psi = singlet_pairs(3);
        let r = psi.reduced_density_matrix(&[2, 3]).unwrap();
        assert!((r.spectrum()[0] - 1.0).abs() < 1e-12);
        assert!(r.spectrum()[1..].iter().all(|x| x.abs() < 1e-12));
        assert!((r.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_ranges() {
        let psi = singlet_pairs(2);
        assert!(psi.reduced_density_matrix(&[0, 2]).is_err());
        assert!(psi.reduced_density_matrix(&[3, 4]).is_err());
        assert!(psi.reduced_density_matrix_with_cap(&[0, 1, 2], 2).is_err());
    }
}
