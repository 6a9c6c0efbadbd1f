use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ExpectationProvider;
use crate::error::{bail, Result};
use crate::linalg::{eigh, Matrix, C64};
use crate::mps::{Pauli, PauliString, ReducedDensityMatrix};

pub const DEFAULT_TOMOGRAPHY_CAP: usize = 6;

/// All `4^l` strings; the first site is the most significant base-4 digit.
pub fn pauli_strings(l: usize) -> Vec<Vec<Pauli>> {
    (0..4usize.pow(l as u32))
        .map(|mut k| {
            let mut s = vec![Pauli::I; l];
            for slot in s.iter_mut().rev() {
                *slot = Pauli::ALL[k % 4];
                k /= 4;
            }
            s
        })
        .collect()
}

/// `(1/2^l) sum_P <P> P` from expectation values in [`pauli_strings`] order.
pub fn density_from_expectations(l: usize, values: &[f64]) -> Result<Matrix> {
    let n = 4usize.pow(l as u32);
    if values.len() != n {
        bail!(Dimension, "{} expectation values for {} strings", values.len(), n);
    }
    let dim = 1usize << l;
    let mut rho = Matrix::zeros(dim, dim);
    let i = C64::new(0.0, 1.0);
    for (k, ops) in pauli_strings(l).iter().enumerate() {
        let v = values[k];
        if v == 0.0 {
            continue;
        }
        let mut flip = 0;
        for (site, p) in ops.iter().enumerate() {
            if matches!(p, Pauli::X | Pauli::Y) {
                flip |= 1 << (l - 1 - site);
            }
        }
        for c in 0..dim {
            let mut phase = C64::new(v, 0.0);
            for (site, p) in ops.iter().enumerate() {
                let bit = (c >> (l - 1 - site)) & 1;
                match (p, bit) {
                    (Pauli::Y, 0) => phase *= i,
                    (Pauli::Y, _) => phase *= -i,
                    (Pauli::Z, 1) => phase = -phase,
                    _ => {}
                }
            }
            rho[(c ^ flip, c)] += phase;
        }
    }
    Ok(rho / C64::new(dim as f64, 0.0))
}

fn block_strings(sites: &[usize]) -> Result<Vec<PauliString>> {
    let first = sites[0];
    if sites.iter().enumerate().any(|(k, &s)| s != first + k) {
        bail!(InvalidArgument, "tomography sites must be contiguous and ascending");
    }
    Ok(pauli_strings(sites.len()).iter().map(|ops| PauliString::from_dense(first, ops)).collect())
}

/// Reconstructs the density matrix of `sites` from all `4^l` Pauli strings.
pub fn tomography_rdm<P: ExpectationProvider + ?Sized>(provider: &P, sites: &[usize]) -> Result<ReducedDensityMatrix> {
    tomography_rdm_with_cap(provider, sites, DEFAULT_TOMOGRAPHY_CAP)
}

pub fn tomography_rdm_with_cap<P: ExpectationProvider + ?Sized>(
    provider: &P,
    sites: &[usize],
    cap: usize,
) -> Result<ReducedDensityMatrix> {
    let (means, _) = tomography_expectations(provider, sites, cap)?;
    ReducedDensityMatrix::from_matrix(sites[0], density_from_expectations(sites.len(), &means)?)
}

/// Means and standard errors of every string on `sites`, in
/// [`pauli_strings`] order. The identity is fixed to 1 with zero error.
pub fn tomography_expectations<P: ExpectationProvider + ?Sized>(
    provider: &P,
    sites: &[usize],
    cap: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if sites.is_empty() || sites.len() > cap {
        bail!(InvalidArgument, "tomography of {} sites outside 1..={}", sites.len(), cap);
    }
    if sites[sites.len() - 1] >= provider.n_sites() {
        bail!(OutOfRange, "site {} on a chain of {} sites", sites[sites.len() - 1], provider.n_sites());
    }
    let strings = block_strings(sites)?;
    let est = provider.expect_all(&strings[1..])?;
    let mut means = vec![1.0];
    let mut errs = vec![0.0];
    for e in est {
        means.push(e.mean);
        errs.push(e.stderr);
    }
    Ok((means, errs))
}

/// A product basis and the strings measured with it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementGroup {
    pub basis: Vec<Pauli>,
    /// Indices into [`pauli_strings`]`(l)`.
    pub members: Vec<usize>,
}

/// Qubit-wise commuting cover of all `4^l` strings: one group per product
/// basis in {X, Y, Z}^l, each string assigned to the basis obtained by
/// reading its identities as Z. Every string lands in exactly one group.
pub fn commuting_groups(l: usize) -> Vec<MeasurementGroup> {
    let bases = pauli_strings(l)
        .into_iter()
        .filter(|s| s.iter().all(|p| *p != Pauli::I))
        .collect::<Vec<_>>();
    let mut groups: Vec<MeasurementGroup> =
        bases.into_iter().map(|basis| MeasurementGroup { basis, members: Vec::new() }).collect();
    // bases are in lexicographic order over {X, Y, Z}, i.e. base-3 digits
    for (k, s) in pauli_strings(l).iter().enumerate() {
        let idx = s.iter().fold(0, |acc, p| {
            acc * 3
                + match p {
                    Pauli::X => 0,
                    Pauli::Y => 1,
                    Pauli::Z | Pauli::I => 2,
                }
        });
        groups[idx].members.push(k);
    }
    groups
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpectrum {
    /// Spectrum of the density matrix built from the means, descending.
    pub direct: Vec<f64>,
    /// Per-eigenvalue mean over resamples, in the order of `direct`.
    pub mean_eigenvalues: Vec<f64>,
    pub stddevs: Vec<f64>,
    pub samples: usize,
}

/// Resamples each string from `N(mean, stderr)`, rebuilds the density matrix,
/// and reads its diagonal in the eigenbasis of the mean matrix.
pub fn bootstrap_spectrum(means: &[f64], stderrs: &[f64], samples: usize, seed: u64) -> Result<BootstrapSpectrum> {
    if means.len() != stderrs.len() {
        bail!(Dimension, "{} means but {} errors", means.len(), stderrs.len());
    }
    if means.iter().chain(stderrs).any(|v| !v.is_finite()) || stderrs.iter().any(|s| *s < 0.0) {
        bail!(InvalidArgument, "bootstrap inputs must be finite with non-negative errors");
    }
    if samples < 2 {
        bail!(InvalidArgument, "bootstrap needs at least 2 samples");
    }
    let l = (0..8).find(|&l| 4usize.pow(l as u32) == means.len());
    let Some(l) = l.filter(|&l| l >= 1) else {
        bail!(Dimension, "{} values is not 4^l strings", means.len());
    };
    let rho = density_from_expectations(l, means)?;
    let herm = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let (direct, v) = eigh(&herm)?;
    let vh = v.adjoint();
    let dim = direct.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut diag = Vec::with_capacity(samples);
    let mut draw = vec![0.0; means.len()];
    for _ in 0..samples {
        for (k, d) in draw.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *d = means[k] + stderrs[k] * z;
        }
        let r = density_from_expectations(l, &draw)?;
        let rot = &vh * r * &v;
        diag.push((0..dim).map(|k| rot[(k, k)].re).collect::<Vec<f64>>());
    }
    let n = samples as f64;
    let mean_eigenvalues: Vec<f64> = (0..dim).map(|k| diag.iter().map(|d| d[k]).sum::<f64>() / n).collect();
    let stddevs = (0..dim)
        .map(|k| {
            let m = mean_eigenvalues[k];
            (diag.iter().map(|d| (d[k] - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        })
        .collect();
    Ok(BootstrapSpectrum { direct, mean_eigenvalues, stddevs, samples })
}
