use serde::{Deserialize, Serialize};

use super::Estimate;
use crate::error::{bail, Result};
use crate::fit::curve_fit;

/// Cells whose magnitude is below this are dropped from fits of exact data.
const EXACT_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeFit {
    /// Decay length in unit cells.
    pub xi1: f64,
    pub xi1_stderr: f64,
    /// Decay length in sites, `2 xi1`.
    pub xi: f64,
    pub xi_stderr: f64,
    pub amplitude: f64,
    pub amplitude_stderr: f64,
    pub cells_used: Vec<usize>,
}

/// Fits the unit-cell magnetization `S(x) = m_(2x) + m_(2x+1)` of the first
/// `n_cells` cells to `A exp(-x / xi1)`. `profile[i]` is `<Z_i>/2` counted
/// from the left end. Cells with `|S| < 3 stderr` are excluded.
pub fn fit_edge_decay(profile: &[Estimate], n_cells: usize) -> Result<EdgeFit> {
    if n_cells < 3 {
        bail!(InvalidArgument, "edge fit needs at least 3 cells, got {}", n_cells);
    }
    if profile.len() < 2 * n_cells {
        bail!(Dimension, "{} cells need {} sites, profile has {}", n_cells, 2 * n_cells, profile.len());
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut sig = Vec::new();
    let mut cells = Vec::new();
    for x in 0..n_cells {
        let (a, b) = (profile[2 * x], profile[2 * x + 1]);
        let v = a.mean + b.mean;
        let s = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
        if !v.is_finite() || !s.is_finite() {
            bail!(Fit, "non-finite magnetization in cell {}", x);
        }
        if v.abs() < (3.0 * s).max(EXACT_FLOOR) {
            continue;
        }
        xs.push(x as f64);
        ys.push(v);
        sig.push(s);
        cells.push(x);
    }
    if xs.len() < 3 {
        bail!(Fit, "only {} cells above the noise floor", xs.len());
    }
    let weighted = sig.iter().all(|s| *s > 0.0);
    // log-linear start from the first and last usable cells of one sign
    let (x0, y0) = (xs[0], ys[0]);
    let k = ys.iter().rposition(|y| y.signum() == y0.signum() && *y != y0).unwrap_or(1);
    let slope = (ys[k] / y0).ln() / (xs[k] - x0);
    let xi0 = if slope < 0.0 && slope.is_finite() { -1.0 / slope } else { 1.0 };
    let a0 = y0 * (x0 / xi0).exp();
    let fit = curve_fit(
        &xs,
        &ys,
        weighted.then_some(sig.as_slice()),
        &[a0, xi0],
        |x, p| p[0] * (-x / p[1]).exp(),
        |x, p| {
            let e = (-x / p[1]).exp();
            vec![e, p[0] * e * x / (p[1] * p[1])]
        },
    )?;
    let (amplitude, xi1) = (fit.params[0], fit.params[1]);
    if !(xi1 > 0.0) {
        bail!(Fit, "fitted decay length {} is not positive", xi1);
    }
    Ok(EdgeFit {
        xi1,
        xi1_stderr: fit.stderr(1),
        xi: 2.0 * xi1,
        xi_stderr: 2.0 * fit.stderr(1),
        amplitude,
        amplitude_stderr: fit.stderr(0),
        cells_used: cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn synthetic(xi1: f64, n: usize) -> Vec<Estimate> {
        // split each cell value unevenly between its two sites
        (0..n)
            .flat_map(|x| {
                let v = 0.4 * (-(x as f64) / xi1).exp();
                [Estimate::exact(1.5 * v), Estimate::exact(-0.5 * v)]
            })
            .collect()
    }

    #[test]
    fn exact_exponential() {
        let f = fit_edge_decay(&synthetic(1.5, 20), 20).unwrap();
        assert!((f.xi - 3.0).abs() < 1e-6, "{}", f.xi);
        assert!((f.amplitude - 0.4).abs() < 1e-6);
    }

    #[test]
    fn noisy_recovery_within_three_stderr() {
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut hits = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p: Vec<Estimate> = synthetic(1.5, 10)
                .into_iter()
                .map(|e| Estimate { mean: e.mean + noise.sample(&mut rng), stderr: 0.01 })
                .collect();
            let f = fit_edge_decay(&p, 10).unwrap();
            if (f.xi - 3.0).abs() <= 3.0 * f.xi_stderr {
                hits += 1;
            }
        }
        // a 3-sigma interval misses about 0.3% of the time
        assert!(hits >= 97, "{} of 100", hits);
    }

    #[test]
    fn too_few_cells() {
        assert!(fit_edge_decay(&synthetic(1.0, 2), 2).is_err());
        let flat = vec![Estimate { mean: 0.0, stderr: 0.01 }; 20];
        assert!(fit_edge_decay(&flat, 10).is_err());
    }
}
