use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{bail, Result};
use crate::linalg::{C64, ZERO};

const KRYLOV_MAX: usize = 30;

#[derive(Clone, Copy, Debug)]
pub struct LanczosParams {
    /// Convergence threshold on the change of the lowest Ritz value.
    pub tol: f64,
    pub max_restarts: usize,
}

pub struct LanczosOutcome {
    pub value: f64,
    pub vector: Vec<C64>,
    pub matvecs: usize,
    pub converged: bool,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Lowest eigenpair of a Hermitian operator by restarted Lanczos with full
/// reorthogonalization. `v0` seeds the Krylov space.
pub fn lowest_eigenpair<F>(apply: F, v0: Vec<C64>, params: &LanczosParams) -> Result<LanczosOutcome>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let dim = v0.len();
    let n0 = norm(&v0);
    if dim == 0 || !(n0 > 0.0) {
        bail!(Numerical, "Lanczos needs a non-zero start vector");
    }
    let mut v: Vec<C64> = v0.iter().map(|z| z / n0).collect();
    let mut last = f64::INFINITY;
    let mut matvecs = 0;
    for _ in 0..=params.max_restarts {
        let kmax = KRYLOV_MAX.min(dim);
        let mut basis: Vec<Vec<C64>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut done = false;
        let ritz = loop {
            let k = basis.len() - 1;
            let mut w = apply(&basis[k]);
            matvecs += 1;
            let a = dot(&basis[k], &w).re;
            alpha.push(a);
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    for (x, y) in w.iter_mut().zip(b) {
                        *x -= c * y;
                    }
                }
            }
            let (val, vec) = tridiagonal_lowest(&alpha, &beta);
            let change = (val - last).abs();
            last = val;
            let bnorm = norm(&w);
            if change < params.tol || bnorm < 1e-14 || basis.len() == dim {
                done = true;
                break (val, vec);
            }
            if basis.len() == kmax {
                break (val, vec);
            }
            beta.push(bnorm);
            basis.push(w.into_iter().map(|z| z / bnorm).collect());
        };
        let mut next = vec![ZERO; dim];
        for (b, c) in basis.iter().zip(&ritz.1) {
            for (x, y) in next.iter_mut().zip(b) {
                *x += *c * y;
            }
        }
        let n = norm(&next);
        v = next.into_iter().map(|z| z / n).collect();
        if done {
            return Ok(LanczosOutcome { value: ritz.0, vector: v, matvecs, converged: true });
        }
    }
    log::warn!("Lanczos hit the restart cap of {}", params.max_restarts);
    Ok(LanczosOutcome { value: last, vector: v, matvecs, converged: false })
}

fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    (val, eig.eigenvectors.column(idx).iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, Matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_dense_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 60;
        let a = Matrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let h = &a + a.adjoint();
        let (vals, _) = eigh(&h).unwrap();
        let apply = |x: &[C64]| {
            let v = nalgebra::DVector::from_column_slice(x);
            (&h * v).iter().copied().collect::<Vec<_>>()
        };
        let v0 = vec![C64::new(1.0, 0.0); n];
        let out = lowest_eigenpair(apply, v0, &LanczosParams { tol: 1e-13, max_restarts: 200 }).unwrap();
        assert!(out.converged);
        assert!((out.value - vals[n - 1]).abs() < 1e-9, "{} vs {}", out.value, vals[n - 1]);
    }

    #[test]
    fn zero_start_rejected() {
        let out = lowest_eigenpair(|x: &[C64]| x.to_vec(), vec![ZERO; 3], &LanczosParams { tol: 1e-12, max_restarts: 1 });
        assert!(out.is_err());
    }
}
