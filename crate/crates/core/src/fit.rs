//! Weighted nonlinear least squares with parameter covariances.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra_lm::{storage::Owned, DMatrix, DVector, Dyn};

use crate::error::{bail, Result};

#[derive(Clone, Debug)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Row-major `p x p` covariance.
    pub covariance: Vec<f64>,
    /// Weighted sum of squared residuals.
    pub chi2: f64,
    pub dof: usize,
}

impl FitResult {
    pub fn stderr(&self, k: usize) -> f64 {
        let p = self.params.len();
        self.covariance[k * p + k].max(0.0).sqrt()
    }

    pub fn reduced_chi2(&self) -> f64 {
        if self.dof == 0 {
            0.0
        } else {
            self.chi2 / self.dof as f64
        }
    }

    /// Variance of `g . params` for a gradient `g`.
    pub fn variance_along(&self, g: &[f64]) -> f64 {
        let p = self.params.len();
        let mut v = 0.0;
        for i in 0..p {
            for j in 0..p {
                v += g[i] * self.covariance[i * p + j] * g[j];
            }
        }
        v.max(0.0)
    }
}

struct Problem<'a, F, J> {
    x: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
    p: DVector<f64>,
    model: F,
    grad: J,
}

impl<F, J> LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_, F, J>
where
    F: Fn(f64, &[f64]) -> f64,
    J: Fn(f64, &[f64]) -> Vec<f64>,
{
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, p: &DVector<f64>) {
        self.p.copy_from(p);
    }

    fn params(&self) -> DVector<f64> {
        self.p.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let p = self.p.as_slice();
        Some(DVector::from_fn(self.x.len(), |i, _| self.w[i] * ((self.model)(self.x[i], p) - self.y[i])))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let p = self.p.as_slice();
        let mut j = DMatrix::zeros(self.x.len(), p.len());
        for (i, &x) in self.x.iter().enumerate() {
            for (k, d) in (self.grad)(x, p).into_iter().enumerate() {
                j[(i, k)] = self.w[i] * d;
            }
        }
        Some(j)
    }
}

/// Fits `model(x, p)` to `y`. With `sigma` the residuals are weighted by
/// `1/sigma` and the covariance is `(J^T W J)^-1`; without it the covariance
/// is scaled by the residual variance.
pub fn curve_fit<F, J>(x: &[f64], y: &[f64], sigma: Option<&[f64]>, p0: &[f64], model: F, grad: J) -> Result<FitResult>
where
    F: Fn(f64, &[f64]) -> f64,
    J: Fn(f64, &[f64]) -> Vec<f64>,
{
    let (n, np) = (x.len(), p0.len());
    if y.len() != n || sigma.is_some_and(|s| s.len() != n) {
        bail!(Dimension, "fit data lengths differ");
    }
    if n < np {
        bail!(Fit, "{} points cannot fix {} parameters", n, np);
    }
    if x.iter().chain(y).chain(p0).any(|v| !v.is_finite()) {
        bail!(Fit, "non-finite fit input");
    }
    let w: Vec<f64> = match sigma {
        Some(s) => {
            if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                bail!(Fit, "uncertainties must be positive");
            }
            s.iter().map(|v| 1.0 / v).collect()
        }
        None => vec![1.0; n],
    };
    let problem = Problem { x, y, w, p: DVector::from_column_slice(p0), model, grad };
    let (problem, report) = LevenbergMarquardt::new().with_patience(500).minimize(problem);
    if !report.termination.was_successful() {
        bail!(Fit, "least squares did not converge: {:?}", report.termination);
    }
    let params: Vec<f64> = problem.p.iter().copied().collect();
    if params.iter().any(|v| !v.is_finite()) {
        bail!(Fit, "fit produced non-finite parameters");
    }
    let r = problem.residuals().expect("residuals");
    let chi2 = r.norm_squared();
    let j = problem.jacobian().expect("jacobian");
    let jtj = j.transpose() * &j;
    let scale = jtj.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let inv = match jtj.clone().try_inverse() {
        Some(inv) if scale > 0.0 && jtj.determinant().abs() > 1e-14 * scale.powi(np as i32) => inv,
        _ => bail!(Fit, "singular normal equations"),
    };
    let dof = n - np;
    let factor = if sigma.is_some() {
        1.0
    } else if dof > 0 {
        chi2 / dof as f64
    } else {
        0.0
    };
    let covariance = (0..np * np).map(|k| inv[(k / np, k % np)] * factor).collect();
    Ok(FitResult { params, covariance, chi2, dof })
}
