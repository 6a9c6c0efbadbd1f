use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::fit::{curve_fit, FitResult};

pub const DEFAULT_NOISE_FACTORS: [f64; 9] = [1.0, 1.05, 1.1, 1.15, 1.2, 1.4, 1.6, 1.8, 2.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZneModel {
    /// `b + a lambda`
    Linear,
    /// `b + a lambda + c lambda^2`
    Quadratic,
    /// `a exp(-b lambda) + c`
    Exponential,
}

impl ZneModel {
    /// Candidates in order of preference when fits are equally good.
    pub const ALL: [ZneModel; 3] = [ZneModel::Linear, ZneModel::Quadratic, ZneModel::Exponential];

    fn n_params(self) -> usize {
        match self {
            ZneModel::Linear => 2,
            ZneModel::Quadratic | ZneModel::Exponential => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZneFit {
    pub noise_factors: Vec<f64>,
    pub values: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub model: ZneModel,
    pub params: Vec<f64>,
    pub extrapolated_value: f64,
    pub extrapolated_stderr: f64,
    /// Reduced chi-square of the chosen model.
    pub fit_residual: f64,
}

fn linear_start(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64) {
    // weighted least squares for b + a x
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let w = w[i] * w[i];
        s += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    let d = s * sxx - sx * sx;
    if d.abs() < 1e-300 {
        return (sy / s, 0.0);
    }
    ((sxx * sy - sx * sxy) / d, (s * sxy - sx * sy) / d)
}

fn fit_model(model: ZneModel, x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<FitResult> {
    let w: Vec<f64> = match sigma {
        Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; x.len()],
    };
    let (b0, a0) = linear_start(x, y, &w);
    match model {
        ZneModel::Linear => curve_fit(x, y, sigma, &[b0, a0], |l, p| p[0] + p[1] * l, |l, _| vec![1.0, l]),
        ZneModel::Quadratic => curve_fit(
            x,
            y,
            sigma,
            &[b0, a0, 0.0],
            |l, p| p[0] + p[1] * l + p[2] * l * l,
            |l, _| vec![1.0, l, l * l],
        ),
        ZneModel::Exponential => {
            // for fixed rate the model is linear in (a, c): pick the best rate on a grid
            let mut start = None;
            for rate in [0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0] {
                let e: Vec<f64> = x.iter().map(|l| (-rate * l).exp()).collect();
                let (c, a) = linear_start(&e, y, &w);
                let ssr: f64 = (0..x.len()).map(|i| (w[i] * (a * e[i] + c - y[i])).powi(2)).sum();
                if start.is_none_or(|(best, _)| ssr < best) {
                    start = Some((ssr, [a, rate, c]));
                }
            }
            let p0 = start.expect("rate grid is not empty").1;
            curve_fit(
                x,
                y,
                sigma,
                &p0,
                |l, p| p[0] * (-p[1] * l).exp() + p[2],
                |l, p| {
                    let e = (-p[1] * l).exp();
                    vec![e, -p[0] * l * e, 1.0]
                },
            )
        }
    }
}

/// Fits each candidate to `(factor, value, stderr)` points and extrapolates
/// the one with the lowest reduced chi-square to zero noise, preferring
/// models whose zero-noise value lies within `bound` in magnitude. Points are
/// weighted by their errors when all errors are positive. Models that fail
/// or leave no degrees of freedom are skipped.
pub fn zne_extrapolate(series: &[(f64, f64, f64)], models: &[ZneModel], bound: Option<f64>) -> Result<ZneFit> {
    if series.len() < 3 {
        bail!(InvalidArgument, "extrapolation needs at least 3 noise factors, got {}", series.len());
    }
    if series.iter().any(|(l, v, s)| !(*l >= 1.0) || !v.is_finite() || !(*s >= 0.0) || !s.is_finite()) {
        bail!(InvalidArgument, "noise factors must be at least 1 with finite values and errors");
    }
    if models.is_empty() {
        bail!(InvalidArgument, "no extrapolation models requested");
    }
    if bound.is_some_and(|b| !(b > 0.0)) {
        bail!(InvalidArgument, "extrapolation bound must be positive");
    }
    let x: Vec<f64> = series.iter().map(|p| p.0).collect();
    let y: Vec<f64> = series.iter().map(|p| p.1).collect();
    let s: Vec<f64> = series.iter().map(|p| p.2).collect();
    let sigma = s.iter().all(|v| *v > 0.0).then_some(s.as_slice());
    let mut candidates = Vec::new();
    let mut failures = Vec::new();
    for model in ZneModel::ALL.into_iter().filter(|m| models.contains(m)) {
        if series.len() <= model.n_params() {
            failures.push(format!("{:?}: no degrees of freedom", model));
            continue;
        }
        match fit_model(model, &x, &y, sigma) {
            Ok(f) => {
                let p = &f.params;
                let (value, grad) = match model {
                    ZneModel::Linear => (p[0], vec![1.0, 0.0]),
                    ZneModel::Quadratic => (p[0], vec![1.0, 0.0, 0.0]),
                    ZneModel::Exponential => (p[0] + p[2], vec![1.0, 0.0, 1.0]),
                };
                candidates.push((model, f, value, grad));
            }
            Err(e) => failures.push(format!("{:?}: {}", model, e)),
        }
    }
    // fits landing outside the observable's range are only used when no
    // other model stays inside it
    let admissible = |v: f64| bound.is_none_or(|b| v.abs() <= b);
    let pick = |inside: bool| {
        let mut best: Option<usize> = None;
        for (k, c) in candidates.iter().enumerate() {
            if inside && !admissible(c.2) {
                continue;
            }
            let r = c.1.reduced_chi2();
            if best.is_none_or(|b| {
                let rb = candidates[b].1.reduced_chi2();
                r < rb - 1e-12 * (1.0 + rb)
            }) {
                best = Some(k);
            }
        }
        best
    };
    let Some(k) = pick(true).or_else(|| pick(false)) else {
        bail!(Fit, "every extrapolation model failed ({})", failures.join("; "));
    };
    let (model, fit, value, grad) = candidates.swap_remove(k);
    Ok(ZneFit {
        noise_factors: x,
        values: y,
        stderrs: s,
        model,
        params: fit.params.clone(),
        extrapolated_value: value,
        extrapolated_stderr: fit.variance_along(&grad).sqrt(),
        fit_residual: fit.reduced_chi2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> Vec<(f64, f64, f64)> {
        DEFAULT_NOISE_FACTORS.iter().map(|&l| (l, f(l), 0.0)).collect()
    }

    #[test]
    fn constant_prefers_linear() {
        let z = zne_extrapolate(&series(|_| 0.7), &ZneModel::ALL, None).unwrap();
        assert_eq!(z.model, ZneModel::Linear);
        assert!((z.extrapolated_value - 0.7).abs() < 1e-12);
        assert!(z.params[1].abs() < 1e-12);
    }

    #[test]
    fn exact_linear() {
        let z = zne_extrapolate(&series(|l| 1.0 - 0.1 * l), &ZneModel::ALL, None).unwrap();
        assert_eq!(z.model, ZneModel::Linear);
        assert!((z.extrapolated_value - 1.0).abs() < 1e-10);
        assert!(z.extrapolated_stderr >= 0.0);
    }

    #[test]
    fn exact_exponential() {
        let z = zne_extrapolate(&series(|l| 0.9 * (-0.5 * l).exp()), &ZneModel::ALL, None).unwrap();
        assert_eq!(z.model, ZneModel::Exponential);
        assert!((z.extrapolated_value - 0.9).abs() < 1e-6, "{}", z.extrapolated_value);
    }

    #[test]
    fn restricted_model_set() {
        let z = zne_extrapolate(&series(|l| 0.9 * (-0.5 * l).exp()), &[ZneModel::Linear], None).unwrap();
        assert_eq!(z.model, ZneModel::Linear);
    }

    #[test]
    fn weighted_stderr_matches_closed_form() {
        // the intercept variance of a weighted line is sum(w x^2) / det
        let pts: Vec<(f64, f64, f64)> = [(1.0, 0.8, 0.01), (1.5, 0.71, 0.02), (2.0, 0.6, 0.01), (3.0, 0.41, 0.03)].to_vec();
        let z = zne_extrapolate(&pts, &[ZneModel::Linear], None).unwrap();
        let (mut s, mut sx, mut sxx) = (0.0, 0.0, 0.0);
        for (x, _, e) in &pts {
            let w = 1.0 / (e * e);
            s += w;
            sx += w * x;
            sxx += w * x * x;
        }
        let want = (sxx / (s * sxx - sx * sx)).sqrt();
        assert!((z.extrapolated_stderr - want).abs() < 1e-9 * want);
    }

    #[test]
    fn out_of_range_fits_lose_to_admissible_ones() {
        let curved = series(|l| 0.6 + 0.1 * (l - 1.5) * (l - 1.5));
        assert_eq!(zne_extrapolate(&curved, &ZneModel::ALL, None).unwrap().model, ZneModel::Quadratic);
        let z = zne_extrapolate(&curved, &ZneModel::ALL, Some(0.7)).unwrap();
        assert_ne!(z.model, ZneModel::Quadratic);
        assert!(z.extrapolated_value.abs() <= 0.7);
        // with nothing admissible the best fit is still returned
        let z = zne_extrapolate(&curved, &[ZneModel::Quadratic], Some(0.7)).unwrap();
        assert!((z.extrapolated_value - 0.825).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_series() {
        assert!(zne_extrapolate(&series(|_| 1.0)[..2], &ZneModel::ALL, None).is_err());
        assert!(zne_extrapolate(&[(0.5, 1.0, 0.0), (1.0, 1.0, 0.0), (2.0, 1.0, 0.0)], &ZneModel::ALL, None).is_err());
        assert!(zne_extrapolate(&series(|_| 1.0), &[], None).is_err());
        assert!(zne_extrapolate(&series(|_| 1.0), &ZneModel::ALL, Some(0.0)).is_err());
    }
}
