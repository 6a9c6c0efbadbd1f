//! Diagnostics of SPT order: string order, magnetization profiles, edge-decay
//! fits and tomographic entanglement spectra.
//!
//! Everything is computed through an [`ExpectationProvider`], so the same code
//! runs on exact MPS contractions and on shot-based noisy estimates.

mod edge;
mod tomography;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::mps::{Mps, PauliString};

pub use edge::{fit_edge_decay, EdgeFit};
pub use tomography::{
    bootstrap_spectrum, commuting_groups, density_from_expectations, pauli_strings, tomography_expectations,
    tomography_rdm, tomography_rdm_with_cap, BootstrapSpectrum, MeasurementGroup, DEFAULT_TOMOGRAPHY_CAP,
};

/// A mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Estimate {
        Estimate { mean, stderr: 0.0 }
    }
}

/// Source of Pauli-string expectation values.
pub trait ExpectationProvider {
    fn n_sites(&self) -> usize;

    fn expect(&self, op: &PauliString) -> Result<Estimate>;

    /// Batched queries; providers that share measurement settings between
    /// compatible strings override this.
    fn expect_all(&self, ops: &[PauliString]) -> Result<Vec<Estimate>> {
        ops.iter().map(|o| self.expect(o)).collect()
    }

    /// Whether `expect` may be called from several threads at once.
    fn concurrent(&self) -> bool {
        false
    }

    /// Whether estimates are zero-noise extrapolated.
    fn zne_used(&self) -> bool {
        false
    }
}

impl ExpectationProvider for Mps {
    fn n_sites(&self) -> usize {
        Mps::n_sites(self)
    }

    fn expect(&self, op: &PauliString) -> Result<Estimate> {
        Ok(Estimate::exact(self.expect_pauli(op)?))
    }

    fn concurrent(&self) -> bool {
        true
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StringParity {
    Even,
    Odd,
}

impl StringParity {
    fn offset(self) -> usize {
        match self {
            StringParity::Even => 0,
            StringParity::Odd => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringOrderRequest {
    pub parity: StringParity,
    pub lengths: Vec<usize>,
    /// Window starts; `None` uses {20, 30, 40, 50, 60} for even strings and
    /// {19, 29, 39, 49, 59} for odd ones.
    pub start_sites: Option<Vec<usize>>,
    /// Sites to keep clear at the right end: windows need `s + l <= N - margin`.
    pub edge_margin: usize,
}

impl StringOrderRequest {
    pub fn new(parity: StringParity, lengths: Vec<usize>) -> StringOrderRequest {
        StringOrderRequest { parity, lengths, start_sites: None, edge_margin: 20 }
    }

    pub fn starts(&self) -> Vec<usize> {
        match &self.start_sites {
            Some(s) => s.clone(),
            None => [20, 30, 40, 50, 60].iter().map(|s| s - self.parity.offset()).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StringOrderRow {
    pub parity: StringParity,
    pub l: usize,
    pub s: usize,
    pub value: f64,
    pub stderr: f64,
    pub zne_used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StringOrderResult {
    pub parity: StringParity,
    pub lengths: Vec<usize>,
    /// Window-averaged value per length.
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// One row per (l, s) window.
    pub windows: Vec<StringOrderRow>,
}

/// `(-1)^(l/2) <Z_s ... Z_(s+l-1)>` averaged over the requested windows.
pub fn string_order<P: ExpectationProvider + ?Sized>(provider: &P, req: &StringOrderRequest) -> Result<StringOrderResult> {
    let n = provider.n_sites();
    let starts = req.starts();
    if starts.is_empty() {
        bail!(InvalidArgument, "no string windows requested");
    }
    for &s in &starts {
        if s % 2 != req.parity.offset() {
            bail!(InvalidArgument, "start site {} does not match {:?} parity", s, req.parity);
        }
    }
    let mut means = Vec::new();
    let mut stderrs = Vec::new();
    let mut windows = Vec::new();
    for &l in &req.lengths {
        if l < 2 || l % 2 != 0 {
            bail!(InvalidArgument, "string length {} must be even and at least 2", l);
        }
        let sign = if (l / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let mut ops = Vec::with_capacity(starts.len());
        for &s in &starts {
            if s + l + req.edge_margin > n {
                bail!(OutOfRange, "window s = {}, l = {} breaks the margin of {} on {} sites", s, l, req.edge_margin, n);
            }
            ops.push(PauliString::z_string(s, l));
        }
        let est = provider.expect_all(&ops)?;
        let zne_used = provider.zne_used();
        let k = starts.len() as f64;
        let mut sum = 0.0;
        let mut var = 0.0;
        for (&s, e) in starts.iter().zip(&est) {
            let value = sign * e.mean;
            sum += value;
            var += e.stderr * e.stderr;
            windows.push(StringOrderRow { parity: req.parity, l, s, value, stderr: e.stderr, zne_used });
        }
        means.push(sum / k);
        stderrs.push(var.sqrt() / k);
    }
    Ok(StringOrderResult { parity: req.parity, lengths: req.lengths.clone(), means, stderrs, windows })
}

/// `<Z_i> / 2` on each requested site.
pub fn magnetization_profile<P: ExpectationProvider + ?Sized>(provider: &P, sites: &[usize]) -> Result<Vec<Estimate>> {
    let n = provider.n_sites();
    if let Some(&s) = sites.iter().find(|&&s| s >= n) {
        bail!(OutOfRange, "site {} on a chain of {} sites", s, n);
    }
    let ops: Vec<PauliString> = sites.iter().map(|&s| PauliString::z_string(s, 1)).collect();
    Ok(provider
        .expect_all(&ops)?
        .into_iter()
        .map(|e| Estimate { mean: e.mean / 2.0, stderr: e.stderr / 2.0 })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagnetizationRow {
    pub site: usize,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub cut_bond: usize,
    pub l: usize,
    pub rank: usize,
    pub mean: f64,
    pub stddev: f64,
}
