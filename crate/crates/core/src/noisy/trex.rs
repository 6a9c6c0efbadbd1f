use serde::{Deserialize, Serialize};

use super::sampler::{read_bit, stream_rng};
use super::ReadoutNoise;
use crate::error::{bail, Result};
use crate::observables::Estimate;

/// Twirled readout records of `|0...0>` used to rescale diagonal observables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrexCalibration {
    pub qubits: Vec<usize>,
    pub shots: usize,
    /// `shots x qubits` recorded bits, row-major.
    bits: Vec<u8>,
}

/// Measures `|0...0>` on `qubits` with random pre-measurement flips that are
/// undone classically, so every Z-string is attenuated by the product of its
/// symmetrized single-qubit factors.
pub fn trex_calibrate(readout: &ReadoutNoise, qubits: &[usize], shots: usize, seed: u64) -> Result<TrexCalibration> {
    if shots == 0 {
        bail!(InvalidArgument, "calibration needs at least one shot");
    }
    let mut rng = stream_rng(seed, 0);
    let mut bits = vec![0u8; shots * qubits.len()];
    for row in bits.chunks_mut(qubits.len().max(1)) {
        for (b, &q) in row.iter_mut().zip(qubits) {
            let (p01, p10) = readout.rates(q);
            *b = read_bit(0, p01, p10, true, &mut rng);
        }
    }
    Ok(TrexCalibration { qubits: qubits.to_vec(), shots, bits })
}

impl TrexCalibration {
    /// Attenuation of the Z-string on `sites`.
    pub fn factor(&self, sites: &[usize]) -> Result<Estimate> {
        let mut cols = Vec::with_capacity(sites.len());
        for s in sites {
            match self.qubits.iter().position(|q| q == s) {
                Some(c) => cols.push(c),
                None => bail!(InvalidArgument, "qubit {} was not calibrated", s),
            }
        }
        let k = self.qubits.len().max(1);
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for row in self.bits.chunks(k).take(self.shots) {
            let v = if cols.iter().fold(0u8, |a, &c| a ^ row[c]) == 0 { 1.0 } else { -1.0 };
            sum += v;
            sum_sq += v * v;
        }
        let n = self.shots as f64;
        let mean = sum / n;
        if mean <= 0.0 {
            bail!(Numerical, "readout attenuation {} on {:?} cannot be inverted", mean, sites);
        }
        let var = if self.shots > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        Ok(Estimate { mean, stderr: (var / n).sqrt() })
    }
}
