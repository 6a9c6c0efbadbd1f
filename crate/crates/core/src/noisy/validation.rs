use serde::{Deserialize, Serialize};

use super::{zne_estimates, NoiseModel, ReadoutNoise, ShotConfig, ZneFit, ZneModel, ZneSettings};
use crate::circuit::BrickworkCircuit;
use crate::error::{bail, Result};
use crate::mps::PauliString;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    /// Single-qubit `Z` runs default to linear extrapolation.
    pub zne: ZneSettings,
    /// Largest tolerated `|<Z_i> - 1|` after extrapolation.
    pub threshold: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { zne: ZneSettings { models: vec![ZneModel::Linear], ..ZneSettings::default() }, threshold: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitValidation {
    pub qubit: usize,
    pub fit: ZneFit,
    pub deviation: f64,
    pub flagged: bool,
}

/// The two-qubit gate layout of `skeleton` with every gate set to the
/// identity, so the noiseless circuit leaves `|0...0>` unchanged while the
/// noise model still acts after each gate.
pub fn identity_circuit(skeleton: &BrickworkCircuit) -> Result<(BrickworkCircuit, Vec<f64>)> {
    let c = BrickworkCircuit::from_layers(skeleton.n_qubits(), skeleton.layers().to_vec(), None)?;
    let full = vec![0.0; c.full_param_count()];
    Ok((c, full))
}

/// Runs the identity version of `skeleton` through the full mitigation stack
/// and flags qubits whose extrapolated `<Z_i>` misses 1 by more than the
/// threshold. TREX is calibrated against `calibration`, the readout noise
/// believed at calibration time; a device that drifted away from it shows
/// up here.
pub fn identity_circuit_validation(
    skeleton: &BrickworkCircuit,
    device: &NoiseModel,
    calibration: &ReadoutNoise,
    shots: &ShotConfig,
    cfg: &ValidationConfig,
) -> Result<Vec<QubitValidation>> {
    if !(cfg.threshold > 0.0) {
        bail!(InvalidArgument, "validation threshold must be positive");
    }
    let (c, full) = identity_circuit(skeleton)?;
    let ops: Vec<PauliString> = (0..c.n_qubits()).map(|q| PauliString::z_string(q, 1)).collect();
    let fits = zne_estimates(&c, &full, &ops, device, calibration, shots, &cfg.zne)?;
    Ok(fits
        .into_iter()
        .enumerate()
        .map(|(qubit, fit)| {
            let deviation = (fit.extrapolated_value - 1.0).abs();
            QubitValidation { qubit, deviation, flagged: deviation > cfg.threshold, fit }
        })
        .collect())
}
