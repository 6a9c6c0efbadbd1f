//! Shot-based estimation under a synthetic device noise model, with Pauli
//! twirling, twirled readout error extinction (TREX) and zero-noise
//! extrapolation.
//!
//! Two-qubit noise is a Pauli channel applied after every gate and simulated
//! by stochastic insertion on pure-state trajectories, dense for short chains
//! and MPS otherwise. Noise is amplified by scaling its probability, which
//! realizes fractional factors such as 1.05 exactly.

mod sampler;
mod trex;
mod validation;
mod zne;

use serde::{Deserialize, Serialize};

use crate::circuit::BrickworkCircuit;
use crate::error::{bail, Result};
use crate::linalg::TruncationPolicy;
use crate::mps::{Pauli, PauliString};
use crate::observables::{Estimate, ExpectationProvider};

pub use trex::{trex_calibrate, TrexCalibration};
pub use validation::{identity_circuit, identity_circuit_validation, QubitValidation, ValidationConfig};
pub use zne::{zne_extrapolate, ZneFit, ZneModel, DEFAULT_NOISE_FACTORS};

pub use sampler::{Backend, DENSE_TRAJECTORY_CAP};

pub use sampler::subseed;
use sampler::{read_bit, run_trajectories, Trajectory};

/// Per-qubit probabilities, either one value for every qubit or a list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FlipRates {
    Uniform(f64),
    PerQubit(Vec<f64>),
}

impl Default for FlipRates {
    fn default() -> Self {
        FlipRates::Uniform(0.0)
    }
}

impl FlipRates {
    pub fn get(&self, qubit: usize) -> f64 {
        match self {
            FlipRates::Uniform(p) => *p,
            FlipRates::PerQubit(v) => v.get(qubit).copied().unwrap_or(0.0),
        }
    }

    fn validate(&self, name: &str, n_qubits: usize) -> Result<()> {
        let values: &[f64] = match self {
            FlipRates::Uniform(p) => std::slice::from_ref(p),
            FlipRates::PerQubit(v) => {
                if v.len() != n_qubits {
                    bail!(InvalidArgument, "readout.{} lists {} qubits, circuit has {}", name, v.len(), n_qubits);
                }
                v
            }
        };
        if values.iter().any(|p| !(0.0..=1.0).contains(p)) {
            bail!(InvalidArgument, "readout.{} probabilities must lie in [0, 1]", name);
        }
        Ok(())
    }
}

/// Asymmetric readout flips: `p01 = P(read 1 | 0)`, `p10 = P(read 0 | 1)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutNoise {
    #[serde(default)]
    pub p01: FlipRates,
    #[serde(default)]
    pub p10: FlipRates,
}

impl ReadoutNoise {
    pub fn uniform(p01: f64, p10: f64) -> ReadoutNoise {
        ReadoutNoise { p01: FlipRates::Uniform(p01), p10: FlipRates::Uniform(p10) }
    }

    pub fn rates(&self, qubit: usize) -> (f64, f64) {
        (self.p01.get(qubit), self.p10.get(qubit))
    }

    /// Attenuation of `<Z_q>` once the flips are symmetrized by twirling.
    pub fn attenuation(&self, qubit: usize) -> f64 {
        let (a, b) = self.rates(qubit);
        1.0 - a - b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Probability of a uniformly random non-identity two-qubit Pauli after
    /// each gate.
    pub p2q: f64,
    #[serde(default)]
    pub readout: ReadoutNoise,
    /// Angle of a systematic `exp(-i theta ZZ / 2)` after each gate.
    #[serde(default)]
    pub coherent_zz: f64,
    /// Noise factor multiplying `p2q` and `coherent_zz`.
    #[serde(default = "unit")]
    pub amplification: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> NoiseModel {
        NoiseModel::depolarizing(0.0)
    }

    pub fn depolarizing(p2q: f64) -> NoiseModel {
        NoiseModel { p2q, readout: ReadoutNoise::default(), coherent_zz: 0.0, amplification: 1.0 }
    }

    pub fn with_readout(mut self, readout: ReadoutNoise) -> NoiseModel {
        self.readout = readout;
        self
    }

    /// The same device at noise factor `lambda`.
    pub fn amplified(&self, lambda: f64) -> NoiseModel {
        NoiseModel { amplification: lambda, ..self.clone() }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p2q) {
            bail!(InvalidArgument, "p2q = {} is not a probability", self.p2q);
        }
        if !(self.amplification >= 1.0) || !self.amplification.is_finite() {
            bail!(InvalidArgument, "amplification must be at least 1, got {}", self.amplification);
        }
        if self.p2q * self.amplification > 1.0 {
            bail!(InvalidArgument, "amplified error probability {} exceeds 1", self.p2q * self.amplification);
        }
        if !self.coherent_zz.is_finite() {
            bail!(InvalidArgument, "coherent_zz must be finite");
        }
        self.readout.p01.validate("p01", n_qubits)?;
        self.readout.p10.validate("p10", n_qubits)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShotConfig {
    pub shots: usize,
    /// Randomized circuit instances the shots are spread over.
    pub twirls: usize,
    pub pauli_twirling: bool,
    pub trex: bool,
    pub calibration_shots: usize,
    /// Exact expectation per noise trajectory instead of sampled bits.
    pub analytic: bool,
    pub seed: u64,
    /// Truncation of every trajectory; the default discards far less weight
    /// than shot noise resolves.
    pub policy: TruncationPolicy,
    pub backend: Backend,
}

impl Default for ShotConfig {
    fn default() -> Self {
        ShotConfig {
            shots: 10_000,
            twirls: 100,
            pauli_twirling: true,
            trex: true,
            calibration_shots: 10_000,
            analytic: false,
            seed: 0,
            policy: TruncationPolicy { chi_max: 256, svd_min: 1e-8, trunc_cut: 1e-10 },
            backend: Backend::Auto,
        }
    }
}

impl ShotConfig {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            bail!(InvalidArgument, "shots must be at least 1");
        }
        if self.twirls == 0 || self.twirls > self.shots {
            bail!(InvalidArgument, "twirls must lie in 1..={}, got {}", self.shots, self.twirls);
        }
        if self.trex && !self.analytic && self.calibration_shots == 0 {
            bail!(InvalidArgument, "TREX needs calibration shots");
        }
        self.policy.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShotResult {
    pub observable: PauliString,
    pub mean: f64,
    pub stderr: f64,
    pub shots: usize,
    pub twirls: usize,
}

impl ShotResult {
    pub fn estimate(&self) -> Estimate {
        Estimate { mean: self.mean, stderr: self.stderr }
    }
}

/// Noisy estimate of one Pauli string on `circuit(full)|0>`.
pub fn estimate(
    circuit: &BrickworkCircuit,
    full: &[f64],
    observable: &PauliString,
    noise: &NoiseModel,
    cfg: &ShotConfig,
) -> Result<ShotResult> {
    let mut r = estimate_many(circuit, full, std::slice::from_ref(observable), noise, cfg)?;
    Ok(r.remove(0))
}

/// Noisy estimates of several strings. Strings that agree on every shared
/// site are measured together from the same shots.
pub fn estimate_many(
    circuit: &BrickworkCircuit,
    full: &[f64],
    observables: &[PauliString],
    noise: &NoiseModel,
    cfg: &ShotConfig,
) -> Result<Vec<ShotResult>> {
    estimate_with_calibration(circuit, full, observables, noise, &noise.readout, cfg)
}

/// As [`estimate_many`], with TREX calibrated against `calibration` rather
/// than the device's current readout noise.
pub fn estimate_with_calibration(
    circuit: &BrickworkCircuit,
    full: &[f64],
    observables: &[PauliString],
    noise: &NoiseModel,
    calibration: &ReadoutNoise,
    cfg: &ShotConfig,
) -> Result<Vec<ShotResult>> {
    estimate_inner(circuit, full, observables, noise, calibration, cfg, cfg.seed)
}

/// `calibration_seed` fixes the TREX calibration shots independently of the
/// circuit shots, so runs at several noise factors can share one calibration.
fn estimate_inner(
    circuit: &BrickworkCircuit,
    full: &[f64],
    observables: &[PauliString],
    noise: &NoiseModel,
    calibration: &ReadoutNoise,
    cfg: &ShotConfig,
    calibration_seed: u64,
) -> Result<Vec<ShotResult>> {
    let n = circuit.n_qubits();
    noise.validate(n)?;
    cfg.validate()?;
    NoiseModel { readout: calibration.clone(), ..noise.clone() }.validate(n)?;
    for op in observables {
        if let Some((_, hi)) = op.support() {
            if hi >= n {
                bail!(OutOfRange, "observable {} acts beyond {} qubits", op, n);
            }
        }
    }
    let mut results: Vec<Option<ShotResult>> = vec![None; observables.len()];
    for (g, group) in measurement_groups(observables).iter().enumerate() {
        let seed = subseed(cfg.seed, g as u64);
        let ests = if cfg.analytic {
            analytic_group(circuit, full, observables, group, noise, calibration, cfg, seed)?
        } else {
            let cal_seed = subseed(calibration_seed, u64::MAX - g as u64);
            sampled_group(circuit, full, observables, group, noise, calibration, cfg, seed, cal_seed)?
        };
        for (&k, e) in group.members.iter().zip(ests) {
            results[k] = Some(ShotResult {
                observable: observables[k].clone(),
                mean: e.mean,
                stderr: e.stderr,
                shots: cfg.shots,
                twirls: cfg.twirls,
            });
        }
    }
    Ok(results.into_iter().map(|r| r.expect("every observable is grouped")).collect())
}

struct Group {
    basis: std::collections::BTreeMap<usize, Pauli>,
    members: Vec<usize>,
}

/// First-fit grouping of qubit-wise commuting strings.
fn measurement_groups(ops: &[PauliString]) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    for (k, op) in ops.iter().enumerate() {
        let fits = |g: &Group| op.ops().iter().all(|(s, p)| g.basis.get(s).is_none_or(|q| q == p));
        match groups.iter_mut().find(|g| fits(g)) {
            Some(g) => {
                g.basis.extend(op.ops().iter().map(|(s, p)| (*s, *p)));
                g.members.push(k);
            }
            None => groups.push(Group { basis: op.ops().clone(), members: vec![k] }),
        }
    }
    groups
}

/// Mean of per-shot values and its standard error. Shots of one twirl
/// instance share a random circuit, so the error is computed from the spread
/// of instance totals; with a single instance shots are treated as
/// independent.
struct Accumulator {
    sums: Vec<f64>,
    counts: Vec<usize>,
    sum_sq: f64,
}

impl Accumulator {
    fn new(instances: usize) -> Accumulator {
        Accumulator { sums: vec![0.0; instances], counts: vec![0; instances], sum_sq: 0.0 }
    }

    fn add(&mut self, instance: usize, value: f64, shots: usize) {
        self.sums[instance] += shots as f64 * value;
        self.counts[instance] += shots;
        self.sum_sq += shots as f64 * value * value;
    }

    fn finish(&self) -> (f64, f64) {
        let n: usize = self.counts.iter().sum();
        let nf = n as f64;
        let mean = self.sums.iter().sum::<f64>() / nf;
        let k = self.counts.iter().filter(|&&c| c > 0).count();
        if k >= 2 {
            let dev: f64 =
                self.sums.iter().zip(&self.counts).map(|(s, &c)| (s - c as f64 * mean).powi(2)).sum();
            let var = k as f64 / (k as f64 - 1.0) * dev / (nf * nf);
            return (mean, var.sqrt());
        }
        if n < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        (mean, (var / nf).sqrt())
    }
}

#[allow(clippy::too_many_arguments)]
fn sampled_group(
    circuit: &BrickworkCircuit,
    full: &[f64],
    ops: &[PauliString],
    group: &Group,
    noise: &NoiseModel,
    calibration: &ReadoutNoise,
    cfg: &ShotConfig,
    seed: u64,
    calibration_seed: u64,
) -> Result<Vec<Estimate>> {
    let meas: Vec<(usize, Pauli)> = group.basis.iter().map(|(s, p)| (*s, *p)).collect();
    let sites: Vec<usize> = meas.iter().map(|m| m.0).collect();
    let k = meas.len().max(1);
    let records: Vec<Trajectory<Vec<u8>>> = run_trajectories(circuit, full, noise, cfg, &sites, seed, |state, shots, rng| {
        let sampler = state.sampler(&meas)?;
        let mut bits = vec![0u8; shots * k];
        for row in bits.chunks_mut(k) {
            sampler.sample(rng, row);
            for (j, b) in row.iter_mut().enumerate().take(sites.len()) {
                let (p01, p10) = noise.readout.rates(sites[j]);
                *b = read_bit(*b, p01, p10, cfg.trex, rng);
            }
        }
        Ok(bits)
    })?;
    let cal = if cfg.trex {
        Some(trex_calibrate(calibration, &sites, cfg.calibration_shots, calibration_seed)?)
    } else {
        None
    };
    let mut out = Vec::with_capacity(group.members.len());
    for &m in &group.members {
        let op = &ops[m];
        let cols: Vec<usize> = op.ops().keys().map(|s| sites.binary_search(s).expect("site measured")).collect();
        let sign = f64::from(op.sign());
        let mut acc = Accumulator::new(cfg.twirls);
        for t in &records {
            for row in t.value.chunks(k) {
                let parity = cols.iter().fold(0u8, |a, &c| a ^ row[c]);
                acc.add(t.instance, if parity == 0 { sign } else { -sign }, 1);
            }
        }
        let (mean, stderr) = acc.finish();
        out.push(match &cal {
            Some(cal) => {
                let f = cal.factor(&op.ops().keys().copied().collect::<Vec<_>>())?;
                let value = mean / f.mean;
                let err = ((stderr / f.mean).powi(2) + (mean * f.stderr / (f.mean * f.mean)).powi(2)).sqrt();
                Estimate { mean: value, stderr: err }
            }
            None => Estimate { mean, stderr },
        });
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn analytic_group(
    circuit: &BrickworkCircuit,
    full: &[f64],
    ops: &[PauliString],
    group: &Group,
    noise: &NoiseModel,
    calibration: &ReadoutNoise,
    cfg: &ShotConfig,
    seed: u64,
) -> Result<Vec<Estimate>> {
    // readout enters as a per-qubit attenuation once flips are symmetric
    let mut scale = Vec::with_capacity(group.members.len());
    for &m in &group.members {
        let mut f = 1.0;
        for &q in ops[m].ops().keys() {
            let (p01, p10) = noise.readout.rates(q);
            if cfg.trex {
                let c = calibration.attenuation(q);
                if c <= 0.0 {
                    bail!(Numerical, "readout calibration of qubit {} has zero attenuation", q);
                }
                f *= noise.readout.attenuation(q) / c;
            } else if p01 == p10 {
                f *= 1.0 - 2.0 * p01;
            } else {
                bail!(InvalidArgument, "analytic estimates need TREX or symmetric readout noise");
            }
        }
        scale.push(f);
    }
    let members = &group.members;
    let sites: Vec<usize> = group.basis.keys().copied().collect();
    let traj = run_trajectories(circuit, full, noise, cfg, &sites, seed, |state, _, _| {
        members.iter().map(|&m| state.expect(&ops[m])).collect::<Result<Vec<f64>>>()
    })?;
    Ok((0..members.len())
        .map(|j| {
            let mut acc = Accumulator::new(cfg.twirls);
            for t in &traj {
                acc.add(t.instance, t.value[j] * scale[j], t.shots);
            }
            let (mean, stderr) = acc.finish();
            Estimate { mean, stderr }
        })
        .collect())
}

/// Zero-noise extrapolation settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZneSettings {
    pub factors: Vec<f64>,
    pub models: Vec<ZneModel>,
    /// Largest admissible `|extrapolated value|`; Pauli expectations are
    /// bounded by 1.
    pub bound: Option<f64>,
}

impl Default for ZneSettings {
    fn default() -> Self {
        ZneSettings { factors: DEFAULT_NOISE_FACTORS.to_vec(), models: ZneModel::ALL.to_vec(), bound: Some(1.0) }
    }
}

/// Runs the estimator at every noise factor and extrapolates each string.
/// One TREX calibration serves every factor.
pub fn zne_estimates(
    circuit: &BrickworkCircuit,
    full: &[f64],
    observables: &[PauliString],
    noise: &NoiseModel,
    calibration: &ReadoutNoise,
    cfg: &ShotConfig,
    zne: &ZneSettings,
) -> Result<Vec<ZneFit>> {
    let mut series = vec![Vec::with_capacity(zne.factors.len()); observables.len()];
    for (k, &lambda) in zne.factors.iter().enumerate() {
        let c = ShotConfig { seed: subseed(cfg.seed, 1_000 + k as u64), ..cfg.clone() };
        let r = estimate_inner(circuit, full, observables, &noise.amplified(lambda), calibration, &c, cfg.seed)?;
        for (s, e) in series.iter_mut().zip(r) {
            s.push((lambda, e.mean, e.stderr));
        }
    }
    series.iter().map(|s| zne_extrapolate(s, &zne.models, zne.bound)).collect()
}

/// Expectation values of a compiled circuit measured on the simulated device.
#[derive(Clone, Debug)]
pub struct NoisyProvider<'a> {
    pub circuit: &'a BrickworkCircuit,
    pub full: Vec<f64>,
    pub noise: NoiseModel,
    pub shots: ShotConfig,
    pub zne: Option<ZneSettings>,
}

impl ExpectationProvider for NoisyProvider<'_> {
    fn n_sites(&self) -> usize {
        self.circuit.n_qubits()
    }

    fn expect(&self, op: &PauliString) -> Result<Estimate> {
        Ok(self.expect_all(std::slice::from_ref(op))?.remove(0))
    }

    fn expect_all(&self, ops: &[PauliString]) -> Result<Vec<Estimate>> {
        match &self.zne {
            Some(z) => Ok(zne_estimates(self.circuit, &self.full, ops, &self.noise, &self.noise.readout, &self.shots, z)?
                .into_iter()
                .map(|f| Estimate { mean: f.extrapolated_value, stderr: f.extrapolated_stderr })
                .collect()),
            None => Ok(estimate_many(self.circuit, &self.full, ops, &self.noise, &self.shots)?
                .iter()
                .map(ShotResult::estimate)
                .collect()),
        }
    }

    fn zne_used(&self) -> bool {
        self.zne.is_some()
    }
}

#[cfg(test)]
mod tests;
