//! Pipeline stages. Each takes in-memory inputs, writes its artifacts
//! through a [`StageWriter`] and returns what later stages need.

use anyhow::{anyhow, bail, Result};
use serde::{Deserialize, Serialize};
use spt_core::aqc::{optimize, AqcConfig, AqcResult};
use spt_core::circuit::{build_brickwork, export_qasm, initial_parameters, BrickworkCircuit, CircuitMetrics};
use spt_core::dmrg::{default_initial_state, run_dmrg, DmrgConfig};
use spt_core::lattice::{build_hamiltonian_mpo, CouplingPattern, PhaseLabel};
use spt_core::linalg::TruncationPolicy;
use spt_core::mps::{compress_to_fidelity, Mps};
use spt_core::noisy::{identity_circuit_validation, NoisyProvider, ReadoutNoise, ValidationConfig, ZneModel, ZneSettings};
use spt_core::observables::{
    bootstrap_spectrum, fit_edge_decay, magnetization_profile, string_order, tomography_expectations, EdgeFit,
    ExpectationProvider, MagnetizationRow, SpectrumRow, StringOrderResult, StringParity,
};
use spt_core::subseed;

use crate::config::{
    CampaignConfig, CircuitBackend, CompressionConfig, EdgeSettings, MeasurementConfig, SpectrumSettings,
    StringOrderSettings,
};
use crate::manifest::StageWriter;
use crate::tables::{write_table, ValidationRow};

pub const GROUND_STATE_FILE: &str = "ground_state.mps.json";
pub const COMPRESSED_FILE: &str = "compressed.mps.json";
pub const CIRCUIT_FILE: &str = "circuit.json";
pub const QASM_FILE: &str = "circuit.qasm";

/// Seed streams derived from the master seed.
pub const CAMPAIGN_STREAM: u64 = 100;
pub const MEASURE_STREAM: u64 = 200;
pub const BOOTSTRAP_STREAM: u64 = 300;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DmrgSummary {
    pub j0: f64,
    pub j1: f64,
    pub n_sites: usize,
    pub phase: PhaseLabel,
    pub target_sector: Option<i32>,
    /// Achieved `sum_i <Z_i> / 2`.
    pub magnetization: f64,
    pub energy: f64,
    pub max_chi: usize,
    pub bond_dims: Vec<usize>,
    pub sweeps_used: usize,
    pub converged: bool,
    pub truncation_error: f64,
    pub energy_history: Vec<f64>,
}

pub fn dmrg(w: &mut StageWriter, model: &CouplingPattern, cfg: &DmrgConfig) -> Result<Mps> {
    let mpo = build_hamiltonian_mpo(model)?;
    let r = run_dmrg(&mpo, &default_initial_state(model)?, cfg)?;
    w.write(GROUND_STATE_FILE, r.state.to_json()?.as_bytes())?;
    let summary = DmrgSummary {
        j0: model.j0,
        j1: model.j1,
        n_sites: model.n_sites,
        phase: model.phase(),
        target_sector: cfg.target_sector,
        energy: r.energy,
        max_chi: r.max_chi,
        bond_dims: r.state.bond_dims(),
        sweeps_used: r.sweeps_used,
        converged: r.converged,
        truncation_error: r.truncation_error,
        magnetization: r.magnetization,
        energy_history: r.energy_history.clone(),
    };
    w.write_json("dmrg.json", &summary)?;
    w.metric("energy", r.energy);
    w.metric("max_chi", r.max_chi as f64);
    Ok(r.state)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompressionSummary {
    pub chi: usize,
    pub bond_dims: Vec<usize>,
    pub fidelity: f64,
    /// Energy of the compressed state, when the model is known.
    pub energy: Option<f64>,
}

pub fn compress(w: &mut StageWriter, state: &Mps, cfg: &CompressionConfig, model: Option<&CouplingPattern>) -> Result<Mps> {
    let (small, fidelity) = compress_to_fidelity(state, cfg.fidelity_floor, cfg.max_chi, cfg.max_sweeps)?;
    let energy = match model {
        Some(m) => {
            if m.n_sites != small.n_sites() {
                bail!("model has {} sites, state {}", m.n_sites, small.n_sites());
            }
            Some(build_hamiltonian_mpo(m)?.expectation(&small)?)
        }
        None => None,
    };
    w.write(COMPRESSED_FILE, small.to_json()?.as_bytes())?;
    let summary = CompressionSummary { chi: small.max_bond_dim(), bond_dims: small.bond_dims(), fidelity, energy };
    w.write_json("compression.json", &summary)?;
    w.metric("chi", summary.chi as f64);
    w.metric("fidelity", fidelity);
    if let Some(e) = energy {
        w.metric("energy", e);
    }
    Ok(small)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompileRun {
    pub layers: f64,
    pub init: Option<PhaseLabel>,
    pub metrics: CircuitMetrics,
    pub result: AqcResult,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompileSummary {
    pub selected: CompileRun,
    /// `(layers, fidelity_vs_compressed)` of every run in the campaign.
    pub campaign: Vec<(f64, f64)>,
}

/// Index of the best run: highest fidelity, then lowest CNOT depth.
pub fn select_run(runs: &[CompileRun]) -> usize {
    let mut best = 0;
    for (k, r) in runs.iter().enumerate().skip(1) {
        let b = &runs[best];
        let (f, fb) = (r.result.fidelity_vs_compressed, b.result.fidelity_vs_compressed);
        if f > fb || (f == fb && r.metrics.cnot_depth < b.metrics.cnot_depth) {
            best = k;
        }
    }
    best
}

fn layer_label(l: f64) -> String {
    format!("L{}", l)
}

/// Compiles `target` at every campaign depth concurrently and keeps the best
/// run. Run `k` uses the seed derived from `(seed, CAMPAIGN_STREAM + k)`.
pub fn compile(
    w: &mut StageWriter,
    target: &Mps,
    uncompressed: Option<&Mps>,
    model: Option<&CouplingPattern>,
    campaign: &CampaignConfig,
    aqc: &AqcConfig,
    seed: u64,
) -> Result<(BrickworkCircuit, Vec<f64>)> {
    let n = target.n_sites();
    let init = campaign.init.resolve(model);
    let attempts: Vec<Result<(BrickworkCircuit, CompileRun)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = campaign
            .layers
            .iter()
            .enumerate()
            .map(|(k, &layers)| {
                let cfg = AqcConfig { seed: subseed(seed, CAMPAIGN_STREAM + k as u64), ..aqc.clone() };
                scope.spawn(move || -> Result<(BrickworkCircuit, CompileRun)> {
                    let circuit = build_brickwork(n, layers, init)?;
                    let start = match init {
                        Some(phase) => initial_parameters(&circuit, phase)?,
                        None => vec![0.0; circuit.parameter_count()],
                    };
                    let result = optimize(&circuit, &start, target, uncompressed, &cfg)?;
                    let metrics = circuit.metrics();
                    Ok((circuit, CompileRun { layers, init, metrics, result }))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or_else(|_| Err(anyhow!("compile worker panicked")))).collect()
    });
    let mut circuits = Vec::new();
    let mut runs = Vec::new();
    for (a, &layers) in attempts.into_iter().zip(&campaign.layers) {
        let (c, r) = a.map_err(|e| anyhow!("compile at L = {}: {}", layers, e))?;
        w.write_json(&format!("campaign/{}.json", layer_label(layers)), &r)?;
        circuits.push(c);
        runs.push(r);
    }
    let best = select_run(&runs);
    let circuit = circuits.swap_remove(best);
    let run = runs[best].clone();
    let full = circuit.expand(&run.result.params)?;
    w.write(CIRCUIT_FILE, circuit.to_json(&full)?.as_bytes())?;
    w.write(QASM_FILE, export_qasm(&circuit, &full)?.as_bytes())?;
    let summary = CompileSummary {
        campaign: runs.iter().map(|r| (r.layers, r.result.fidelity_vs_compressed)).collect(),
        selected: run,
    };
    w.write_json("aqc_result.json", &summary)?;
    let s = &summary.selected;
    w.metric("layers", s.layers);
    w.metric("fidelity_vs_compressed", s.result.fidelity_vs_compressed);
    if let Some(f) = s.result.fidelity_vs_uncompressed {
        w.metric("fidelity_vs_uncompressed", f);
    }
    w.metric("cnot_depth", s.metrics.cnot_depth as f64);
    w.metric("cnot_count", s.metrics.cnot_count as f64);
    Ok((circuit, full))
}

/// What observables are measured on.
pub enum Source<'a> {
    State(&'a Mps),
    Circuit { circuit: &'a BrickworkCircuit, full: &'a [f64] },
}

/// Runs `f` against the provider for `source`: the state itself, the
/// noiseless circuit simulated with `policy`, or the noisy device.
pub fn with_provider<R>(
    source: &Source,
    m: &MeasurementConfig,
    policy: &TruncationPolicy,
    seed: u64,
    linear_zne: bool,
    f: impl FnOnce(&dyn ExpectationProvider) -> Result<R>,
) -> Result<R> {
    match source {
        Source::State(psi) => f(*psi),
        Source::Circuit { circuit, full } => match m.circuit_backend {
            CircuitBackend::Exact => {
                let (psi, _) = circuit.prepare(full, policy)?;
                f(&psi)
            }
            CircuitBackend::Noisy => {
                let zne = m.zne.clone().map(|z| if linear_zne { ZneSettings { models: vec![ZneModel::Linear], ..z } } else { z });
                let provider = NoisyProvider {
                    circuit,
                    full: full.to_vec(),
                    noise: m.noise.clone(),
                    shots: spt_core::noisy::ShotConfig { seed, ..m.shots.clone() },
                    zne,
                };
                f(&provider)
            }
        },
    }
}

pub fn measure_string_order(
    w: &mut StageWriter,
    provider: &dyn ExpectationProvider,
    settings: &StringOrderSettings,
    parities: &[StringParity],
    suffix: &str,
) -> Result<Vec<StringOrderResult>> {
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for &p in parities {
        let r = string_order(provider, &settings.request(p))?;
        rows.extend(r.windows.iter().cloned());
        if let (Some(l), Some(v)) = (r.lengths.last(), r.means.last()) {
            let tag = match p {
                StringParity::Even => "even",
                StringParity::Odd => "odd",
            };
            w.metric(&format!("{}_l{}{}", tag, l, suffix), *v);
        }
        results.push(r);
    }
    write_table(w, &format!("string_order{}", suffix), "string_order", &rows)?;
    w.write_json(&format!("string_order_summary{}.json", suffix), &results)?;
    Ok(results)
}

/// Which bonds the segment boundary may cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CutFilter {
    J0,
    J1,
    Both,
}

impl CutFilter {
    /// A segment of `l` sites from the left end cuts bond `l - 1`, which
    /// carries `J0` when its index is even.
    pub fn admits(self, l: usize) -> bool {
        let j0 = (l - 1) % 2 == 0;
        match self {
            CutFilter::J0 => j0,
            CutFilter::J1 => !j0,
            CutFilter::Both => true,
        }
    }
}

pub fn measure_spectrum(
    w: &mut StageWriter,
    provider: &dyn ExpectationProvider,
    settings: &SpectrumSettings,
    cut: CutFilter,
    seed: u64,
    suffix: &str,
) -> Result<Vec<SpectrumRow>> {
    let mut rows = Vec::new();
    for l in (1..=settings.max_l).filter(|&l| cut.admits(l)) {
        let sites: Vec<usize> = (0..l).collect();
        let (means, errs) = tomography_expectations(provider, &sites, settings.tomography_cap)?;
        let b = bootstrap_spectrum(&means, &errs, settings.bootstrap, subseed(seed, l as u64))?;
        w.metric(&format!("gap_l{}{}", l, suffix), b.direct[0] - b.direct.get(1).copied().unwrap_or(0.0));
        for (k, (mean, sd)) in b.mean_eigenvalues.iter().zip(&b.stddevs).enumerate() {
            rows.push(SpectrumRow { cut_bond: l - 1, l, rank: k + 1, mean: *mean, stddev: *sd });
        }
    }
    if rows.is_empty() {
        bail!("no segment of at most {} sites matches the {:?} cut", settings.max_l, cut);
    }
    write_table(w, &format!("spectrum{}", suffix), "spectrum", &rows)?;
    Ok(rows)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeReport {
    pub n_cells: usize,
    pub fit: Option<EdgeFit>,
    pub error: Option<String>,
}

pub fn measure_edges(
    w: &mut StageWriter,
    provider: &dyn ExpectationProvider,
    settings: &EdgeSettings,
    suffix: &str,
) -> Result<EdgeReport> {
    let n = provider.n_sites();
    let profile = magnetization_profile(provider, &(0..n).collect::<Vec<_>>())?;
    let rows: Vec<MagnetizationRow> =
        profile.iter().enumerate().map(|(site, e)| MagnetizationRow { site, value: e.mean, stderr: e.stderr }).collect();
    write_table(w, &format!("magnetization{}", suffix), "magnetization", &rows)?;
    let report = match fit_edge_decay(&profile, settings.n_cells) {
        Ok(f) => {
            w.metric(&format!("xi{}", suffix), f.xi);
            w.metric(&format!("xi_stderr{}", suffix), f.xi_stderr);
            EdgeReport { n_cells: settings.n_cells, fit: Some(f), error: None }
        }
        Err(e) => EdgeReport { n_cells: settings.n_cells, fit: None, error: Some(e.to_string()) },
    };
    w.write_json(&format!("edge_fit{}.json", suffix), &report)?;
    Ok(report)
}

pub fn zne_validate(
    w: &mut StageWriter,
    skeleton: &BrickworkCircuit,
    m: &MeasurementConfig,
    calibration: &ReadoutNoise,
    cfg: &ValidationConfig,
    seed: u64,
) -> Result<Vec<ValidationRow>> {
    let shots = spt_core::noisy::ShotConfig { seed, ..m.shots.clone() };
    let v = identity_circuit_validation(skeleton, &m.noise, calibration, &shots, cfg)?;
    let rows: Vec<ValidationRow> = v
        .iter()
        .map(|q| ValidationRow {
            qubit: q.qubit,
            value: q.fit.extrapolated_value,
            stderr: q.fit.extrapolated_stderr,
            deviation: q.deviation,
            flagged: q.flagged,
            model: format!("{:?}", q.fit.model).to_lowercase(),
            fit_residual: q.fit.fit_residual,
        })
        .collect();
    write_table(w, "zne_validation", "zne_validation", &rows)?;
    w.write_json("zne_validation_fits.json", &v)?;
    w.metric("flagged", rows.iter().filter(|r| r.flagged).count() as f64);
    Ok(rows)
}
