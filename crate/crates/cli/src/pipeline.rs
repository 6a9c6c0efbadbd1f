//! Runs configured stages in order and keeps the manifest current.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, Result};
use spt_core::circuit::BrickworkCircuit;
use spt_core::lattice::CouplingPattern;
use spt_core::mps::Mps;
use spt_core::observables::{ExpectationProvider, StringParity};
use spt_core::subseed;

use crate::config::{PipelineConfig, Stage};
use crate::manifest::{Artifact, Manifest, StageFailure, StageRecord, StageWriter};
use crate::stages::{self, CutFilter, Source, BOOTSTRAP_STREAM, MEASURE_STREAM};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Record wall times in the manifest.
    pub timings: bool,
}

/// Replaces the record with the same name or appends it.
pub fn merge_record(m: &mut Manifest, record: StageRecord) {
    match m.stages.iter_mut().find(|s| s.name == record.name) {
        Some(slot) => *slot = record,
        None => m.stages.push(record),
    }
}

/// Runs one stage body and records it, or the failure, in `manifest`,
/// which is rewritten to `root` either way.
pub fn run_stage<T>(
    root: &Path,
    manifest: &mut Manifest,
    name: &str,
    dir: &Path,
    opts: RunOptions,
    body: impl FnOnce(&mut StageWriter) -> Result<T>,
) -> Result<T> {
    let mut w = StageWriter::new(root, name);
    w.set_dir(dir);
    let start = Instant::now();
    log::info!("stage {}", name);
    match body(&mut w) {
        Ok(v) => {
            let wall = opts.timings.then(|| start.elapsed().as_secs_f64());
            merge_record(manifest, w.finish(wall));
            manifest.failure = None;
            manifest.write(root)?;
            Ok(v)
        }
        Err(e) => {
            manifest.failure = Some(StageFailure { stage: name.to_string(), message: format!("{:#}", e) });
            manifest.write(root)?;
            Err(e.context(format!("stage {} failed", name)))
        }
    }
}

/// Outputs of one phase point carried between stages.
#[derive(Default)]
struct Products {
    ground: Option<(Mps, Artifact)>,
    compressed: Option<(Mps, Artifact)>,
    circuit: Option<(BrickworkCircuit, Vec<f64>, Artifact)>,
}

fn last_output(w: &StageWriter, rel: &str) -> Option<Artifact> {
    w.outputs().iter().find(|a| a.path.ends_with(rel)).cloned()
}

/// Runs every configured stage for every phase point under `out`. Several
/// points go to `point<k>/` subdirectories with stage names prefixed alike.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path, opts: RunOptions) -> Result<Manifest> {
    cfg.validate()?;
    let points = cfg.points();
    if points.is_empty() {
        return Err(anyhow!("config field `model`: the pipeline needs a model or models"));
    }
    std::fs::create_dir_all(out)?;
    let mut manifest = Manifest::default();
    let mut stages = cfg.stages.clone();
    stages.sort();
    for (k, model) in points.iter().enumerate() {
        let prefix = if points.len() > 1 { format!("point{}/", k) } else { String::new() };
        let dir = out.join(&prefix);
        let seed = if points.len() > 1 { subseed(cfg.seed, k as u64) } else { cfg.seed };
        run_point(cfg, model, out, &dir, &prefix, &stages, seed, &mut manifest, opts)?;
    }
    Ok(manifest)
}

#[allow(clippy::too_many_arguments)]
fn run_point(
    cfg: &PipelineConfig,
    model: &CouplingPattern,
    root: &Path,
    dir: &Path,
    prefix: &str,
    stages: &[Stage],
    seed: u64,
    manifest: &mut Manifest,
    opts: RunOptions,
) -> Result<()> {
    let mut p = Products::default();
    for &stage in stages {
        let name = format!("{}{}", prefix, stage.name());
        match stage {
            Stage::Dmrg => {
                let dcfg = cfg.dmrg_for(model);
                p.ground = Some(run_stage(root, manifest, &name, dir, opts, |w| {
                    let psi = stages::dmrg(w, model, &dcfg)?;
                    Ok((psi, last_output(w, stages::GROUND_STATE_FILE).expect("ground state written")))
                })?);
            }
            Stage::Compress => {
                let (ground, art) = p.ground.as_ref().ok_or_else(|| missing(&name, "dmrg"))?;
                p.compressed = Some(run_stage(root, manifest, &name, dir, opts, |w| {
                    w.note_input(art);
                    let small = stages::compress(w, ground, &cfg.compression, Some(model))?;
                    Ok((small, last_output(w, stages::COMPRESSED_FILE).expect("compressed state written")))
                })?);
            }
            Stage::Compile => {
                let (target, art) = p
                    .compressed
                    .as_ref()
                    .or(p.ground.as_ref())
                    .ok_or_else(|| missing(&name, "dmrg"))?;
                let uncompressed = p.compressed.as_ref().and(p.ground.as_ref());
                p.circuit = Some(run_stage(root, manifest, &name, dir, opts, |w| {
                    w.note_input(art);
                    if let Some((_, a)) = uncompressed {
                        w.note_input(a);
                    }
                    let (c, full) =
                        stages::compile(w, target, uncompressed.map(|u| &u.0), Some(model), &cfg.campaign, &cfg.aqc, seed)?;
                    Ok((c, full, last_output(w, stages::CIRCUIT_FILE).expect("circuit written")))
                })?);
            }
            Stage::MeasureStringOrder | Stage::MeasureSpectrum | Stage::MeasureEdges => {
                let stream = MEASURE_STREAM + stage as u64;
                run_stage(root, manifest, &name, dir, opts, |w| {
                    let mut any = false;
                    if let Some((psi, a)) = &p.ground {
                        w.note_input(a);
                        measure(w, stage, &Source::State(psi), cfg, seed, stream, "_dmrg")?;
                        any = true;
                    }
                    if let Some((c, full, a)) = &p.circuit {
                        w.note_input(a);
                        measure(w, stage, &Source::Circuit { circuit: c, full }, cfg, seed, stream, "_circuit")?;
                        any = true;
                    }
                    if !any {
                        return Err(missing(&name, "dmrg or compile"));
                    }
                    Ok(())
                })?;
            }
        }
    }
    Ok(())
}

fn missing(stage: &str, needs: &str) -> anyhow::Error {
    anyhow!("stage {} needs the output of {}", stage, needs)
}

/// One measurement stage on one source. `suffix` tags the table names.
pub fn measure(
    w: &mut StageWriter,
    stage: Stage,
    source: &Source,
    cfg: &PipelineConfig,
    seed: u64,
    stream: u64,
    suffix: &str,
) -> Result<()> {
    let m = &cfg.measurement;
    let policy = cfg.aqc.report_policy;
    let mseed = subseed(seed, stream);
    let linear = stage == Stage::MeasureEdges;
    stages::with_provider(source, m, &policy, mseed, linear, |prov: &dyn ExpectationProvider| {
        match stage {
            Stage::MeasureStringOrder => {
                stages::measure_string_order(w, prov, &m.string_order, &[StringParity::Even, StringParity::Odd], suffix)
                    .map(|_| ())
            }
            Stage::MeasureSpectrum => {
                stages::measure_spectrum(w, prov, &m.spectrum, CutFilter::Both, subseed(seed, BOOTSTRAP_STREAM), suffix)
                    .map(|_| ())
            }
            Stage::MeasureEdges => stages::measure_edges(w, prov, &m.edges, suffix).map(|_| ()),
            _ => unreachable!("not a measurement stage"),
        }
    })
}
