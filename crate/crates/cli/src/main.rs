use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use spt_core::circuit::{export_qasm, BrickworkCircuit};
use spt_core::lattice::CouplingPattern;
use spt_core::mps::Mps;
use spt_core::noisy::{ReadoutNoise, ValidationConfig};
use spt_core::observables::ExpectationProvider;
use spt_core::subseed;

use spt_cli::config::{InitChoice, PipelineConfig, SectorChoice, Stage};
use spt_cli::manifest::Manifest;
use spt_cli::pipeline::{measure, run_pipeline, run_stage, RunOptions};
use spt_cli::stages::{self, CutFilter, Source, BOOTSTRAP_STREAM, MEASURE_STREAM};

#[derive(Parser)]
#[command(name = "spt", version, about = "Prepare and certify SPT ground states on simulated hardware")]
struct Cli {
    /// Record stage wall times in the manifest (makes it non-reproducible).
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline config (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides the config.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct StateOrCircuit {
    /// MPS JSON to measure.
    #[arg(long, conflicts_with = "circuit", required_unless_present = "circuit")]
    state: Option<PathBuf>,
    /// Circuit JSON to measure, using the configured backend.
    #[arg(long)]
    circuit: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Ground state by two-site DMRG.
    Dmrg {
        #[command(flatten)]
        common: Common,
        /// Model file `{j0, j1, n_sites}`.
        #[arg(long, conflicts_with_all = ["j0", "j1", "n"])]
        model: Option<PathBuf>,
        #[arg(long)]
        j0: Option<f64>,
        #[arg(long)]
        j1: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Magnetization sector `sum Z / 2`; `free` disables conservation.
        #[arg(long)]
        sector: Option<String>,
    },
    /// Smallest-bond compression meeting a fidelity floor.
    Compress {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        fidelity_floor: Option<f64>,
        #[arg(long)]
        max_chi: Option<usize>,
    },
    /// Compile a state into a brickwork circuit, one run per depth.
    Compile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        target: PathBuf,
        /// Also report fidelity with this state.
        #[arg(long)]
        uncompressed: Option<PathBuf>,
        #[arg(long, num_args = 1..)]
        layers: Vec<f64>,
        #[arg(long, value_parser = parse_init)]
        init: Option<InitChoice>,
        #[arg(long)]
        max_iterations: Option<usize>,
        #[arg(long)]
        target_fidelity: Option<f64>,
    },
    /// Even and odd string order parameters.
    MeasureStringOrder {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: StateOrCircuit,
    },
    /// Entanglement spectrum of left-end segments by Pauli tomography.
    MeasureSpectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: StateOrCircuit,
        /// Largest segment length.
        #[arg(long)]
        l: Option<usize>,
        #[arg(long, value_enum, default_value_t = CutFilter::Both)]
        cut: CutFilter,
        /// Bootstrap resamples per segment.
        #[arg(long)]
        bootstrap: Option<usize>,
    },
    /// Magnetization profile and edge decay length.
    MeasureEdges {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        source: StateOrCircuit,
    },
    /// Identity-circuit check of the mitigation stack.
    ZneValidate {
        #[command(flatten)]
        common: Common,
        /// Circuit JSON whose gate layout is reused.
        #[arg(long)]
        skeleton: PathBuf,
        /// Readout noise assumed at calibration time (JSON); defaults to the
        /// configured device readout.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// OpenQASM 3 listing of a circuit.
    ExportQasm {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        circuit: PathBuf,
    },
    /// Every configured stage in order.
    Pipeline {
        #[command(flatten)]
        common: Common,
    },
}

fn parse_init(s: &str) -> Result<InitChoice, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown init `{}`; expected auto, identity, even or odd", s))
}

struct Session {
    cfg: PipelineConfig,
    out: PathBuf,
    manifest: Manifest,
    opts: RunOptions,
}

impl Session {
    fn new(common: &Common, opts: RunOptions) -> Result<Session> {
        let mut cfg = match &common.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = common.seed {
            cfg.seed = s;
        }
        if let Some(o) = &common.output {
            cfg.output_dir = o.clone();
        }
        let out = cfg.output_dir.clone();
        std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        let manifest = if out.join(spt_cli::manifest::MANIFEST_FILE).exists() {
            Manifest::load(&out)?
        } else {
            Manifest::default()
        };
        Ok(Session { cfg, out, manifest, opts })
    }

    fn stage<T>(&mut self, name: &str, body: impl FnOnce(&mut spt_cli::manifest::StageWriter, &PipelineConfig) -> Result<T>) -> Result<T> {
        let cfg = &self.cfg;
        run_stage(&self.out, &mut self.manifest, name, &self.out.clone(), self.opts, |w| body(w, cfg))
    }
}

fn read_mps(w: &mut spt_cli::manifest::StageWriter, path: &Path) -> Result<Mps> {
    Ok(Mps::from_json(&w.read_input_string(path)?)?)
}

fn read_circuit(w: &mut spt_cli::manifest::StageWriter, path: &Path) -> Result<(BrickworkCircuit, Vec<f64>)> {
    Ok(BrickworkCircuit::from_json(&w.read_input_string(path)?)?)
}

/// The model of a single-point config, if any.
fn config_model(cfg: &PipelineConfig) -> Result<Option<CouplingPattern>> {
    let pts = cfg.points();
    if pts.len() > 1 {
        bail!("config lists {} models; standalone commands take one", pts.len());
    }
    Ok(pts.first().copied())
}

fn measure_standalone(ctx: &mut Session, stage: Stage, source: &StateOrCircuit) -> Result<()> {
    ctx.stage(stage.name(), |w, cfg| {
        let stream = MEASURE_STREAM + stage as u64;
        match (&source.state, &source.circuit) {
            (Some(p), _) => {
                let psi = read_mps(w, p)?;
                measure(w, stage, &Source::State(&psi), cfg, cfg.seed, stream, "_state")
            }
            (None, Some(p)) => {
                let (c, full) = read_circuit(w, p)?;
                measure(w, stage, &Source::Circuit { circuit: &c, full: &full }, cfg, cfg.seed, stream, "_circuit")
            }
            (None, None) => bail!("give --state or --circuit"),
        }
    })
}

fn run(cli: Cli) -> Result<()> {
    let opts = RunOptions { timings: cli.timings };
    match cli.command {
        Command::Dmrg { common, model, j0, j1, n, sector } => {
            let mut ctx = Session::new(&common, opts)?;
            let from_file = match &model {
                Some(p) => {
                    let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                    let m: CouplingPattern = serde_json::from_str(&text).with_context(|| format!("model file {}", p.display()))?;
                    m.validate()?;
                    Some(m)
                }
                None => None,
            };
            let model = match (j0, j1, n) {
                _ if from_file.is_some() => from_file.unwrap(),
                (Some(j0), Some(j1), Some(n)) => CouplingPattern::new(j0, j1, n)?,
                (None, None, None) => config_model(&ctx.cfg)?.context("give --j0, --j1 and --n or a config with a model")?,
                _ => bail!("--j0, --j1 and --n go together"),
            };
            if let Some(s) = sector {
                ctx.cfg.sector = match s.as_str() {
                    "auto" => SectorChoice::Auto,
                    "free" => SectorChoice::Free,
                    v => SectorChoice::Fixed(v.parse().with_context(|| format!("--sector: `{}` is not auto, free or an integer", v))?),
                };
            }
            let dcfg = ctx.cfg.dmrg_for(&model);
            ctx.stage(Stage::Dmrg.name(), |w, _| stages::dmrg(w, &model, &dcfg).map(|_| ()))
        }
        Command::Compress { common, input, fidelity_floor, max_chi } => {
            let mut ctx = Session::new(&common, opts)?;
            if let Some(f) = fidelity_floor {
                ctx.cfg.compression.fidelity_floor = f;
            }
            if let Some(c) = max_chi {
                ctx.cfg.compression.max_chi = c;
            }
            ctx.cfg.validate()?;
            ctx.stage(Stage::Compress.name(), |w, cfg| {
                let psi = read_mps(w, &input)?;
                let model = config_model(cfg)?;
                stages::compress(w, &psi, &cfg.compression, model.as_ref()).map(|_| ())
            })
        }
        Command::Compile { common, target, uncompressed, layers, init, max_iterations, target_fidelity } => {
            let mut ctx = Session::new(&common, opts)?;
            if !layers.is_empty() {
                ctx.cfg.campaign.layers = layers;
            }
            if let Some(i) = init {
                ctx.cfg.campaign.init = i;
            }
            if let Some(m) = max_iterations {
                ctx.cfg.aqc.max_iterations = m;
            }
            if let Some(f) = target_fidelity {
                ctx.cfg.aqc.target_fidelity = f;
            }
            ctx.cfg.validate()?;
            ctx.stage(Stage::Compile.name(), |w, cfg| {
                let t = read_mps(w, &target)?;
                let u = uncompressed.as_deref().map(|p| read_mps(w, p)).transpose()?;
                let model = config_model(cfg)?;
                stages::compile(w, &t, u.as_ref(), model.as_ref(), &cfg.campaign, &cfg.aqc, cfg.seed).map(|_| ())
            })
        }
        Command::MeasureStringOrder { common, source } => {
            let mut ctx = Session::new(&common, opts)?;
            measure_standalone(&mut ctx, Stage::MeasureStringOrder, &source)
        }
        Command::MeasureSpectrum { common, source, l, cut, bootstrap } => {
            let mut ctx = Session::new(&common, opts)?;
            if let Some(l) = l {
                ctx.cfg.measurement.spectrum.max_l = l;
            }
            if let Some(b) = bootstrap {
                ctx.cfg.measurement.spectrum.bootstrap = b;
            }
            ctx.cfg.validate()?;
            if cut == CutFilter::Both {
                return measure_standalone(&mut ctx, Stage::MeasureSpectrum, &source);
            }
            ctx.stage(Stage::MeasureSpectrum.name(), |w, cfg| {
                let m = &cfg.measurement;
                let seed = subseed(cfg.seed, MEASURE_STREAM + Stage::MeasureSpectrum as u64);
                let boot = subseed(cfg.seed, BOOTSTRAP_STREAM);
                let body = |w: &mut spt_cli::manifest::StageWriter, src: &Source, suffix: &str| {
                    stages::with_provider(src, m, &cfg.aqc.report_policy, seed, false, |p: &dyn ExpectationProvider| {
                        stages::measure_spectrum(w, p, &m.spectrum, cut, boot, suffix).map(|_| ())
                    })
                };
                match (&source.state, &source.circuit) {
                    (Some(p), _) => {
                        let psi = read_mps(w, p)?;
                        body(w, &Source::State(&psi), "_state")
                    }
                    (None, Some(p)) => {
                        let (c, full) = read_circuit(w, p)?;
                        body(w, &Source::Circuit { circuit: &c, full: &full }, "_circuit")
                    }
                    (None, None) => bail!("give --state or --circuit"),
                }
            })
        }
        Command::MeasureEdges { common, source } => {
            let mut ctx = Session::new(&common, opts)?;
            measure_standalone(&mut ctx, Stage::MeasureEdges, &source)
        }
        Command::ZneValidate { common, skeleton, calibration, threshold } => {
            let mut ctx = Session::new(&common, opts)?;
            ctx.stage("zne-validate", |w, cfg| {
                let (c, _) = read_circuit(w, &skeleton)?;
                let believed: ReadoutNoise = match &calibration {
                    Some(p) => serde_json::from_str(&w.read_input_string(p)?).context("calibration readout")?,
                    None => cfg.measurement.noise.readout.clone(),
                };
                let mut v = ValidationConfig::default();
                if let Some(z) = &cfg.measurement.zne {
                    v.zne.factors = z.factors.clone();
                }
                if let Some(t) = threshold {
                    v.threshold = t;
                }
                stages::zne_validate(w, &c, &cfg.measurement, &believed, &v, subseed(cfg.seed, MEASURE_STREAM + 10))
                    .map(|_| ())
            })
        }
        Command::ExportQasm { common, circuit } => {
            let mut ctx = Session::new(&common, opts)?;
            ctx.stage("export-qasm", |w, _| {
                let (c, full) = read_circuit(w, &circuit)?;
                w.write(stages::QASM_FILE, export_qasm(&c, &full)?.as_bytes())?;
                Ok(())
            })
        }
        Command::Pipeline { common } => {
            let ctx = Session::new(&common, opts)?;
            run_pipeline(&ctx.cfg, &ctx.out, opts).map(|_| ())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {:#}", e);
        std::process::exit(1);
    }
}
