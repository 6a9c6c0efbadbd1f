//! Pipeline configuration and its JSON schema.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use spt_core::aqc::AqcConfig;
use spt_core::dmrg::{default_sector, DmrgConfig};
use spt_core::lattice::{CouplingPattern, PhaseLabel};
use spt_core::noisy::{NoiseModel, ShotConfig, ZneSettings};
use spt_core::observables::{StringOrderRequest, StringParity, DEFAULT_TOMOGRAPHY_CAP};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "config_version")]
    pub version: u32,
    /// One phase point; mutually exclusive with `models`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<CouplingPattern>,
    /// Several phase points, each run in its own subdirectory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub models: Option<Vec<CouplingPattern>>,
    #[serde(default)]
    pub sector: SectorChoice,
    #[serde(default)]
    pub dmrg: DmrgConfig,
    #[serde(default)]
    pub compression: CompressionConfig,
    #[serde(default)]
    pub aqc: AqcConfig,
    #[serde(default)]
    pub campaign: CampaignConfig,
    #[serde(default)]
    pub measurement: MeasurementConfig,
    #[serde(default = "Stage::all")]
    pub stages: Vec<Stage>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn config_version() -> u32 {
    CONFIG_VERSION
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("spt-output")
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            version: CONFIG_VERSION,
            model: None,
            models: None,
            sector: SectorChoice::default(),
            dmrg: DmrgConfig::default(),
            compression: CompressionConfig::default(),
            aqc: AqcConfig::default(),
            campaign: CampaignConfig::default(),
            measurement: MeasurementConfig::default(),
            stages: Stage::all(),
            output_dir: default_output_dir(),
            seed: 0,
        }
    }
}

/// Magnetization sector for DMRG when `dmrg.target_sector` is unset.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SectorChoice {
    /// `+1` in the odd phase, `0` in the even phase, free otherwise.
    #[default]
    Auto,
    Free,
    Fixed(i32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompressionConfig {
    pub fidelity_floor: f64,
    pub max_chi: usize,
    pub max_sweeps: usize,
}

impl Default for CompressionConfig {
    fn default() -> Self {
        CompressionConfig { fidelity_floor: 0.999, max_chi: 64, max_sweeps: 50 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitChoice {
    /// Singlet product of the model's phase when it has one, else identity.
    #[default]
    Auto,
    Identity,
    Even,
    Odd,
}

impl InitChoice {
    pub fn resolve(self, model: Option<&CouplingPattern>) -> Option<PhaseLabel> {
        match self {
            InitChoice::Identity => None,
            InitChoice::Even => Some(PhaseLabel::EvenHaldane),
            InitChoice::Odd => Some(PhaseLabel::OddHaldane),
            InitChoice::Auto => model
                .map(|m| m.phase())
                .filter(|p| matches!(p, PhaseLabel::EvenHaldane | PhaseLabel::OddHaldane)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    /// Brickwork depths compiled concurrently; the best run is kept.
    pub layers: Vec<f64>,
    pub init: InitChoice,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig { layers: vec![3.0], init: InitChoice::Auto }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StringOrderSettings {
    pub lengths: Vec<usize>,
    /// Window starts for even strings; `None` uses 20, 30, ..., 60.
    pub even_starts: Option<Vec<usize>>,
    /// Window starts for odd strings; `None` uses 19, 29, ..., 59.
    pub odd_starts: Option<Vec<usize>>,
    pub edge_margin: usize,
}

impl Default for StringOrderSettings {
    fn default() -> Self {
        StringOrderSettings { lengths: (1..=10).map(|k| 2 * k).collect(), even_starts: None, odd_starts: None, edge_margin: 20 }
    }
}

impl StringOrderSettings {
    pub fn request(&self, parity: StringParity) -> StringOrderRequest {
        let starts = match parity {
            StringParity::Even => self.even_starts.clone(),
            StringParity::Odd => self.odd_starts.clone(),
        };
        StringOrderRequest { start_sites: starts, edge_margin: self.edge_margin, ..StringOrderRequest::new(parity, self.lengths.clone()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSettings {
    /// Segments of 1..=max_l sites from the left end.
    pub max_l: usize,
    pub bootstrap: usize,
    pub tomography_cap: usize,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        SpectrumSettings { max_l: 6, bootstrap: 1000, tomography_cap: DEFAULT_TOMOGRAPHY_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdgeSettings {
    pub n_cells: usize,
}

impl Default for EdgeSettings {
    fn default() -> Self {
        EdgeSettings { n_cells: 10 }
    }
}

/// How compiled circuits are measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitBackend {
    /// Noiseless MPS simulation with exact expectation values.
    #[default]
    Exact,
    /// Shot-based estimates under `measurement.noise`.
    Noisy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasurementConfig {
    pub string_order: StringOrderSettings,
    pub spectrum: SpectrumSettings,
    pub edges: EdgeSettings,
    pub circuit_backend: CircuitBackend,
    pub noise: NoiseModel,
    pub shots: ShotConfig,
    /// Extrapolation for string order and magnetization; magnetization is
    /// always extrapolated linearly.
    pub zne: Option<ZneSettings>,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        MeasurementConfig {
            string_order: StringOrderSettings::default(),
            spectrum: SpectrumSettings::default(),
            edges: EdgeSettings::default(),
            circuit_backend: CircuitBackend::Exact,
            noise: NoiseModel::noiseless(),
            shots: ShotConfig::default(),
            zne: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Dmrg,
    Compress,
    Compile,
    MeasureStringOrder,
    MeasureSpectrum,
    MeasureEdges,
}

impl Stage {
    pub fn all() -> Vec<Stage> {
        vec![
            Stage::Dmrg,
            Stage::Compress,
            Stage::Compile,
            Stage::MeasureStringOrder,
            Stage::MeasureSpectrum,
            Stage::MeasureEdges,
        ]
    }

    pub fn name(self) -> &'static str {
        match self {
            Stage::Dmrg => "dmrg",
            Stage::Compress => "compress",
            Stage::Compile => "compile",
            Stage::MeasureStringOrder => "measure-string-order",
            Stage::MeasureSpectrum => "measure-spectrum",
            Stage::MeasureEdges => "measure-edges",
        }
    }
}

impl PipelineConfig {
    /// Parses and validates a config document. Errors name the offending
    /// field by its path.
    pub fn from_json(text: &str) -> Result<PipelineConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: PipelineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                anyhow!("config: {}", inner)
            } else {
                anyhow!("config field `{}`: {}", path, inner)
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        PipelineConfig::from_json(&text)
    }

    /// Phase points in run order.
    pub fn points(&self) -> Vec<CouplingPattern> {
        match (&self.model, &self.models) {
            (Some(m), _) => vec![*m],
            (None, Some(ms)) => ms.clone(),
            (None, None) => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            bail!("config field `version`: unsupported version {}, expected {}", self.version, CONFIG_VERSION);
        }
        match (&self.model, &self.models) {
            (Some(_), Some(_)) => bail!("config field `models`: give either `model` or `models`, not both"),
            (None, Some(ms)) if ms.is_empty() => bail!("config field `models`: list is empty"),
            _ => {}
        }
        if let Some(m) = &self.model {
            m.validate().map_err(|e| anyhow!("config field `model`: {}", e))?;
        }
        for (k, m) in self.models.iter().flatten().enumerate() {
            m.validate().map_err(|e| anyhow!("config field `models[{}]`: {}", k, e))?;
        }
        self.dmrg.validate().map_err(|e| anyhow!("config field `dmrg`: {}", e))?;
        self.aqc.validate().map_err(|e| anyhow!("config field `aqc`: {}", e))?;
        let c = &self.compression;
        if !(c.fidelity_floor > 0.0 && c.fidelity_floor <= 1.0) {
            bail!("config field `compression.fidelity_floor`: {} outside (0, 1]", c.fidelity_floor);
        }
        if c.max_chi == 0 {
            bail!("config field `compression.max_chi`: must be positive");
        }
        if self.campaign.layers.is_empty() {
            bail!("config field `campaign.layers`: no depths given");
        }
        if let Some(l) = self.campaign.layers.iter().find(|l| !(**l >= 0.5) || (2.0 * **l).fract() != 0.0) {
            bail!("config field `campaign.layers`: {} is not a positive multiple of 1/2", l);
        }
        let m = &self.measurement;
        if m.string_order.lengths.iter().any(|l| *l < 2 || l % 2 != 0) {
            bail!("config field `measurement.string_order.lengths`: lengths must be even and at least 2");
        }
        if m.spectrum.max_l == 0 || m.spectrum.max_l > m.spectrum.tomography_cap {
            bail!(
                "config field `measurement.spectrum.max_l`: {} outside 1..={}",
                m.spectrum.max_l,
                m.spectrum.tomography_cap
            );
        }
        if m.spectrum.bootstrap < 2 {
            bail!("config field `measurement.spectrum.bootstrap`: needs at least 2 samples");
        }
        if m.edges.n_cells < 3 {
            bail!("config field `measurement.edges.n_cells`: needs at least 3 cells");
        }
        m.shots.validate().map_err(|e| anyhow!("config field `measurement.shots`: {}", e))?;
        for (k, n) in self.points().iter().enumerate() {
            m.noise
                .validate(n.n_sites)
                .map_err(|e| anyhow!("config field `measurement.noise` (point {}): {}", k, e))?;
        }
        if let Some(z) = &m.zne {
            if z.factors.len() < 3 || z.factors.iter().any(|f| !(*f >= 1.0)) {
                bail!("config field `measurement.zne.factors`: need at least 3 factors, each at least 1");
            }
            if z.models.is_empty() {
                bail!("config field `measurement.zne.models`: no models given");
            }
        }
        let mut sorted = self.stages.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.stages.len() {
            bail!("config field `stages`: duplicate stage");
        }
        Ok(())
    }

    /// DMRG settings for `model` with the sector resolved.
    pub fn dmrg_for(&self, model: &CouplingPattern) -> DmrgConfig {
        let mut cfg = self.dmrg.clone();
        if cfg.target_sector.is_none() {
            cfg.target_sector = match self.sector {
                SectorChoice::Auto => default_sector(model),
                SectorChoice::Free => None,
                SectorChoice::Fixed(m) => Some(m),
            };
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_document_takes_defaults() {
        let cfg = PipelineConfig::from_json(r#"{"model": {"j0": 1.0, "j1": 0.5, "n_sites": 20}}"#).unwrap();
        assert_eq!(cfg.stages, Stage::all());
        assert_eq!(cfg.compression.fidelity_floor, 0.999);
        assert_eq!(cfg.measurement.shots.twirls, 100);
        let m = cfg.points()[0];
        assert_eq!(cfg.dmrg_for(&m).target_sector, Some(0));
        let odd = CouplingPattern::new(0.5, 1.0, 20).unwrap();
        assert_eq!(cfg.dmrg_for(&odd).target_sector, Some(1));
    }

    #[test]
    fn round_trips() {
        let cfg = PipelineConfig { model: Some(CouplingPattern::new(1.0, -1.0, 8).unwrap()), ..Default::default() };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(PipelineConfig::from_json(&text).unwrap(), cfg);
    }

    fn error_of(text: &str) -> String {
        PipelineConfig::from_json(text).unwrap_err().to_string()
    }

    #[test]
    fn schema_errors_name_the_field() {
        let e = error_of(r#"{"model": {"j0": 1.0, "j1": 0.5, "n_sites": 20}, "dmrg": {"max_sweeps": "many"}}"#);
        assert!(e.contains("dmrg.max_sweeps"), "{}", e);
        let e = error_of(r#"{"model": {"j0": 1.0, "j1": 0.5, "n_sites": 20}, "aqc": {"adam": {"learning_rat": 0.1}}}"#);
        assert!(e.contains("learning_rat"), "{}", e);
        let e = error_of(r#"{"model": {"j0": 1.0, "j1": 0.5, "n_sites": 7}}"#);
        assert!(e.contains("`model`"), "{}", e);
        let e = error_of(r#"{"model": {"j0": 1.0, "j1": 0.5, "n_sites": 8}, "measurement": {"shots": {"twirls": 0}}}"#);
        assert!(e.contains("measurement.shots"), "{}", e);
        let e = error_of(r#"{"model": {"j0": 1.0, "j1": 0.5, "n_sites": 8}, "campaign": {"layers": [1.25]}}"#);
        assert!(e.contains("campaign.layers"), "{}", e);
        let e = error_of(r#"{"model": {"j0": 1.0, "j1": 0.5, "n_sites": 8}, "stages": ["dmrg", "simulate"]}"#);
        assert!(e.contains("stages"), "{}", e);
        let e = error_of(r#"{"version": 2}"#);
        assert!(e.contains("version"), "{}", e);
    }
}
