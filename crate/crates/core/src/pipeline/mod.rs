//! Staged batch pipeline driven by one config file.
//!
//! Stages run in the order `calibrate`, `classify`, `dtm`, `buildings`,
//! `place`, `assemble`; each writes under `<out_dir>/<stage>/` and leaves a
//! `stage.json` marker holding a content hash of its inputs, parameters and
//! upstream markers. A stage whose marker matches is skipped. Running a
//! single stage requires up-to-date markers for its prerequisites.
//! Timings go only to `<out_dir>/run_report.json`; every other file depends
//! on nothing but the inputs, the parameters and the seed.

pub mod config;
mod stages;

pub use config::{Overrides, PipelineConfig};

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MARKER_FILE: &str = "stage.json";
pub const REPORT_FILE: &str = "run_report.json";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {}", .0.join("; "))]
    Config(Vec<String>),
    #[error("stage `{stage}` needs `{missing}` first: run `--stage {missing}` (or `--stage all`)")]
    Prerequisite { stage: Stage, missing: Stage },
    #[error("data error: {0}")]
    Data(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Prerequisite { .. } => 3,
            PipelineError::Data(_) | PipelineError::Io(_) => 4,
        }
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for PipelineError {
            fn from(e: $t) -> Self {
                PipelineError::Data(e.to_string())
            }
        }
    )*};
}

data_error!(
    crate::geo::GeoError,
    crate::geo::EnviError,
    crate::spectral::SpectralError,
    crate::material::MappingError,
    crate::terrain::TerrainError,
    crate::structures::StructureError,
    crate::placement::PlacementError,
    crate::scene::SceneError,
    serde_json::Error
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Calibrate,
    Classify,
    Dtm,
    Buildings,
    Place,
    Assemble,
    All,
}

impl Stage {
    /// Every concrete stage in execution order.
    pub const ORDER: [Stage; 6] = [Stage::Calibrate, Stage::Classify, Stage::Dtm, Stage::Buildings, Stage::Place, Stage::Assemble];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Calibrate => "calibrate",
            Stage::Classify => "classify",
            Stage::Dtm => "dtm",
            Stage::Buildings => "buildings",
            Stage::Place => "place",
            Stage::Assemble => "assemble",
            Stage::All => "all",
        }
    }

    /// Stages whose outputs this stage reads.
    pub fn prerequisites(self) -> &'static [Stage] {
        match self {
            Stage::Calibrate | Stage::Dtm | Stage::All => &[],
            Stage::Classify => &[Stage::Calibrate],
            Stage::Buildings => &[Stage::Calibrate, Stage::Classify, Stage::Dtm],
            Stage::Place => &[Stage::Classify, Stage::Dtm],
            Stage::Assemble => &[Stage::Classify, Stage::Dtm, Stage::Buildings, Stage::Place],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ORDER
            .into_iter()
            .chain([Stage::All])
            .find(|st| st.as_str() == s)
            .ok_or_else(|| PipelineError::Config(vec![format!("unknown stage `{s}`")]))
    }
}

/// Contents of a stage marker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageMarker {
    pub stage: Stage,
    pub key: String,
    pub counts: BTreeMap<String, u64>,
    /// Files written by the stage, relative to its directory.
    pub outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub cached: bool,
    pub seconds: f64,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub requested: Stage,
    pub seed: u64,
    pub workers: usize,
    pub started_unix: u64,
    pub seconds: f64,
    pub stages: Vec<StageReport>,
}

impl RunReport {
    /// Count summed over the reported stages.
    pub fn count(&self, name: &str) -> u64 {
        self.stages.iter().filter_map(|s| s.counts.get(name)).sum()
    }
}

pub fn stage_dir(cfg: &PipelineConfig, stage: Stage) -> PathBuf {
    cfg.out_dir.join(stage.as_str())
}

fn read_marker(cfg: &PipelineConfig, stage: Stage) -> Option<StageMarker> {
    let dir = stage_dir(cfg, stage);
    let m: StageMarker = serde_json::from_str(&std::fs::read_to_string(dir.join(MARKER_FILE)).ok()?).ok()?;
    m.outputs.iter().all(|o| dir.join(o).is_file()).then_some(m)
}

/// Memoised content hashes of input files.
#[derive(Default)]
struct Hasher {
    files: BTreeMap<PathBuf, String>,
    keys: BTreeMap<Stage, String>,
}

impl Hasher {
    fn file(&mut self, path: &Path) -> Result<String, PipelineError> {
        if let Some(h) = self.files.get(path) {
            return Ok(h.clone());
        }
        let bytes = std::fs::read(path).map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))?;
        let h = hex(&Sha256::digest(&bytes));
        self.files.insert(path.to_path_buf(), h.clone());
        Ok(h)
    }

    fn envi(&mut self, header: &Path) -> Result<Value, PipelineError> {
        Ok(json!([self.file(header)?, self.file(&crate::geo::envi::data_path_for(header))?]))
    }

    fn library(&mut self, dir: &Path) -> Result<Value, PipelineError> {
        let mut names: Vec<PathBuf> = std::fs::read_dir(dir)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect();
        names.sort();
        let mut out = Vec::new();
        for p in names {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            out.push(json!([name, self.file(&p)?]));
        }
        Ok(Value::Array(out))
    }

    fn roads(&mut self, cfg: &PipelineConfig) -> Result<Value, PipelineError> {
        match &cfg.inputs.roads {
            Some(p) => Ok(json!(self.file(p)?)),
            None => Ok(Value::Null),
        }
    }

    /// Cache key of a stage for the current config and inputs.
    fn key(&mut self, cfg: &PipelineConfig, stage: Stage) -> Result<String, PipelineError> {
        if let Some(k) = self.keys.get(&stage) {
            return Ok(k.clone());
        }
        let seed = cfg.seed();
        let origin = serde_json::to_value(cfg.origin)?;
        let bands = serde_json::to_value(&cfg.bands)?;
        let inputs = match stage {
            Stage::Calibrate => json!({
                "vnir": self.envi(&cfg.inputs.vnir)?,
                "library": self.library(&cfg.inputs.library)?,
                "bands": bands,
                "params": serde_json::to_value(&cfg.calibrate)?,
            }),
            Stage::Classify => json!({
                "library": self.library(&cfg.inputs.library)?,
                "bands": bands,
                "seed": seed,
                "params": serde_json::to_value(&cfg.classify)?,
            }),
            Stage::Dtm => json!({
                "dsm": self.envi(&cfg.inputs.dsm)?,
                "origin": origin,
                "params": serde_json::to_value(cfg.dtm)?,
            }),
            Stage::Buildings => json!({
                "dsm": self.envi(&cfg.inputs.dsm)?,
                "library": self.library(&cfg.inputs.library)?,
                "origin": origin,
                "seed": seed,
                "params": serde_json::to_value(&cfg.buildings)?,
            }),
            Stage::Place => json!({
                "roads": self.roads(cfg)?,
                "library": self.library(&cfg.inputs.library)?,
                "origin": origin,
                "seed": seed,
                "params": serde_json::to_value(&cfg.place)?,
                "assets": serde_json::to_value(&cfg.assets)?,
            }),
            Stage::Assemble => json!({
                "roads": self.roads(cfg)?,
                "library": self.library(&cfg.inputs.library)?,
                "origin": origin,
                "bands": bands,
                "lane_width": cfg.place.lane_width,
                "decal_materials": [cfg.classify.road_material, cfg.classify.path_material],
                "assets": serde_json::to_value(&cfg.assets)?,
            }),
            Stage::All => unreachable!("`all` has no key"),
        };
        let mut upstream = Vec::new();
        for &p in stage.prerequisites() {
            upstream.push(self.key(cfg, p)?);
        }
        let doc = json!({
            "stage": stage.as_str(),
            "version": env!("CARGO_PKG_VERSION"),
            "inputs": inputs,
            "upstream": upstream,
        });
        let k = hex(&Sha256::digest(serde_json::to_vec(&doc)?));
        self.keys.insert(stage, k.clone());
        Ok(k)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn list_files(dir: &Path, base: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let p = entry?.path();
        if p.is_dir() {
            list_files(&p, base, out)?;
        } else if let Ok(rel) = p.strip_prefix(base) {
            let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
            out.push(rel.join("/"));
        }
    }
    Ok(())
}

/// Runs a stage (or all stages) on a rayon pool of `cfg.workers` threads
/// and writes the run report.
pub fn run(cfg: &PipelineConfig, stage: Stage) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| PipelineError::Config(vec![format!("cannot start {} workers: {e}", cfg.workers)]))?;
    pool.install(|| run_stages(cfg, stage))
}

fn run_stages(cfg: &PipelineConfig, requested: Stage) -> Result<RunReport, PipelineError> {
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let t0 = Instant::now();
    let mut hasher = Hasher::default();
    let todo: Vec<Stage> = if requested == Stage::All { Stage::ORDER.to_vec() } else { vec![requested] };
    if requested != Stage::All {
        for &p in requested.prerequisites() {
            let key = hasher.key(cfg, p)?;
            if read_marker(cfg, p).is_none_or(|m| m.key != key) {
                return Err(PipelineError::Prerequisite { stage: requested, missing: p });
            }
        }
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut stages = Vec::new();
    for stage in todo {
        let t = Instant::now();
        let key = hasher.key(cfg, stage)?;
        if let Some(m) = read_marker(cfg, stage).filter(|m| m.key == key) {
            stages.push(StageReport { stage, cached: true, seconds: t.elapsed().as_secs_f64(), counts: m.counts });
            continue;
        }
        let dir = stage_dir(cfg, stage);
        if dir.exists() {
            std::fs::remove_dir_all(&dir)?;
        }
        std::fs::create_dir_all(&dir)?;
        let counts = stages::run_stage(cfg, stage, &dir)?;
        let mut outputs = Vec::new();
        list_files(&dir, &dir, &mut outputs)?;
        outputs.sort();
        let marker = StageMarker { stage, key, counts: counts.clone(), outputs };
        std::fs::write(dir.join(MARKER_FILE), serde_json::to_string_pretty(&marker)? + "\n")?;
        stages.push(StageReport { stage, cached: false, seconds: t.elapsed().as_secs_f64(), counts });
    }
    let report = RunReport { requested, seed: cfg.seed(), workers: cfg.workers, started_unix, seconds: t0.elapsed().as_secs_f64(), stages };
    std::fs::write(cfg.out_dir.join(REPORT_FILE), serde_json::to_string_pretty(&report)? + "\n")?;
    Ok(report)
}
