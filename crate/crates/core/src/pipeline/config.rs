//! Pipeline configuration file (TOML).
//!
//! Relative paths are resolved against the directory of the config file.
//! See `examples/data/scene.toml` written by the fixture for a complete
//! file; every section except `origin` and `inputs` is optional.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::material::SurfaceContext;
use crate::placement::{AssetEntry, ParkingParams, RoadParams};
use crate::spectral::BandSet;
use crate::structures::BuildingParams;
use crate::terrain::TerrainParams;

use super::PipelineError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OriginConfig {
    pub lat: f64,
    pub lon: f64,
    pub elev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    /// Surface model ENVI header.
    pub dsm: PathBuf,
    /// Multispectral image ENVI header, on the surface-model grid.
    pub vnir: PathBuf,
    /// Directory of spectral library files.
    pub library: PathBuf,
    /// Road, path and parking lines as GeoJSON.
    #[serde(default)]
    pub roads: Option<PathBuf>,
}

/// Pixels of one known material used to fit the calibration adjustment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationTarget {
    pub material: String,
    /// `[row, col]` pairs.
    pub pixels: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    #[serde(default)]
    pub targets: Vec<CalibrationTarget>,
}

/// `source` is `material:<name>` or `tag:<tag>`; `target` is a material
/// name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemapConfig {
    pub source: String,
    #[serde(default = "any_context")]
    pub context: SurfaceContext,
    pub target: String,
}

fn any_context() -> SurfaceContext {
    SurfaceContext::Any
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifyConfig {
    pub k: usize,
    pub stride: usize,
    pub upsample: usize,
    pub sigma: f64,
    /// Decal materials, added to the palette when the image has none.
    pub road_material: String,
    pub path_material: String,
    pub remap: Vec<RemapConfig>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            k: 50,
            stride: 1,
            upsample: crate::material::mixture::DEFAULT_UPSAMPLE,
            sigma: crate::material::mixture::DEFAULT_SIGMA,
            road_material: "asphalt".into(),
            path_material: "concrete".into(),
            remap: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildingsConfig {
    /// Smallest elevated cluster treated as a building, in pixels.
    pub min_pixels: usize,
    /// Pixels whose material carries one of these tags are not buildings.
    pub exclude_tags: Vec<String>,
    /// Use image edges to find the dominant building axis.
    pub use_edges: bool,
    pub model: BuildingParams,
}

impl Default for BuildingsConfig {
    fn default() -> Self {
        Self { min_pixels: 50, exclude_tags: vec!["vegetation".into(), "water".into()], use_edges: true, model: BuildingParams::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    pub count: usize,
    pub min_separation: f64,
    pub scale_range: [f64; 2],
    /// Relative density by `material:<name>` or `tag:<tag>`.
    pub weights: BTreeMap<String, f64>,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { count: 0, min_separation: 3.0, scale_range: [0.8, 1.2], weights: BTreeMap::from([("tag:vegetation".to_string(), 1.0)]) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaceConfig {
    /// Decal width per lane, in meters.
    pub lane_width: f64,
    pub roads: RoadParams,
    pub parking: ParkingParams,
    pub trees: TreeConfig,
}

impl Default for PlaceConfig {
    fn default() -> Self {
        Self { lane_width: 4.0, roads: RoadParams::default(), parking: ParkingParams::default(), trees: TreeConfig::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssetsConfig {
    pub cars: BTreeMap<String, AssetEntry>,
    pub trees: BTreeMap<String, AssetEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses all cores. Never changes the outputs.
    #[serde(default)]
    pub workers: usize,
    pub origin: OriginConfig,
    pub inputs: InputPaths,
    /// Band intervals in nanometers; defaults to the eight WorldView-3
    /// VNIR bands.
    #[serde(default)]
    pub bands: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub calibrate: CalibrateConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub dtm: TerrainParams,
    #[serde(default)]
    pub buildings: BuildingsConfig,
    #[serde(default)]
    pub place: PlaceConfig,
    #[serde(default)]
    pub assets: AssetsConfig,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Values given on the command line, which take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(vec![e.to_string()]))
    }

    /// Reads a config file, resolves relative paths against its directory,
    /// applies overrides, and validates the result.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        cfg.apply(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.inputs.dsm);
        fix(&mut self.inputs.vnir);
        fix(&mut self.inputs.library);
        if let Some(r) = self.inputs.roads.as_mut() {
            fix(r);
        }
        fix(&mut self.out_dir);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(d) = &o.out_dir {
            self.out_dir = d.clone();
        }
        if let Some(w) = o.workers {
            self.workers = w;
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("validated config has a seed")
    }

    pub fn band_set(&self) -> Result<BandSet, PipelineError> {
        match &self.bands {
            None => Ok(BandSet::worldview3()),
            Some(b) => BandSet::new(b.iter().map(|&[lo, hi]| (lo, hi)).collect()).map_err(|e| PipelineError::Config(vec![format!("bands: {e}")])),
        }
    }

    /// Checks everything that can be checked without reading the inputs and
    /// reports all problems at once.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let mut errs = Vec::new();
        if self.seed.is_none() {
            errs.push("`seed` is required".to_string());
        }
        if crate::geo::LvcsOrigin::new(self.origin.lat, self.origin.lon, self.origin.elev).is_err() {
            errs.push(format!("origin {:?} is out of range", self.origin));
        }
        let mut file = |name: &str, p: &Path| {
            if !p.is_file() {
                errs.push(format!("inputs.{name}: {} does not exist", p.display()));
            }
        };
        file("dsm", &self.inputs.dsm);
        file("vnir", &self.inputs.vnir);
        if let Some(r) = &self.inputs.roads {
            file("roads", r);
        }
        if !self.inputs.library.is_dir() {
            errs.push(format!("inputs.library: {} is not a directory", self.inputs.library.display()));
        }
        if let Err(PipelineError::Config(e)) = self.band_set() {
            errs.extend(e);
        }
        for t in &self.calibrate.targets {
            if t.pixels.is_empty() {
                errs.push(format!("calibrate target `{}` lists no pixels", t.material));
            }
        }
        let c = &self.classify;
        if c.k == 0 || c.k > u16::MAX as usize {
            errs.push(format!("classify.k must be in 1..={}", u16::MAX));
        }
        if c.stride == 0 {
            errs.push("classify.stride must be positive".into());
        }
        if c.upsample == 0 {
            errs.push("classify.upsample must be positive".into());
        }
        if !(c.sigma >= 0.0 && c.sigma.is_finite()) {
            errs.push("classify.sigma must be non-negative".into());
        }
        for r in &c.remap {
            if parse_selector(&r.source).is_none() {
                errs.push(format!("classify.remap source `{}` must be `material:<name>` or `tag:<tag>`", r.source));
            }
        }
        if let Err(e) = self.dtm.validate() {
            errs.push(format!("dtm: {e}"));
        }
        let b = &self.buildings.model;
        if !(b.height_threshold > 0.0 && b.alpha > 0.0 && b.min_area >= 0.0 && b.simplify_tolerance >= 0.0) {
            errs.push("buildings.model: height_threshold and alpha must be positive, min_area and simplify_tolerance non-negative".into());
        }
        if !(b.priors.epsilon > 0.0 && b.priors.bitmap_epsilon > 0.0) || b.priors.min_points < 3 {
            errs.push("buildings.model.priors: epsilon values must be positive and min_points at least 3".into());
        }
        if !(0.0 <= b.canny_low && b.canny_low <= b.canny_high) {
            errs.push("buildings.model: need 0 <= canny_low <= canny_high".into());
        }
        let p = &self.place;
        if !(p.lane_width > 0.0) {
            errs.push("place.lane_width must be positive".into());
        }
        if !(p.roads.min_interval > 0.0) || !(0.0..=1.0).contains(&p.roads.occupancy) {
            errs.push("place.roads: min_interval must be positive and occupancy in [0, 1]".into());
        }
        if !(0.0..=1.0).contains(&p.parking.occupancy) || !(0.0..=1.0).contains(&p.parking.reverse_probability) {
            errs.push("place.parking: probabilities must be in [0, 1]".into());
        }
        let [lo, hi] = p.trees.scale_range;
        if !(lo > 0.0 && lo <= hi) || !(p.trees.min_separation >= 0.0) {
            errs.push("place.trees: need 0 < scale_range[0] <= scale_range[1] and min_separation >= 0".into());
        }
        for (key, w) in &p.trees.weights {
            if parse_selector(key).is_none() {
                errs.push(format!("place.trees.weights key `{key}` must be `material:<name>` or `tag:<tag>`"));
            }
            if !(*w >= 0.0 && w.is_finite()) {
                errs.push(format!("place.trees.weights `{key}` must be non-negative"));
            }
        }
        if p.trees.count > 0 && self.assets.trees.is_empty() {
            errs.push("place.trees.count is positive but assets.trees is empty".into());
        }
        if self.inputs.roads.is_some() && self.assets.cars.is_empty() {
            errs.push("inputs.roads is set but assets.cars is empty".into());
        }
        for (id, e) in self.assets.cars.iter().chain(&self.assets.trees) {
            if e.variants == 0 || id.is_empty() || id.contains(char::is_whitespace) {
                errs.push(format!("asset `{id}` needs a one-word id and at least one variant"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(PipelineError::Config(errs))
        }
    }
}

/// Selector in `material:<name>` / `tag:<tag>` form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selector<'a> {
    Material(&'a str),
    Tag(&'a str),
}

pub fn parse_selector(s: &str) -> Option<Selector<'_>> {
    let (kind, value) = s.split_once(':')?;
    let value = value.trim();
    if value.is_empty() {
        return None;
    }
    match kind.trim() {
        "material" => Some(Selector::Material(value)),
        "tag" => Some(Selector::Tag(value)),
        _ => None,
    }
}
