//! Synthetic scene with known ground truth, small enough to run the whole
//! pipeline in a test.
//!
//! The scene is 64 x 64 one-meter pixels whose north-west corner is the
//! frame origin, so pixel `(r, c)` is centered at `x = c + 0.5`,
//! `y = -(r + 0.5)`. It holds a sloped ground plane, a flat-roofed box, a
//! gable-roofed building, a stand of trees, a road with a junction, a
//! footpath and a parking row. The multispectral image is built from a
//! synthetic library with a known per-band distortion for the calibration
//! stage to undo.

use std::path::{Path, PathBuf};

use crate::geo::envi::{data_path_for, write_envi_raster_named, DataType, EnviOptions};
use crate::geo::{geodetic_from_lvcs, GeoTransform, LvcsOrigin, Point3, RasterGrid};
use crate::rng::{tags, Stream};
use crate::spectral::library::format_library_file;
use crate::spectral::{resample_to_bands, BandSet, MaterialLibrary, SpectralCurve};
use crate::structures::Polygon;

pub const SIZE: usize = 64;
pub const ORIGIN_LAT: f64 = 43.0;
pub const ORIGIN_LON: f64 = -77.0;
pub const DATUM: f64 = 100.0;

/// Library material names.
pub const ASPHALT: &str = "asphalt";
pub const CONCRETE: &str = "concrete";
pub const GRASS: &str = "grass";
pub const CANOPY: &str = "tree canopy";
pub const SOIL: &str = "bare soil";
pub const METAL: &str = "metal roof";
pub const SHINGLE: &str = "shingle roof";

pub fn origin() -> LvcsOrigin {
    LvcsOrigin::new(ORIGIN_LAT, ORIGIN_LON, DATUM).expect("valid origin")
}

pub fn pixel_center(row: usize, col: usize) -> (f64, f64) {
    (col as f64 + 0.5, -(row as f64 + 0.5))
}

/// True ground elevation (absolute).
pub fn ground_elevation(x: f64, y: f64) -> f64 {
    DATUM + 0.03 * x - 0.02 * y
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoofShape {
    Flat,
    /// Ridge running east-west through the footprint center.
    Gable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TruthBuilding {
    pub name: &'static str,
    pub shape: RoofShape,
    /// `[min_x, max_x, min_y, max_y]`.
    pub bounds: [f64; 4],
    pub eave_height: f64,
    pub ridge_height: f64,
    pub material: &'static str,
}

impl TruthBuilding {
    pub fn footprint(&self) -> Polygon {
        let [x0, x1, y0, y1] = self.bounds;
        vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let [x0, x1, y0, y1] = self.bounds;
        x > x0 && x < x1 && y > y0 && y < y1
    }

    fn base(&self) -> f64 {
        let [x0, x1, y0, y1] = self.bounds;
        ground_elevation(0.5 * (x0 + x1), 0.5 * (y0 + y1))
    }

    /// Absolute roof elevation at a point inside the footprint.
    pub fn roof_elevation(&self, _x: f64, y: f64) -> f64 {
        let base = self.base();
        match self.shape {
            RoofShape::Flat => base + self.eave_height,
            RoofShape::Gable => {
                let [_, _, y0, y1] = self.bounds;
                let half = 0.5 * (y1 - y0);
                let t = 1.0 - (y - 0.5 * (y0 + y1)).abs() / half;
                base + self.eave_height + (self.ridge_height - self.eave_height) * t
            }
        }
    }

    /// Upward unit normals of the roof faces.
    pub fn roof_normals(&self) -> Vec<Point3> {
        match self.shape {
            RoofShape::Flat => vec![Point3::new(0.0, 0.0, 1.0)],
            RoofShape::Gable => {
                let [_, _, y0, y1] = self.bounds;
                let slope = (self.ridge_height - self.eave_height) / (0.5 * (y1 - y0));
                let n = |s: f64| Point3::new(0.0, s, 1.0).normalized().expect("nonzero");
                vec![n(slope), n(-slope)]
            }
        }
    }
}

pub fn buildings() -> Vec<TruthBuilding> {
    vec![
        TruthBuilding {
            name: "flat box",
            shape: RoofShape::Flat,
            bounds: [6.0, 20.0, -18.0, -6.0],
            eave_height: 8.0,
            ridge_height: 8.0,
            material: METAL,
        },
        TruthBuilding {
            name: "gable",
            shape: RoofShape::Gable,
            bounds: [44.0, 62.0, -40.0, -26.0],
            eave_height: 6.0,
            ridge_height: 9.0,
            material: SHINGLE,
        },
    ]
}

/// Tree crowns as `(x, y, radius)`.
pub const CROWNS: [(f64, f64, f64); 5] = [(12.0, -30.0, 3.0), (20.0, -36.5, 3.0), (28.0, -30.0, 3.0), (13.0, -41.0, 2.5), (27.0, -40.5, 2.5)];

/// Road centerline vertices and the footpath and parking lines, in the
/// local frame.
pub const ROAD: [(f64, f64); 3] = [(0.0, -52.0), (40.0, -52.0), (64.0, -52.0)];
pub const PATH: [(f64, f64); 2] = [(40.0, -52.0), (40.0, -1.0)];
pub const PARKING: [(f64, f64); 2] = [(6.0, -58.0), (34.0, -58.0)];

fn crown_height(x: f64, y: f64) -> Option<f64> {
    CROWNS
        .iter()
        .filter_map(|&(cx, cy, r)| {
            let d2 = ((x - cx).powi(2) + (y - cy).powi(2)) / (r * r);
            (d2 < 1.0).then_some(3.0 + 3.0 * (1.0 - d2))
        })
        .reduce(f64::max)
}

/// True material name at a ground position.
pub fn material_at(x: f64, y: f64) -> &'static str {
    for b in buildings() {
        if b.contains(x, y) {
            return b.material;
        }
    }
    if crown_height(x, y).is_some() {
        return CANOPY;
    }
    if (-56.0..-48.0).contains(&y) {
        return ASPHALT;
    }
    if y < -56.0 && (4.0..36.0).contains(&x) {
        return ASPHALT;
    }
    if (38.0..42.0).contains(&x) && y > -48.0 && y < -1.0 {
        return CONCRETE;
    }
    if (22.0..36.0).contains(&x) && (-20.0..-2.0).contains(&y) {
        return SOIL;
    }
    GRASS
}

/// True surface elevation (before noise).
pub fn surface_elevation(x: f64, y: f64) -> f64 {
    for b in buildings() {
        if b.contains(x, y) {
            return b.roof_elevation(x, y);
        }
    }
    ground_elevation(x, y) + crown_height(x, y).unwrap_or(0.0)
}

fn gaussian(w: f64, center: f64, width: f64) -> f64 {
    (-((w - center) / width).powi(2)).exp()
}

fn sigmoid(w: f64, center: f64, width: f64) -> f64 {
    1.0 / (1.0 + (-(w - center) / width).exp())
}

/// Synthetic spectral library: the seven scene materials plus three that
/// do not occur in the scene.
pub fn library() -> MaterialLibrary {
    type Shape = fn(f64) -> f64;
    let items: [(&str, &[&str], Shape); 10] = [
        (ASPHALT, &["road", "pavement"], |w| 0.04 + 0.00008 * (w - 350.0)),
        (CONCRETE, &["pavement"], |w| 0.20 + 0.0002 * (w - 350.0) - 0.05 * gaussian(w, 950.0, 60.0)),
        (GRASS, &["vegetation", "grass"], |w| 0.05 + 0.05 * gaussian(w, 550.0, 30.0) + 0.40 * sigmoid(w, 720.0, 15.0)),
        (CANOPY, &["vegetation", "tree"], |w| 0.03 + 0.06 * gaussian(w, 470.0, 40.0) + 0.28 * sigmoid(w, 700.0, 12.0)),
        (SOIL, &["soil"], |w| 0.08 + 0.00035 * (w - 350.0)),
        (METAL, &["roof", "metal"], |w| 0.35 - 0.12 * gaussian(w, 880.0, 70.0)),
        (SHINGLE, &["roof"], |w| 0.10 + 0.12 * gaussian(w, 620.0, 50.0)),
        ("water", &["water"], |w| (0.09 - 0.0001 * (w - 350.0)).max(0.01)),
        ("red brick", &["wall", "brick"], |w| 0.08 + 0.30 * sigmoid(w, 600.0, 25.0)),
        ("snow", &[], |w| 0.95 - 0.0004 * (w - 350.0)),
    ];
    let wl: Vec<f64> = (0..=75).map(|i| 350.0 + 10.0 * i as f64).collect();
    MaterialLibrary::from_curves(items.iter().map(|(name, tags, f)| {
        let curve = SpectralCurve::new(wl.clone(), wl.iter().map(|&w| f(w)).collect()).expect("valid curve");
        (name.to_string(), tags.iter().map(|t| t.to_string()).collect(), curve)
    }))
}

/// Per-band `(gain, offset)` that maps the raw image back to reflectance.
pub fn distortion(bands: usize) -> Vec<(f64, f64)> {
    (0..bands).map(|b| (1.0 + 0.15 * (b as f64 + 1.0).sin(), 0.01 * (b as f64 + 1.0).cos())).collect()
}

/// Pixels of three materials used as calibration targets.
pub fn calibration_targets() -> Vec<(&'static str, Vec<[usize; 2]>)> {
    vec![
        (ASPHALT, (0..6).map(|i| [51, 4 + 4 * i]).collect()),
        (GRASS, (0..6).map(|i| [22, 2 + 3 * i]).collect()),
        (METAL, (0..6).map(|i| [10, 8 + 2 * i]).collect()),
    ]
}

pub struct Fixture {
    pub dir: PathBuf,
    pub config: PathBuf,
    pub seed: u64,
}

fn transform() -> GeoTransform {
    GeoTransform::new(ORIGIN_LON, ORIGIN_LAT, 1.0, 1.0, SIZE, SIZE).expect("valid transform")
}

/// Surface model with 2 cm noise.
pub fn dsm(seed: u64) -> RasterGrid {
    let mut rng = Stream::derived(seed, tags::FIXTURE, 0);
    let data = (0..SIZE * SIZE)
        .map(|k| {
            let (x, y) = pixel_center(k / SIZE, k % SIZE);
            surface_elevation(x, y) + 0.02 * rng.normal()
        })
        .collect();
    RasterGrid::new(transform(), 1, data, None).expect("dimensions")
}

/// Raw multispectral image: library reflectance pushed through the inverse
/// of [`distortion`], plus noise of 0.002.
pub fn vnir(seed: u64) -> RasterGrid {
    image(seed, true)
}

/// The same scene as [`vnir`] without the per-band distortion.
pub fn reflectance(seed: u64) -> RasterGrid {
    image(seed, false)
}

fn image(seed: u64, distort: bool) -> RasterGrid {
    let lib = library();
    let bands = BandSet::worldview3();
    let gains = if distort { distortion(bands.len()) } else { vec![(1.0, 0.0); bands.len()] };
    let mut rng = Stream::derived(seed, tags::FIXTURE, 1);
    let n = SIZE * SIZE;
    let mut data = vec![0.0; n * bands.len()];
    for k in 0..n {
        let (x, y) = pixel_center(k / SIZE, k % SIZE);
        let rec = lib.find_by_name(material_at(x, y)).expect("scene material in library");
        let v = resample_to_bands(&rec.curve, &bands).expect("library covers the bands");
        for (b, &(g, o)) in gains.iter().enumerate() {
            data[b * n + k] = ((v.0[b] - o) / g + 0.002 * rng.normal()).max(0.0);
        }
    }
    RasterGrid::new(transform(), bands.len(), data, None).expect("dimensions")
}

fn line_feature(kind: &str, extra: &str, pts: &[(f64, f64)], origin: &LvcsOrigin) -> String {
    let coords: Vec<String> = pts
        .iter()
        .map(|&(x, y)| {
            let (lat, lon, _) = geodetic_from_lvcs(Point3::new(x, y, 0.0), origin).expect("in range");
            format!("[{lon:?}, {lat:?}]")
        })
        .collect();
    format!(
        r#"{{"type": "Feature", "properties": {{"kind": "{kind}"{extra}}}, "geometry": {{"type": "LineString", "coordinates": [{}]}}}}"#,
        coords.join(", ")
    )
}

pub fn roads_geojson() -> String {
    let o = origin();
    let features = [
        line_feature("road", r#", "lanes": 2"#, &ROAD, &o),
        line_feature("path", r#", "lanes": 1"#, &PATH, &o),
        line_feature("parking", r#", "spot_spacing": 2.7, "side_offset": 2.5"#, &PARKING, &o),
    ];
    format!("{{\"type\": \"FeatureCollection\", \"features\": [\n  {}\n]}}\n", features.join(",\n  "))
}

pub fn config_text(seed: u64) -> String {
    let mut targets = String::new();
    for (name, pixels) in calibration_targets() {
        let px: Vec<String> = pixels.iter().map(|[r, c]| format!("[{r}, {c}]")).collect();
        targets.push_str(&format!("[[calibrate.targets]]\nmaterial = \"{name}\"\npixels = [{}]\n\n", px.join(", ")));
    }
    format!(
        r#"seed = {seed}
out_dir = "out"

[origin]
lat = {ORIGIN_LAT:?}
lon = {ORIGIN_LON:?}
elev = {DATUM:?}

[inputs]
dsm = "dsm.hdr"
vnir = "vnir.hdr"
library = "library"
roads = "roads.geojson"

{targets}[classify]
k = 8
stride = 1
upsample = 2
sigma = 1.5
road_material = "{ASPHALT}"
path_material = "{CONCRETE}"

[dtm]
tile_size = 16.0
bin_width = 1.0
outlier_threshold = 1.0
iterations = 10

[buildings]
min_pixels = 40
exclude_tags = ["vegetation", "water"]
use_edges = true

[buildings.model.priors]
bitmap_epsilon = 1.0

[place]
lane_width = 4.0

[place.roads]
lane_offset = 4.0
min_interval = 10.0
occupancy = 0.6

[place.parking]
occupancy = 0.7

[place.trees]
count = 20
min_separation = 2.5
scale_range = [0.8, 1.2]
weights = {{ "tag:tree" = 1.0, "material:{GRASS}" = 0.1 }}

[assets.cars.sedan]
mesh = "cars/sedan.obj"
variants = 4
footprint_radius = 2.4

[assets.cars.pickup]
mesh = "cars/pickup.obj"
variants = 3
footprint_radius = 2.8

[assets.trees.oak]
mesh = "trees/oak.obj"
variants = 2
footprint_radius = 3.0

[assets.trees.maple]
mesh = "trees/maple.obj"
variants = 2
footprint_radius = 2.5

[assets.trees.dogwood]
mesh = "trees/dogwood.obj"
variants = 1
footprint_radius = 1.5
"#
    )
}

/// Writes the inputs and `scene.toml` into `dir`.
pub fn write_fixture(dir: &Path, seed: u64) -> std::io::Result<Fixture> {
    let lib_dir = dir.join("library");
    std::fs::create_dir_all(&lib_dir)?;
    for rec in library().records() {
        let file = rec.name.replace(' ', "_");
        std::fs::write(lib_dir.join(format!("{file}.txt")), format_library_file(rec))?;
    }
    let f32 = EnviOptions::new(DataType::F32);
    let io = |e: crate::geo::EnviError| std::io::Error::other(e.to_string());
    let hdr = dir.join("dsm.hdr");
    write_envi_raster_named(&dsm(seed), &hdr, &data_path_for(&hdr), &f32, None).map_err(io)?;
    let hdr = dir.join("vnir.hdr");
    write_envi_raster_named(&vnir(seed), &hdr, &data_path_for(&hdr), &f32, None).map_err(io)?;
    std::fs::write(dir.join("roads.geojson"), roads_geojson())?;
    let config = dir.join("scene.toml");
    std::fs::write(&config, config_text(seed))?;
    Ok(Fixture { dir: dir.to_path_buf(), config, seed })
}
