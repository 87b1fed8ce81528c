use std::collections::BTreeMap;
use std::path::Path;

use crate::geo::envi::{data_path_for, read_envi_raster, write_envi_raster_named, DataType, EnviOptions};
use crate::geo::{LvcsOrigin, PixelFrame, RasterGrid};
use crate::material::maps::read_material_map;
use crate::material::{
    apply_calibration, apply_remap, build_material_catalog, build_mixture_map, class_to_material_map, quantize_vnir, MaterialMap, RemapRule,
    RemapSource, RemapTable, VnirImage,
};
use crate::mesh::Mesh;
use crate::placement::{
    density_map_from_materials, parse_road_geojson, place_by_density, place_cars_on_roads, place_parking, AssetCatalog, RoadFeatures, TerrainGround,
};
use crate::scene::manifest::MapKind;
use crate::scene::{
    assemble_scene, build_decal_meshes, read_instance_list, read_obj, write_instance_list, write_obj, DecalMaterials, MapReference, MaterialDatabase,
    SceneBundle,
};
use crate::spectral::{fit_calibration, BandVector, CalibrationAdjustment, MaterialId, MaterialLibrary, ResampledLibrary};
use crate::structures::polygon::contains_point;
use crate::structures::{compute_edge_map, debug_lines, model_buildings, segment_buildings, BuildingInputs, BuildingModel};
use crate::terrain::{build_tile_grid, smooth_corners, triangulate_dtm, TileGrid};

use super::config::{parse_selector, PipelineConfig, Selector};
use super::{stage_dir, PipelineError, Stage};

type Counts = BTreeMap<String, u64>;

pub(super) fn run_stage(cfg: &PipelineConfig, stage: Stage, dir: &Path) -> Result<Counts, PipelineError> {
    let ctx = Context::new(cfg)?;
    match stage {
        Stage::Calibrate => calibrate(&ctx, dir),
        Stage::Classify => classify(&ctx, dir),
        Stage::Dtm => dtm(&ctx, dir),
        Stage::Buildings => buildings(&ctx, dir),
        Stage::Place => place(&ctx, dir),
        Stage::Assemble => assemble(&ctx, dir),
        Stage::All => unreachable!("expanded by the runner"),
    }
}

struct Context<'a> {
    cfg: &'a PipelineConfig,
    origin: LvcsOrigin,
    library: MaterialLibrary,
}

const CALIBRATED: &str = "vnir.hdr";
const MATERIALS: &str = "materials.hdr";
const MIXTURE: &str = "mixture.hdr";
const TILES: &str = "tiles.json";
const DTM: &str = "dtm.hdr";
const TERRAIN: &str = "terrain.obj";
const MODELS: &str = "models.json";
const LISTS: [&str; 3] = ["cars", "parking", "trees"];

impl<'a> Context<'a> {
    fn new(cfg: &'a PipelineConfig) -> Result<Self, PipelineError> {
        let o = cfg.origin;
        Ok(Self { cfg, origin: LvcsOrigin::new(o.lat, o.lon, o.elev)?, library: MaterialLibrary::load_dir(&cfg.inputs.library)? })
    }

    fn upstream(&self, stage: Stage, file: &str) -> std::path::PathBuf {
        stage_dir(self.cfg, stage).join(file)
    }

    fn material(&self, name: &str) -> Result<MaterialId, PipelineError> {
        self.library.find_by_name(name).map(|r| r.id).ok_or_else(|| PipelineError::Data(format!("material `{name}` is not in the library")))
    }

    /// Library ids picked by a `material:` / `tag:` selector.
    fn select(&self, selector: &str) -> Result<Vec<MaterialId>, PipelineError> {
        match parse_selector(selector) {
            Some(Selector::Material(name)) => Ok(vec![self.material(name)?]),
            Some(Selector::Tag(tag)) => Ok(self.library.with_tag(tag).map(|r| r.id).collect()),
            None => Err(PipelineError::Config(vec![format!("bad selector `{selector}`")])),
        }
    }

    fn dsm(&self) -> Result<RasterGrid, PipelineError> {
        let dsm = read_raster(&self.cfg.inputs.dsm)?;
        if dsm.bands != 1 {
            return Err(PipelineError::Data(format!("surface model has {} bands, expected 1", dsm.bands)));
        }
        Ok(dsm)
    }

    fn vnir(&self, header: &Path) -> Result<VnirImage, PipelineError> {
        Ok(VnirImage::new(read_raster(header)?, self.cfg.band_set()?)?)
    }

    fn material_map(&self) -> Result<MaterialMap, PipelineError> {
        Ok(read_material_map(&self.upstream(Stage::Classify, MATERIALS), &self.library)?)
    }

    fn tiles(&self) -> Result<TileGrid, PipelineError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(self.upstream(Stage::Dtm, TILES))?)?)
    }

    fn roads(&self, tiles: &TileGrid) -> Result<Option<RoadFeatures>, PipelineError> {
        let Some(path) = &self.cfg.inputs.roads else {
            return Ok(None);
        };
        let ground = TerrainGround { tiles, datum: self.origin.elev };
        Ok(Some(parse_road_geojson(&std::fs::read_to_string(path)?, &self.origin, &ground)?))
    }

    fn catalog(&self, entries: &BTreeMap<String, crate::placement::AssetEntry>) -> Result<AssetCatalog, PipelineError> {
        Ok(AssetCatalog::new(entries.iter().map(|(k, v)| (k.clone(), v.clone())))?)
    }
}

fn read_raster(header: &Path) -> Result<RasterGrid, PipelineError> {
    Ok(read_envi_raster(header, &data_path_for(header))?)
}

fn write_f32(grid: &RasterGrid, header: &Path) -> Result<(), PipelineError> {
    Ok(write_envi_raster_named(grid, header, &data_path_for(header), &EnviOptions::new(DataType::F32), None)?)
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), PipelineError> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn counts<const N: usize>(items: [(&str, usize); N]) -> Counts {
    items.into_iter().map(|(k, v)| (k.to_string(), v as u64)).collect()
}

fn calibrate(ctx: &Context<'_>, dir: &Path) -> Result<Counts, PipelineError> {
    let image = ctx.vnir(&ctx.cfg.inputs.vnir)?;
    let bands = ctx.cfg.band_set()?;
    let targets = &ctx.cfg.calibrate.targets;
    let adjustment = if targets.is_empty() {
        CalibrationAdjustment::identity(bands.len())
    } else {
        let resampled = ResampledLibrary::new(&ctx.library, &bands)?;
        let mut samples = Vec::new();
        let mut references = Vec::new();
        for t in targets {
            let reference = resampled.vector(ctx.material(&t.material)?).expect("library id").clone();
            for &[r, c] in &t.pixels {
                if r >= image.height() || c >= image.width() {
                    return Err(PipelineError::Data(format!("calibration pixel ({r}, {c}) is outside the image")));
                }
                let px = image.pixel(r, c).ok_or_else(|| PipelineError::Data(format!("calibration pixel ({r}, {c}) has no data")))?;
                samples.push(BandVector::new(px));
                references.push(reference.clone());
            }
        }
        fit_calibration(&samples, &references)?
    };
    let calibrated = apply_calibration(&image, &adjustment)?;
    write_json(&adjustment, &dir.join("adjustment.json"))?;
    write_f32(&calibrated.grid, &dir.join(CALIBRATED))?;
    let samples: usize = targets.iter().map(|t| t.pixels.len()).sum();
    Ok(counts([("calibration_samples", samples), ("bands", bands.len())]))
}

fn classify(ctx: &Context<'_>, dir: &Path) -> Result<Counts, PipelineError> {
    let cfg = &ctx.cfg.classify;
    let image = ctx.vnir(&ctx.upstream(Stage::Calibrate, CALIBRATED))?;
    let bands = ctx.cfg.band_set()?;
    let (clusters, classes) = quantize_vnir(&image, cfg.k, cfg.stride, ctx.cfg.seed())?;
    let catalog = build_material_catalog(&clusters, &ctx.library, &bands)?;
    let mut map = class_to_material_map(&classes, &catalog)?;
    let mut rules = Vec::new();
    for r in &cfg.remap {
        let target = ctx.material(&r.target)?;
        let source = match parse_selector(&r.source) {
            Some(Selector::Material(name)) => RemapSource::Material(ctx.material(name)?),
            Some(Selector::Tag(tag)) => RemapSource::Tag(tag.to_string()),
            None => return Err(PipelineError::Config(vec![format!("bad remap source `{}`", r.source)])),
        };
        rules.push(RemapRule { source, context: r.context, target });
    }
    let table = RemapTable::new(rules)?;
    if !table.is_empty() {
        map = apply_remap(&map, &table, &ctx.library, None)?;
    }
    if ctx.cfg.inputs.roads.is_some() {
        for name in [&cfg.road_material, &cfg.path_material] {
            let id = ctx.material(name)?;
            if !map.palette.contains(&id) {
                map.palette.push(id);
            }
        }
    }
    let mixture = build_mixture_map(&map, cfg.upsample, cfg.sigma)?;

    write_envi_raster_named(&classes.grid, &dir.join("classes.hdr"), &dir.join("classes.img"), &EnviOptions::new(DataType::U16), None)?;
    write_json(&clusters, &dir.join("clusters.json"))?;
    write_json(&catalog, &dir.join("catalog.json"))?;
    map.write(&dir.join(MATERIALS), &ctx.library)?;
    mixture.write(&dir.join(MIXTURE), &ctx.library)?;
    Ok(counts([
        ("clusters", clusters.k),
        ("kmeans_iterations", clusters.iterations),
        ("unique_materials", catalog.unique_count()),
        ("palette", map.palette.len()),
    ]))
}

fn dtm(ctx: &Context<'_>, dir: &Path) -> Result<Counts, PipelineError> {
    let p = &ctx.cfg.dtm;
    let dsm = ctx.dsm()?;
    let initial = build_tile_grid(&dsm, None, &ctx.origin, p)?;
    let tiles = smooth_corners(&initial, p.iterations, p.outlier_threshold)?;
    write_json(&tiles, &dir.join(TILES))?;
    write_f32(&tiles.to_raster(&dsm, &ctx.origin)?, &dir.join(DTM))?;
    let mesh = triangulate_dtm(&tiles, &ctx.origin);
    write_obj(&mesh, &dir.join(TERRAIN))?;
    Ok(counts([("tiles", tiles.rows * tiles.cols), ("terrain_triangles", mesh.triangle_count())]))
}

fn buildings(ctx: &Context<'_>, dir: &Path) -> Result<Counts, PipelineError> {
    let cfg = &ctx.cfg.buildings;
    let dsm = ctx.dsm()?;
    let dtm = read_raster(&ctx.upstream(Stage::Dtm, DTM))?;
    let map = ctx.material_map()?;
    if !map.grid.same_dims(&dsm) {
        return Err(PipelineError::Data("the image and the surface model must share a grid".into()));
    }
    let excluded: Vec<MaterialId> = ctx.library.records().iter().filter(|r| cfg.exclude_tags.iter().any(|t| r.has_tag(t))).map(|r| r.id).collect();
    let (w, h) = (dsm.width(), dsm.height());
    let mask_data = (0..w * h).map(|k| f64::from(map.material_at(k / w, k % w).is_some_and(|m| excluded.contains(&m)))).collect();
    let mask = RasterGrid::new(dsm.transform, 1, mask_data, None)?;
    let clusters = segment_buildings(&dsm, &dtm, Some(&mask), cfg.model.height_threshold, cfg.min_pixels)?;
    let edges = if cfg.use_edges {
        let image = ctx.vnir(&ctx.upstream(Stage::Calibrate, CALIBRATED))?;
        Some(compute_edge_map(&image.intensity(), cfg.model.canny_low, cfg.model.canny_high)?)
    } else {
        None
    };
    let extent = dsm.transform.extent(&ctx.origin)?;
    let inputs = BuildingInputs { dsm: &dsm, dtm: &dtm, origin: &ctx.origin, edges: edges.as_ref(), extent: &extent };
    let models = model_buildings(&clusters, &inputs, &cfg.model, ctx.cfg.seed())?;
    write_json(&models, &dir.join(MODELS))?;
    std::fs::write(dir.join("planes.jsonl"), debug_lines(&models))?;
    let planes = models.iter().map(|m| m.regions.len()).sum();
    Ok(counts([("building_clusters", clusters.len()), ("planes_fit", planes)]))
}

fn place(ctx: &Context<'_>, dir: &Path) -> Result<Counts, PipelineError> {
    let cfg = &ctx.cfg.place;
    let seed = ctx.cfg.seed();
    let tiles = ctx.tiles()?;
    let ground = TerrainGround { tiles: &tiles, datum: ctx.origin.elev };
    let mut cars = Vec::new();
    let mut parked = Vec::new();
    if let Some(features) = ctx.roads(&tiles)? {
        let catalog = ctx.catalog(&ctx.cfg.assets.cars)?;
        cars = place_cars_on_roads(&features.network, &catalog, &cfg.roads, seed)?;
        parked = place_parking(&features.parking, &catalog, &cfg.parking, seed)?;
    }
    let mut trees = Vec::new();
    let mut shortfall = 0;
    if cfg.trees.count > 0 {
        let map = ctx.material_map()?;
        let mut weights: BTreeMap<MaterialId, f64> = BTreeMap::new();
        for (selector, &w) in &cfg.trees.weights {
            for id in ctx.select(selector)? {
                let e = weights.entry(id).or_insert(0.0);
                *e = e.max(w);
            }
        }
        let density = density_map_from_materials(&map, &weights, &ctx.origin, cfg.trees.count)?;
        let catalog = ctx.catalog(&ctx.cfg.assets.trees)?;
        let [lo, hi] = cfg.trees.scale_range;
        let placed = place_by_density(&density, &catalog, cfg.trees.count, cfg.trees.min_separation, (lo, hi), &ground, seed)?;
        shortfall = placed.shortfall;
        trees = placed.records;
    }
    for (name, records) in LISTS.iter().zip([&cars, &parked, &trees]) {
        write_instance_list(records, &dir.join(format!("{name}.txt")))?;
    }
    Ok(counts([
        ("road_cars", cars.len()),
        ("parked_cars", parked.len()),
        ("trees", trees.len()),
        ("tree_shortfall", shortfall),
        ("objects_placed", cars.len() + parked.len() + trees.len()),
    ]))
}

/// Most common palette index among map pixels inside any of the outlines.
fn dominant_material(map: &MaterialMap, frame: &PixelFrame, model: &BuildingModel) -> Option<usize> {
    let mut tally = vec![0usize; map.palette.len()];
    for r in 0..frame.height {
        for c in 0..frame.width {
            let (x, y) = frame.center(r, c);
            if model.regions.iter().any(|reg| contains_point(&reg.boundary, [x, y])) {
                if let Some(i) = map.index_at(r, c) {
                    tally[i] += 1;
                }
            }
        }
    }
    let (best, &n) = tally.iter().enumerate().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))?;
    (n > 0).then_some(best)
}

fn assemble(ctx: &Context<'_>, dir: &Path) -> Result<Counts, PipelineError> {
    let cfg = ctx.cfg;
    let map = ctx.material_map()?;
    let db = MaterialDatabase::from_palette(&map.palette, &ctx.library)?;
    let terrain = read_obj(&ctx.upstream(Stage::Dtm, TERRAIN))?;
    let tiles = ctx.tiles()?;
    let models: Vec<BuildingModel> = serde_json::from_str(&std::fs::read_to_string(ctx.upstream(Stage::Buildings, MODELS))?)?;
    let frame = PixelFrame::new(&map.grid.transform, &ctx.origin)?;
    let mut buildings = Vec::new();
    for m in models.iter().filter(|m| !m.meshes.is_empty()) {
        let mut mesh = Mesh::default();
        for part in &m.meshes {
            mesh.append(&part.mesh);
        }
        buildings.push((mesh, dominant_material(&map, &frame, m)));
    }
    let decals = match ctx.roads(&tiles)? {
        Some(features) => {
            let index = |name: &str| -> Result<usize, PipelineError> {
                let id = ctx.material(name)?;
                map.palette
                    .iter()
                    .position(|&p| p == id)
                    .ok_or_else(|| PipelineError::Data(format!("decal material `{name}` is missing from the palette")))
            };
            let materials = DecalMaterials { road: index(&cfg.classify.road_material)?, path: index(&cfg.classify.path_material)? };
            let ground = TerrainGround { tiles: &tiles, datum: ctx.origin.elev };
            build_decal_meshes(&features.network, cfg.place.lane_width, materials, &ground)?
        }
        None => Vec::new(),
    };
    let mut instances = BTreeMap::new();
    for name in LISTS {
        instances.insert(name.to_string(), read_instance_list(&ctx.upstream(Stage::Place, &format!("{name}.txt")))?);
    }
    let mut assets = cfg.assets.trees.clone();
    for (id, entry) in &cfg.assets.cars {
        if assets.insert(id.clone(), entry.clone()).is_some_and(|prev| prev != *entry) {
            return Err(PipelineError::Config(vec![format!("asset `{id}` is defined twice with different settings")]));
        }
    }
    let reference = |stage: Stage, file: &str| format!("../{}/{file}", stage.as_str());
    let bundle = SceneBundle {
        origin: ctx.origin,
        bands: cfg.band_set()?.intervals().to_vec(),
        terrain,
        buildings,
        decals,
        instances,
        assets: AssetCatalog::new(assets)?,
        material_db: db,
        maps: vec![
            MapReference { name: "materials".into(), kind: MapKind::Material, path: reference(Stage::Classify, MATERIALS) },
            MapReference { name: "mixture".into(), kind: MapKind::Mixture, path: reference(Stage::Classify, MIXTURE) },
        ],
    };
    let manifest = assemble_scene(&bundle, dir)?;
    let instance_total = manifest.instances.iter().map(|i| i.count).sum();
    Ok(counts([("meshes", manifest.meshes.len()), ("materials", manifest.material_database.count), ("instances", instance_total)]))
}
