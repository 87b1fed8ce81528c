//! Building reconstruction from the surface model: clustering of elevated
//! pixels, roof-plane extraction, outline construction and regularisation,
//! and extrusion to the terrain.

pub mod boundary;
pub mod edges;
pub mod extrude;
pub mod polygon;
pub mod ransac;
pub mod snap;

pub use boundary::{alpha_boundary, clean_boundary, simplify_boundary};
pub use edges::{compute_edge_map, dominant_axes, EdgeMap};
pub use extrude::{extrude_region, BuildingMesh, PlanarRegion};
pub use polygon::Polygon;
pub use ransac::{fit_planes_ransac, PlanePrimitive, RansacPriors};
pub use snap::snap_boundary;

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{Extent, GeoError, LvcsOrigin, PixelFrame, Point3, PointCloud, RasterGrid};
use crate::rng::{derive_seed, tags};

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate region: {0}")]
    Degenerate(String),
    #[error("ground elevation {ground} is not below the roof minimum {roof}")]
    GroundAboveRoof { ground: f64, roof: f64 },
    #[error("raster dimensions differ: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuildingParams {
    /// Height above the terrain that marks a pixel as built, in meters.
    pub height_threshold: f64,
    pub priors: RansacPriors,
    /// Alpha-shape circumradius limit, in meters.
    pub alpha: f64,
    /// Smallest roof face kept, in square meters.
    pub min_area: f64,
    /// Douglas-Peucker tolerance applied before snapping, in meters.
    pub simplify_tolerance: f64,
    pub angle_tolerance_deg: f64,
    pub canny_low: f64,
    pub canny_high: f64,
}

impl Default for BuildingParams {
    fn default() -> Self {
        Self {
            height_threshold: 2.5,
            priors: RansacPriors::default(),
            alpha: 5.0,
            min_area: boundary::DEFAULT_MIN_AREA,
            simplify_tolerance: 0.5,
            angle_tolerance_deg: snap::DEFAULT_ANGLE_TOLERANCE_DEG,
            canny_low: edges::DEFAULT_LOW,
            canny_high: edges::DEFAULT_HIGH,
        }
    }
}

/// Everything reconstructed for one building cluster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildingModel {
    pub index: usize,
    pub pixel_count: usize,
    /// Wall base elevation in the local frame.
    pub ground_z: f64,
    /// Dominant axis (radians) and its confidence, when one was found.
    pub axis: Option<(f64, f64)>,
    pub regions: Vec<PlanarRegion>,
    pub meshes: Vec<BuildingMesh>,
}

/// One line of the per-building debug log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildingRecord {
    pub building: usize,
    pub region: usize,
    pub normal: [f64; 3],
    pub d: f64,
    pub slope_deg: f64,
    pub inliers: usize,
    pub rms: f64,
    pub vertex_count: usize,
    pub area: f64,
}

impl BuildingModel {
    pub fn records(&self) -> Vec<BuildingRecord> {
        self.regions
            .iter()
            .enumerate()
            .map(|(i, r)| BuildingRecord {
                building: self.index,
                region: i,
                normal: [r.plane.normal.x, r.plane.normal.y, r.plane.normal.z],
                d: r.plane.d,
                slope_deg: r.plane.slope_deg(),
                inliers: r.plane.inliers.len(),
                rms: r.plane.rms,
                vertex_count: r.boundary.len(),
                area: polygon::signed_area(&r.boundary),
            })
            .collect()
    }

    pub fn footprints(&self) -> Vec<Polygon> {
        self.regions.iter().map(|r| r.boundary.clone()).collect()
    }
}

/// Groups pixels standing more than `height_threshold` above the terrain
/// into 8-connected clusters, skipping excluded pixels (nonzero in
/// `exclude`). Clusters are ordered by their first pixel in raster order;
/// clusters smaller than `min_pixels` are dropped.
pub fn segment_buildings(
    dsm: &RasterGrid,
    dtm: &RasterGrid,
    exclude: Option<&RasterGrid>,
    height_threshold: f64,
    min_pixels: usize,
) -> Result<Vec<Vec<(usize, usize)>>, StructureError> {
    if !dsm.same_dims(dtm) || exclude.is_some_and(|m| !m.same_dims(dsm)) {
        return Err(StructureError::DimensionMismatch("surface, terrain and exclusion rasters must share a grid".into()));
    }
    let (w, h) = (dsm.width(), dsm.height());
    let elevated: Vec<bool> = (0..w * h)
        .map(|k| {
            let (r, c) = (k / w, k % w);
            let s = dsm.get(0, r, c);
            !dsm.is_nodata(s) && s - dtm.get(0, r, c) > height_threshold && exclude.is_none_or(|m| m.get(0, r, c) == 0.0)
        })
        .collect();
    let mut seen = vec![false; w * h];
    let mut clusters = Vec::new();
    for k in 0..w * h {
        if !elevated[k] || seen[k] {
            continue;
        }
        seen[k] = true;
        let mut queue = VecDeque::from([k]);
        let mut pixels = Vec::new();
        while let Some(p) = queue.pop_front() {
            let (r, c) = ((p / w) as i64, (p % w) as i64);
            pixels.push((r as usize, c as usize));
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr >= 0 && nc >= 0 && nr < h as i64 && nc < w as i64 {
                        let q = nr as usize * w + nc as usize;
                        if elevated[q] && !seen[q] {
                            seen[q] = true;
                            queue.push_back(q);
                        }
                    }
                }
            }
        }
        if pixels.len() >= min_pixels {
            pixels.sort_unstable();
            clusters.push(pixels);
        }
    }
    Ok(clusters)
}

/// Shared read-only inputs for reconstructing building clusters.
pub struct BuildingInputs<'a> {
    pub dsm: &'a RasterGrid,
    /// Terrain elevations on the surface-model grid.
    pub dtm: &'a RasterGrid,
    pub origin: &'a LvcsOrigin,
    /// Edge map on the same grid, if an image is available.
    pub edges: Option<&'a EdgeMap>,
    /// Texture extent for UVs.
    pub extent: &'a Extent,
}

/// Reconstructs one building cluster. Roof faces whose outline degenerates
/// or that do not clear the ground are skipped.
pub fn model_building(
    index: usize,
    pixels: &[(usize, usize)],
    inputs: &BuildingInputs<'_>,
    params: &BuildingParams,
    seed: u64,
) -> Result<BuildingModel, StructureError> {
    let frame = PixelFrame::new(&inputs.dsm.transform, inputs.origin)?;
    let mut cloud = PointCloud::default();
    let mut ground_z = f64::INFINITY;
    for &(r, c) in pixels {
        let (x, y) = frame.center(r, c);
        cloud.push(Point3::new(x, y, inputs.dsm.get(0, r, c) - inputs.origin.elev), (r, c));
        ground_z = ground_z.min(inputs.dtm.get(0, r, c) - inputs.origin.elev);
    }
    let axis = inputs.edges.and_then(|e| {
        let mut mask = RasterGrid::filled(e.grid.transform, 1, 0.0, None).ok()?;
        let (w, h) = (mask.width() as i64, mask.height() as i64);
        for &(r, c) in pixels {
            for dr in -2..=2 {
                for dc in -2..=2 {
                    let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                    if nr >= 0 && nc >= 0 && nr < h && nc < w {
                        mask.set(0, nr as usize, nc as usize, 1.0);
                    }
                }
            }
        }
        dominant_axes(e, Some(&mask)).ok()
    });

    let planes = fit_planes_ransac(&cloud, &params.priors, derive_seed(seed, tags::RANSAC, index as u64));
    let mut regions = Vec::new();
    for plane in planes {
        let xy: Vec<[f64; 2]> = plane.inliers.iter().map(|&i| cloud.points[i].xy()).collect();
        let Ok(loops) = alpha_boundary(&xy, params.alpha) else {
            continue;
        };
        for outline in clean_boundary(&loops, params.min_area) {
            let simple = simplify_boundary(&outline, params.simplify_tolerance);
            let theta = axis.or_else(|| edges::polygon_axes(&simple)).map(|a| a.0);
            let snapped = match theta {
                Some(t) => snap_boundary(&simple, t, params.angle_tolerance_deg.to_radians()),
                None => simple,
            };
            regions.push(PlanarRegion { plane: plane.clone(), boundary: snapped });
        }
    }
    let mut kept = Vec::new();
    let mut meshes = Vec::new();
    for region in regions {
        if let Ok(mesh) = extrude_region(&region, ground_z, inputs.extent) {
            meshes.push(BuildingMesh { roof_triangles: region.boundary.len() - 2, mesh, building: index, region: kept.len() });
            kept.push(region);
        }
    }
    Ok(BuildingModel { index, pixel_count: pixels.len(), ground_z, axis, regions: kept, meshes })
}

/// Reconstructs every cluster in parallel; results keep cluster order.
pub fn model_buildings(
    clusters: &[Vec<(usize, usize)>],
    inputs: &BuildingInputs<'_>,
    params: &BuildingParams,
    seed: u64,
) -> Result<Vec<BuildingModel>, StructureError> {
    clusters.par_iter().enumerate().map(|(i, px)| model_building(i, px, inputs, params, seed)).collect()
}

/// Serialises debug records as JSON lines.
pub fn debug_lines(models: &[BuildingModel]) -> String {
    let mut out = String::new();
    for m in models {
        for r in m.records() {
            out.push_str(&serde_json::to_string(&r).expect("plain data"));
            out.push('\n');
        }
    }
    out
}
