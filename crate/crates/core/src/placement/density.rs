use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use crate::geo::{Extent, LvcsOrigin, Point3, RasterGrid};
use crate::material::MaterialMap;
use crate::rng::{tags, Stream};
use crate::spectral::MaterialId;

use super::types::{AssetCatalog, Ground, PlacementRecord};
use super::PlacementError;

/// Relative placement density per pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMap {
    pub grid: RasterGrid,
    /// Ground extent of the grid in the local frame.
    pub extent: Extent,
    pub max_count: usize,
}

impl DensityMap {
    pub fn new(grid: RasterGrid, extent: Extent, max_count: usize) -> Result<Self, PlacementError> {
        if grid.bands != 1 || grid.data().iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(PlacementError::InvalidParameter("density must be one band of finite non-negative values".into()));
        }
        Ok(Self { grid, extent, max_count })
    }

    pub fn total(&self) -> f64 {
        self.grid.data().iter().sum()
    }

    /// Density of the pixel containing a ground position (0 outside).
    pub fn value_at(&self, x: f64, y: f64) -> f64 {
        let (w, h) = (self.grid.width(), self.grid.height());
        let c = ((x - self.extent.min_x) / self.extent.width() * w as f64).floor();
        let r = ((self.extent.max_y - y) / self.extent.height() * h as f64).floor();
        if c < 0.0 || r < 0.0 || c >= w as f64 || r >= h as f64 {
            return 0.0;
        }
        self.grid.get(0, r as usize, c as usize)
    }
}

/// Per-pixel weight lookup by material; unlisted materials and nodata get 0.
pub fn density_map_from_materials(
    map: &MaterialMap,
    weights: &BTreeMap<MaterialId, f64>,
    origin: &LvcsOrigin,
    max_count: usize,
) -> Result<DensityMap, PlacementError> {
    if let Some((id, w)) = weights.iter().find(|(_, &w)| !(w >= 0.0) || !w.is_finite()) {
        return Err(PlacementError::InvalidParameter(format!("weight {w} for material {id}")));
    }
    let (w, h) = (map.grid.width(), map.grid.height());
    let data = (0..w * h).map(|k| map.material_at(k / w, k % w).and_then(|m| weights.get(&m).copied()).unwrap_or(0.0)).collect();
    let grid = RasterGrid::new(map.grid.transform, 1, data, None)?;
    DensityMap::new(grid, map.grid.transform.extent(origin)?, max_count)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityPlacement {
    pub records: Vec<PlacementRecord>,
    pub attempts: usize,
    /// Requested instances that could not be placed.
    pub shortfall: usize,
}

/// Rejection sampling of `total_count` instances. A pixel is drawn with
/// probability proportional to its density and a uniform position inside
/// it; the draw is rejected when an accepted instance lies closer than
/// `min_separation`. Sampling stops after `total_count` acceptances or
/// `50 * total_count` attempts. Accepted instances get a uniform heading in
/// `[-pi, pi)`, a uniform scale in `scale_range`, a uniform asset and
/// variant, and their height from `ground`.
pub fn place_by_density(
    density: &DensityMap,
    catalog: &AssetCatalog,
    total_count: usize,
    min_separation: f64,
    scale_range: (f64, f64),
    ground: &dyn Ground,
    seed: u64,
) -> Result<DensityPlacement, PlacementError> {
    if total_count == 0 {
        return Ok(DensityPlacement { records: Vec::new(), attempts: 0, shortfall: 0 });
    }
    catalog.require()?;
    let (lo, hi) = scale_range;
    if !(lo > 0.0) || !(hi >= lo) || !(min_separation >= 0.0) {
        return Err(PlacementError::InvalidParameter(format!("scale range ({lo}, {hi}), separation {min_separation}")));
    }
    let mut cdf = Vec::with_capacity(density.grid.data().len());
    let mut acc = 0.0;
    for &v in density.grid.data() {
        acc += v;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(PlacementError::InvalidParameter("density map is zero everywhere".into()));
    }
    let w = density.grid.width();
    let px = density.extent.width() / w as f64;
    let py = density.extent.height() / density.grid.height() as f64;
    let cell = min_separation.max(f64::MIN_POSITIVE);
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut rng = Stream::derived(seed, tags::TREES, 0);
    let mut records = Vec::<PlacementRecord>::with_capacity(total_count);
    let max_attempts = total_count.saturating_mul(50);
    let mut attempts = 0;
    while records.len() < total_count && attempts < max_attempts {
        attempts += 1;
        let u = rng.uniform() * acc;
        let k = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let (r, c) = (k / w, k % w);
        let x = density.extent.min_x + (c as f64 + rng.uniform()) * px;
        let y = density.extent.max_y - (r as f64 + rng.uniform()) * py;
        if min_separation > 0.0 {
            let (bx, by) = key(x, y);
            let crowded = (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    buckets.get(&(bx + dx, by + dy)).is_some_and(|v| {
                        v.iter().any(|&j| {
                            let p: &Point3 = &records[j].position;
                            (p.x - x).hypot(p.y - y) < min_separation
                        })
                    })
                })
            });
            if crowded {
                continue;
            }
            buckets.entry((bx, by)).or_default().push(records.len());
        }
        let heading = -PI + 2.0 * PI * rng.uniform();
        let scale = rng.range(lo, hi);
        let (asset_id, variant) = catalog.pick(&mut rng);
        records.push(PlacementRecord { asset_id, position: Point3::new(x, y, ground.height(x, y)), heading, scale, material_variant: variant });
    }
    Ok(DensityPlacement { shortfall: total_count - records.len(), attempts, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{GeoTransform, INDEX_NODATA};
    use crate::placement::types::{AssetEntry, FlatGround};

    fn catalog() -> AssetCatalog {
        AssetCatalog::new([
            ("oak".to_string(), AssetEntry { mesh: "oak.obj".into(), variants: 2, footprint_radius: 3.0 }),
            ("maple".to_string(), AssetEntry { mesh: "maple.obj".into(), variants: 1, footprint_radius: 2.0 }),
        ])
        .unwrap()
    }

    fn density(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> DensityMap {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1.0, w, h).unwrap();
        let data = (0..w * h).map(|k| f(k / w, k % w)).collect();
        let extent = Extent { min_x: 0.0, max_x: w as f64, min_y: 0.0, max_y: h as f64 };
        DensityMap::new(RasterGrid::new(t, 1, data, None).unwrap(), extent, 0).unwrap()
    }

    #[test]
    fn material_weights() {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1.0, 2, 2).unwrap();
        let map = MaterialMap::new(RasterGrid::new(t, 1, vec![0.0, 1.0, 1.0, INDEX_NODATA], Some(INDEX_NODATA)).unwrap(), vec![7, 9]).unwrap();
        let origin = LvcsOrigin::new(0.0, 0.0, 0.0).unwrap();
        let weights = BTreeMap::from([(7, 1.0), (9, 3.0)]);
        let d = density_map_from_materials(&map, &weights, &origin, 10).unwrap();
        assert_eq!(d.grid.data(), &[1.0, 3.0, 3.0, 0.0]);
        let only_rock = BTreeMap::from([(7, 0.0)]);
        assert!(density_map_from_materials(&map, &only_rock, &origin, 1).unwrap().grid.data().iter().all(|&v| v == 0.0));
        assert!(density_map_from_materials(&map, &BTreeMap::from([(7, -1.0)]), &origin, 1).is_err());
    }

    #[test]
    fn exact_count_without_separation_and_zero_count() {
        let d = density(20, 20, |_, _| 1.0);
        let out = place_by_density(&d, &catalog(), 500, 0.0, (0.8, 1.2), &FlatGround(2.0), 3).unwrap();
        assert_eq!(out.records.len(), 500);
        assert_eq!(out.shortfall, 0);
        assert!(out.records.iter().all(|r| r.position.z == 2.0 && (0.8..1.2).contains(&r.scale)));
        assert!(out.records.iter().all(|r| (-PI..PI).contains(&r.heading)));
        assert!(place_by_density(&d, &catalog(), 0, 1.0, (1.0, 1.0), &FlatGround(0.0), 3).unwrap().records.is_empty());
    }

    #[test]
    fn zero_density_half_stays_empty_and_separation_holds() {
        let d = density(40, 20, |_, c| if c < 20 { 0.0 } else { 1.0 });
        let out = place_by_density(&d, &catalog(), 150, 1.5, (1.0, 1.0), &FlatGround(0.0), 9).unwrap();
        assert!(out.records.iter().all(|r| r.position.x >= 20.0));
        for (i, a) in out.records.iter().enumerate() {
            for b in &out.records[i + 1..] {
                assert!((a.position.x - b.position.x).hypot(a.position.y - b.position.y) >= 1.5);
            }
        }
    }

    #[test]
    fn over_constrained_reports_shortfall() {
        let d = density(4, 4, |_, _| 1.0);
        let out = place_by_density(&d, &catalog(), 100, 3.0, (1.0, 1.0), &FlatGround(0.0), 1).unwrap();
        assert!(out.records.len() < 100);
        assert_eq!(out.shortfall, 100 - out.records.len());
        assert_eq!(out.attempts, 5000);
    }
}
