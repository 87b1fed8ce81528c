use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geo::{Extent, LvcsOrigin, RasterGrid};

use super::TerrainError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TerrainParams {
    /// Tile edge length in meters.
    pub tile_size: f64,
    /// Histogram bin width in meters.
    pub bin_width: f64,
    /// Corner deviation from the plane through the other three corners that
    /// marks it as an outlier, in meters.
    pub outlier_threshold: f64,
    pub iterations: usize,
}

impl Default for TerrainParams {
    fn default() -> Self {
        Self { tile_size: 32.0, bin_width: 1.0, outlier_threshold: 1.0, iterations: 10 }
    }
}

impl TerrainParams {
    pub fn validate(&self) -> Result<(), TerrainError> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.tile_size) || !positive(self.bin_width) || !(self.outlier_threshold >= 0.0) {
            return Err(TerrainError::InvalidParameter(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileCell {
    /// Initial ground estimate. Tiles without samples inherit it from the
    /// nearest tile that has them.
    pub ground_elev: f64,
    /// Corner elevations in NW, NE, SW, SE order.
    pub corner_elevs: [f64; 4],
    pub sample_count: usize,
    /// Highest surface sample in the tile, if any.
    pub dsm_max: Option<f64>,
}

/// Square tiles laid out from the north-west corner of the scene, with
/// `(rows + 1) x (cols + 1)` shared corner elevations. Elevations are
/// absolute (same datum as the surface model).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TileGrid {
    pub tile_size: f64,
    pub rows: usize,
    pub cols: usize,
    pub extent: Extent,
    pub tiles: Vec<TileCell>,
    pub corners: Vec<f64>,
}

impl TileGrid {
    pub fn tile(&self, row: usize, col: usize) -> &TileCell {
        &self.tiles[row * self.cols + col]
    }

    pub fn corner(&self, i: usize, j: usize) -> f64 {
        self.corners[i * (self.cols + 1) + j]
    }

    /// Ground position of shared corner `(i, j)`, clamped to the extent.
    pub fn corner_xy(&self, i: usize, j: usize) -> (f64, f64) {
        (
            (self.extent.min_x + j as f64 * self.tile_size).min(self.extent.max_x),
            (self.extent.max_y - i as f64 * self.tile_size).max(self.extent.min_y),
        )
    }

    fn tile_corners(&self, r: usize, c: usize) -> [f64; 4] {
        [self.corner(r, c), self.corner(r, c + 1), self.corner(r + 1, c), self.corner(r + 1, c + 1)]
    }

    /// Copies the shared corners into each tile's corner array after edits.
    pub fn sync_tile_corners(&mut self) {
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.tile_corners(r, c);
                self.tiles[r * self.cols + c].corner_elevs = v;
            }
        }
    }

    /// Terrain elevation at a ground position, interpolated on the same
    /// triangles as the mesh. Positions outside the extent are clamped.
    pub fn elevation_at(&self, x: f64, y: f64) -> f64 {
        let fx = ((x - self.extent.min_x) / self.tile_size).clamp(0.0, self.cols as f64);
        let fy = ((self.extent.max_y - y) / self.tile_size).clamp(0.0, self.rows as f64);
        let j = (fx.floor() as usize).min(self.cols - 1);
        let i = (fy.floor() as usize).min(self.rows - 1);
        // Local coordinates inside the cell, measured in its (possibly
        // clipped) ground size.
        let (x0, y0) = self.corner_xy(i, j);
        let (x1, y1) = self.corner_xy(i + 1, j + 1);
        let s = ((x.clamp(x0, x1) - x0) / (x1 - x0)).clamp(0.0, 1.0);
        let t = ((y0 - y.clamp(y1, y0)) / (y0 - y1)).clamp(0.0, 1.0);
        let [nw, ne, sw, se] = self.tile_corners(i, j);
        if t >= s {
            // Triangle NW, SW, SE.
            nw + t * (sw - nw) + s * (se - sw)
        } else {
            // Triangle NW, SE, NE.
            nw + s * (ne - nw) + t * (se - ne)
        }
    }

    /// Surface model resampled on a raster grid at pixel centers.
    pub fn to_raster(&self, like: &RasterGrid, origin: &LvcsOrigin) -> Result<RasterGrid, TerrainError> {
        let frame = crate::geo::PixelFrame::new(&like.transform, origin)?;
        let (w, h) = (like.width(), like.height());
        let data = (0..w * h)
            .map(|k| {
                let (x, y) = frame.center(k / w, k % w);
                self.elevation_at(x, y)
            })
            .collect();
        Ok(RasterGrid::new(like.transform, 1, data, None)?)
    }
}

/// Ground elevation of one tile: the center of the lowest histogram bin
/// holding more than 1% of the samples, clamped to the span of the samples
/// inside that bin. Bins start at the minimum sample.
///
/// When no bin reaches 1% (samples spread over more than 100 bins) the
/// fullest bin is used instead.
pub fn tile_ground_elevation(elevations: &[f64], bin_width: f64) -> Option<f64> {
    let samples: Vec<f64> = elevations.iter().copied().filter(|v| v.is_finite()).collect();
    if samples.is_empty() || !(bin_width > 0.0) {
        return None;
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = ((hi - lo) / bin_width).floor() as usize + 1;
    let mut count = vec![0usize; bins];
    let mut span = vec![(f64::INFINITY, f64::NEG_INFINITY); bins];
    for &v in &samples {
        let b = (((v - lo) / bin_width).floor() as usize).min(bins - 1);
        count[b] += 1;
        span[b] = (span[b].0.min(v), span[b].1.max(v));
    }
    let need = 0.01 * samples.len() as f64;
    let bin =
        (0..bins).find(|&b| count[b] as f64 > need).unwrap_or_else(|| (0..bins).fold(0, |best, b| if count[b] > count[best] { b } else { best }));
    let center = lo + (bin as f64 + 0.5) * bin_width;
    Some(center.clamp(span[bin].0, span[bin].1))
}

/// Tiles the surface model and estimates each tile's ground elevation from
/// samples outside `mask` (nonzero = excluded, e.g. water or trees). The
/// returned grid has its corners initialised but not yet smoothed.
pub fn build_tile_grid(dsm: &RasterGrid, mask: Option<&RasterGrid>, origin: &LvcsOrigin, params: &TerrainParams) -> Result<TileGrid, TerrainError> {
    params.validate()?;
    if let Some(m) = mask {
        if !m.same_dims(dsm) {
            return Err(TerrainError::MaskMismatch { mask_w: m.width(), mask_h: m.height(), dsm_w: dsm.width(), dsm_h: dsm.height() });
        }
    }
    let t = &dsm.transform;
    let extent = t.extent(origin)?;
    let ts = params.tile_size;
    let cols = ((extent.width() / ts).ceil() as usize).max(1);
    let rows = ((extent.height() / ts).ceil() as usize).max(1);
    let mut samples = vec![Vec::new(); rows * cols];
    let mut dsm_max: Vec<Option<f64>> = vec![None; rows * cols];
    for r in 0..dsm.height() {
        let tr = ((((r as f64 + 0.5) * t.pixel_size_y) / ts) as usize).min(rows - 1);
        for c in 0..dsm.width() {
            let v = dsm.get(0, r, c);
            if dsm.is_nodata(v) || !v.is_finite() {
                continue;
            }
            let tc = ((((c as f64 + 0.5) * t.pixel_size_x) / ts) as usize).min(cols - 1);
            let k = tr * cols + tc;
            dsm_max[k] = Some(dsm_max[k].map_or(v, |m: f64| m.max(v)));
            if mask.is_none_or(|m| m.get(0, r, c) == 0.0) {
                samples[k].push(v);
            }
        }
    }
    let ground: Vec<Option<f64>> = samples.iter().map(|s| tile_ground_elevation(s, params.bin_width)).collect();
    if ground.iter().all(Option::is_none) {
        return Err(TerrainError::Empty("every tile is empty or masked".into()));
    }
    let filled: Vec<f64> = (0..rows * cols)
        .map(|k| {
            ground[k].unwrap_or_else(|| {
                let (r, c) = ((k / cols) as i64, (k % cols) as i64);
                let nearest = (0..rows * cols)
                    .filter(|&o| ground[o].is_some())
                    .min_by_key(|&o| {
                        let (dr, dc) = ((o / cols) as i64 - r, (o % cols) as i64 - c);
                        (dr * dr + dc * dc, o)
                    })
                    .expect("at least one tile has ground");
                ground[nearest].expect("filtered")
            })
        })
        .collect();
    let tiles = (0..rows * cols)
        .map(|k| TileCell { ground_elev: filled[k], corner_elevs: [0.0; 4], sample_count: samples[k].len(), dsm_max: dsm_max[k] })
        .collect();
    let mut grid = TileGrid { tile_size: ts, rows, cols, extent, tiles, corners: initial_corners(&filled, rows, cols) };
    grid.sync_tile_corners();
    Ok(grid)
}

/// Each corner is the mean of its four surrounding tiles. Tiles beyond the
/// border are extrapolated linearly from the two nearest rows/columns, so a
/// planar set of tile values yields planar corners.
fn initial_corners(ground: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let along = |v0: f64, v1: Option<f64>| v1.map_or(v0, |v1| 2.0 * v0 - v1);
    let at_row = |r: i64, c: usize| -> f64 {
        let g = |r: usize| ground[r * cols + c];
        if r < 0 {
            along(g(0), (rows > 1).then(|| g(1)))
        } else if r as usize >= rows {
            along(g(rows - 1), (rows > 1).then(|| g(rows - 2)))
        } else {
            g(r as usize)
        }
    };
    let ghost = |r: i64, c: i64| -> f64 {
        if c < 0 {
            along(at_row(r, 0), (cols > 1).then(|| at_row(r, 1)))
        } else if c as usize >= cols {
            along(at_row(r, cols - 1), (cols > 1).then(|| at_row(r, cols - 2)))
        } else {
            at_row(r, c as usize)
        }
    };
    let mut corners = Vec::with_capacity((rows + 1) * (cols + 1));
    for i in 0..=rows as i64 {
        for j in 0..=cols as i64 {
            corners.push(0.25 * (ghost(i - 1, j - 1) + ghost(i - 1, j) + ghost(i, j - 1) + ghost(i, j)));
        }
    }
    corners
}

/// Elevation at each corner of a tile predicted by the plane through the
/// other three.
fn leave_one_out(c: [f64; 4]) -> [f64; 4] {
    let [nw, ne, sw, se] = c;
    [ne + sw - se, nw + se - sw, nw + se - ne, ne + sw - nw]
}

/// One smoothing round. Every tile picks its worst corner (largest gap to
/// the mean of the other three; ties go to NW, NE, SW, SE in that order)
/// and flags it when it lies farther than `threshold` from the plane
/// through the other three. A flagged corner takes the mean prediction of
/// the tiles that flagged it. Returns the number of corners changed.
pub fn smooth_step(grid: &mut TileGrid, threshold: f64) -> usize {
    let (rows, cols) = (grid.rows, grid.cols);
    let flags: Vec<Option<(usize, f64)>> = (0..rows * cols)
        .into_par_iter()
        .map(|k| {
            let c = grid.tile_corners(k / cols, k % cols);
            let sum: f64 = c.iter().sum();
            let gap = |i: usize| (c[i] - (sum - c[i]) / 3.0).abs();
            let worst = (0..4).fold(0, |best, i| if gap(i) > gap(best) { i } else { best });
            let predicted = leave_one_out(c)[worst];
            ((c[worst] - predicted).abs() > threshold).then_some((worst, predicted))
        })
        .collect();
    let mut acc = vec![(0.0, 0usize); grid.corners.len()];
    for (k, flag) in flags.iter().enumerate() {
        if let Some((which, value)) = *flag {
            let (r, c) = (k / cols, k % cols);
            let (i, j) = (r + which / 2, c + which % 2);
            let slot = &mut acc[i * (cols + 1) + j];
            slot.0 += value;
            slot.1 += 1;
        }
    }
    let mut changed = 0;
    for (corner, (sum, n)) in grid.corners.iter_mut().zip(acc) {
        if n > 0 {
            *corner = sum / n as f64;
            changed += 1;
        }
    }
    grid.sync_tile_corners();
    changed
}

/// Runs `iterations` smoothing rounds, then lowers any corner that would
/// rise above the highest surface sample of an adjacent tile.
pub fn smooth_corners(grid: &TileGrid, iterations: usize, outlier_threshold: f64) -> Result<TileGrid, TerrainError> {
    if !(outlier_threshold >= 0.0) {
        return Err(TerrainError::InvalidParameter(format!("outlier threshold {outlier_threshold}")));
    }
    let mut out = grid.clone();
    for _ in 0..iterations {
        if smooth_step(&mut out, outlier_threshold) == 0 {
            break;
        }
    }
    for i in 0..=out.rows {
        for j in 0..=out.cols {
            let cap = adjacent_tiles(out.rows, out.cols, i, j).filter_map(|(r, c)| out.tile(r, c).dsm_max).fold(f64::INFINITY, f64::min);
            let k = i * (out.cols + 1) + j;
            out.corners[k] = out.corners[k].min(cap);
        }
    }
    if out.corners.iter().any(|v| !v.is_finite()) {
        return Err(TerrainError::Empty("non-finite corner elevation".into()));
    }
    out.sync_tile_corners();
    Ok(out)
}

fn adjacent_tiles(rows: usize, cols: usize, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
    [(i.wrapping_sub(1), j.wrapping_sub(1)), (i.wrapping_sub(1), j), (i, j.wrapping_sub(1)), (i, j)]
        .into_iter()
        .filter(move |&(r, c)| r < rows && c < cols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoTransform;

    fn grid_from_ground(ground: &[f64], rows: usize, cols: usize) -> TileGrid {
        let mut g = TileGrid {
            tile_size: 10.0,
            rows,
            cols,
            extent: Extent { min_x: 0.0, max_x: 10.0 * cols as f64, min_y: 0.0, max_y: 10.0 * rows as f64 },
            tiles: ground.iter().map(|&v| TileCell { ground_elev: v, corner_elevs: [0.0; 4], sample_count: 100, dsm_max: Some(100.0) }).collect(),
            corners: initial_corners(ground, rows, cols),
        };
        g.sync_tile_corners();
        g
    }

    #[test]
    fn histogram_examples() {
        assert_eq!(tile_ground_elevation(&[10.0; 40], 1.0), Some(10.0));
        let mut mixed = vec![10.0; 50];
        mixed.extend(vec![30.0; 150]);
        assert_eq!(tile_ground_elevation(&mixed, 1.0), Some(10.0));
        let mut spike = vec![2.0];
        spike.extend(vec![30.0; 999]);
        assert_eq!(tile_ground_elevation(&spike, 1.0), Some(30.0));
        assert_eq!(tile_ground_elevation(&[], 1.0), None);
        let ramp: Vec<f64> = (0..100).map(|i| 5.0 + 0.01 * i as f64).collect();
        assert_eq!(tile_ground_elevation(&ramp, 1.0), Some(5.5));
    }

    #[test]
    fn constant_and_planar_grids_are_fixed_points() {
        let flat = grid_from_ground(&[5.0; 12], 3, 4);
        let out = smooth_corners(&flat, 10, 1.0).unwrap();
        assert!(out.corners.iter().all(|&v| v == 5.0));

        let (rows, cols) = (4, 5);
        let plane = |x: f64, y: f64| 3.0 + 0.2 * x - 0.35 * y;
        let ground: Vec<f64> = (0..rows * cols).map(|k| plane((k % cols) as f64 * 10.0 + 5.0, 40.0 - (k / cols) as f64 * 10.0 - 5.0)).collect();
        let g = grid_from_ground(&ground, rows, cols);
        let out = smooth_corners(&g, 10, 1.0).unwrap();
        for i in 0..=rows {
            for j in 0..=cols {
                let (x, y) = out.corner_xy(i, j);
                assert!((out.corner(i, j) - plane(x, y)).abs() < 1e-9);
            }
        }
        assert!((out.elevation_at(12.3, 27.9) - plane(12.3, 27.9)).abs() < 1e-9);
    }

    #[test]
    fn roof_tile_is_removed_monotonically() {
        let (rows, cols) = (5, 5);
        let mut ground = vec![0.0; 25];
        ground[12] = 20.0;
        let mut g = grid_from_ground(&ground, rows, cols);
        let max_dev = |g: &TileGrid| g.corners.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut history = vec![max_dev(&g)];
        for _ in 0..10 {
            smooth_step(&mut g, 1.0);
            history.push(max_dev(&g));
        }
        assert!(history[0] > 1.0);
        assert!(history.windows(2).all(|w| w[1] <= w[0]), "{history:?}");
        assert!(*history.last().unwrap() < 0.5);

        let mut two = vec![0.0; 49];
        for k in [23, 24, 25, 30, 31] {
            two[k] = 18.0;
        }
        let out = smooth_corners(&grid_from_ground(&two, 7, 7), 10, 1.0).unwrap();
        assert!(out.corners.iter().all(|v| v.abs() < 0.5), "{:?}", out.corners);
    }

    #[test]
    fn corners_never_exceed_surface_maximum() {
        let mut g = grid_from_ground(&[5.0; 4], 2, 2);
        g.tiles[0].dsm_max = Some(4.0);
        let out = smooth_corners(&g, 3, 1.0).unwrap();
        assert_eq!(out.corner(0, 0), 4.0);
        assert_eq!(out.corner(1, 1), 4.0);
        assert_eq!(out.corner(2, 2), 5.0);
    }

    #[test]
    fn tiles_from_raster_with_mask_and_empty_tile() {
        let origin = LvcsOrigin::new(0.0, 0.0, 0.0).unwrap();
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1.0, 8, 4).unwrap();
        let mut dsm = RasterGrid::filled(t, 1, 7.0, Some(-9999.0)).unwrap();
        for r in 0..4 {
            for c in 4..8 {
                dsm.set(0, r, c, 30.0);
            }
        }
        let mut mask = RasterGrid::filled(t, 1, 0.0, None).unwrap();
        for r in 0..4 {
            for c in 4..8 {
                mask.set(0, r, c, 1.0);
            }
        }
        let params = TerrainParams { tile_size: 4.0, ..TerrainParams::default() };
        let g = build_tile_grid(&dsm, Some(&mask), &origin, &params).unwrap();
        assert_eq!((g.rows, g.cols), (1, 2));
        assert_eq!(g.tile(0, 1).sample_count, 0);
        assert_eq!(g.tile(0, 1).ground_elev, 7.0);
        assert_eq!(g.tile(0, 1).dsm_max, Some(30.0));
        let all_masked = RasterGrid::filled(t, 1, 1.0, None).unwrap();
        assert!(build_tile_grid(&dsm, Some(&all_masked), &origin, &params).is_err());
    }
}
