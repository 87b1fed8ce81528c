//! Canny edge detection and dominant-orientation estimation.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use crate::geo::filter::{gaussian_blur, reflect};
use crate::geo::RasterGrid;

use super::StructureError;

pub const CANNY_SIGMA: f64 = 1.4;
pub const DEFAULT_LOW: f64 = 0.1;
pub const DEFAULT_HIGH: f64 = 0.2;
pub const AXIS_BINS: usize = 18;

/// Binary edge raster plus the gradient direction at every pixel, in
/// radians counter-clockwise from east (the ground frame, north up).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeMap {
    pub grid: RasterGrid,
    pub orientation: Vec<f64>,
}

impl EdgeMap {
    pub fn is_edge(&self, row: usize, col: usize) -> bool {
        self.grid.get(0, row, col) != 0.0
    }

    pub fn edge_count(&self) -> usize {
        self.grid.data().iter().filter(|&&v| v != 0.0).count()
    }
}

/// Canny edges of a single-band image: Gaussian smoothing, Sobel gradients,
/// non-maximum suppression, and hysteresis. Thresholds are fractions of the
/// largest gradient magnitude. A pixel survives suppression when it is
/// strictly greater than its neighbour behind the gradient and at least
/// equal to the one ahead, so a symmetric ridge yields a one-pixel line.
pub fn compute_edge_map(image: &RasterGrid, low: f64, high: f64) -> Result<EdgeMap, StructureError> {
    if image.bands != 1 {
        return Err(StructureError::InvalidParameter(format!("edge detection needs one band, got {}", image.bands)));
    }
    if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || high < low {
        return Err(StructureError::InvalidParameter(format!("thresholds low {low}, high {high}")));
    }
    let (w, h) = (image.width(), image.height());
    let valid: Vec<f64> = image.band(0).iter().copied().filter(|&v| !image.is_nodata(v) && v.is_finite()).collect();
    let fill = if valid.is_empty() { 0.0 } else { valid.iter().sum::<f64>() / valid.len() as f64 };
    let plane: Vec<f64> = image.band(0).iter().map(|&v| if image.is_nodata(v) || !v.is_finite() { fill } else { v }).collect();
    let s = gaussian_blur(&plane, w, h, CANNY_SIGMA);
    let at = |r: i64, c: i64| s[reflect(r, h) * w + reflect(c, w)];

    let mut gx = vec![0.0; w * h];
    let mut grow = vec![0.0; w * h];
    let mut mag = vec![0.0; w * h];
    let mut orientation = vec![0.0; w * h];
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            let k = r as usize * w + c as usize;
            gx[k] = (at(r - 1, c + 1) + 2.0 * at(r, c + 1) + at(r + 1, c + 1)) - (at(r - 1, c - 1) + 2.0 * at(r, c - 1) + at(r + 1, c - 1));
            grow[k] = (at(r + 1, c - 1) + 2.0 * at(r + 1, c) + at(r + 1, c + 1)) - (at(r - 1, c - 1) + 2.0 * at(r - 1, c) + at(r - 1, c + 1));
            mag[k] = gx[k].hypot(grow[k]);
            orientation[k] = (-grow[k]).atan2(gx[k]);
        }
    }
    let max = mag.iter().copied().fold(0.0, f64::max);
    let mut edges = vec![0.0; w * h];
    if max > 0.0 {
        let m = |r: i64, c: i64| if r < 0 || c < 0 || r >= h as i64 || c >= w as i64 { 0.0 } else { mag[r as usize * w + c as usize] };
        let mut thin = vec![0.0; w * h];
        for r in 0..h as i64 {
            for c in 0..w as i64 {
                let k = r as usize * w + c as usize;
                if mag[k] == 0.0 {
                    continue;
                }
                let deg = grow[k].atan2(gx[k]).to_degrees().rem_euclid(180.0);
                let (dr, dc) = if !(22.5..157.5).contains(&deg) {
                    (0, 1)
                } else if deg < 67.5 {
                    (1, 1)
                } else if deg < 112.5 {
                    (1, 0)
                } else {
                    (1, -1)
                };
                if mag[k] > m(r - dr, c - dc) && mag[k] >= m(r + dr, c + dc) {
                    thin[k] = mag[k];
                }
            }
        }
        let (lo, hi) = (low * max, high * max);
        let mut queue: VecDeque<usize> = VecDeque::new();
        for k in 0..w * h {
            if thin[k] > 0.0 && thin[k] >= hi {
                edges[k] = 1.0;
                queue.push_back(k);
            }
        }
        while let Some(k) = queue.pop_front() {
            let (r, c) = ((k / w) as i64, (k % w) as i64);
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                        continue;
                    }
                    let n = nr as usize * w + nc as usize;
                    if edges[n] == 0.0 && thin[n] > 0.0 && thin[n] >= lo {
                        edges[n] = 1.0;
                        queue.push_back(n);
                    }
                }
            }
        }
    }
    Ok(EdgeMap { grid: RasterGrid::new(image.transform, 1, edges, None)?, orientation })
}

/// Peak of a weighted orientation histogram folded modulo 90 degrees into
/// [`AXIS_BINS`] bins of 5 degrees centered on multiples of 5 degrees.
/// Returns the peak center in radians and the fraction of the total weight
/// it holds.
pub fn axis_histogram(samples: impl IntoIterator<Item = (f64, f64)>) -> Option<(f64, f64)> {
    let mut bins = [0.0; AXIS_BINS];
    let mut total = 0.0;
    for (angle, weight) in samples {
        if !(weight > 0.0) || !angle.is_finite() {
            continue;
        }
        let deg = angle.rem_euclid(FRAC_PI_2).to_degrees();
        let b = ((deg / 5.0).round() as usize) % AXIS_BINS;
        bins[b] += weight;
        total += weight;
    }
    if total == 0.0 {
        return None;
    }
    let peak = (0..AXIS_BINS).fold(0, |best, b| if bins[b] > bins[best] { b } else { best });
    Some(((peak as f64 * 5.0).to_radians(), bins[peak] / total))
}

/// Dominant orthogonal axis of the edges inside `region_mask` (nonzero
/// pixels; all pixels when absent).
pub fn dominant_axes(edges: &EdgeMap, region_mask: Option<&RasterGrid>) -> Result<(f64, f64), StructureError> {
    let w = edges.grid.width();
    let samples = (0..edges.orientation.len()).filter_map(|k| {
        let (r, c) = (k / w, k % w);
        let inside = region_mask.is_none_or(|m| m.get(0, r, c) != 0.0);
        (inside && edges.is_edge(r, c)).then(|| (edges.orientation[k], 1.0))
    });
    axis_histogram(samples).ok_or_else(|| StructureError::Degenerate("no edge pixels in region".into()))
}

/// Dominant axis of a polygon's own edges, weighted by length. Used when no
/// image edges are available for a region.
pub fn polygon_axes(poly: &[[f64; 2]]) -> Option<(f64, f64)> {
    let n = poly.len();
    axis_histogram((0..n).map(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        ((b[1] - a[1]).atan2(b[0] - a[0]), (b[0] - a[0]).hypot(b[1] - a[1]))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoTransform;
    use crate::rng::Stream;

    fn image(w: usize, h: usize, f: impl Fn(f64, f64) -> f64) -> RasterGrid {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1.0, w, h).unwrap();
        // x east from the left edge, y north from the bottom edge.
        let data = (0..w * h).map(|k| f((k % w) as f64 + 0.5, (h - k / w) as f64 - 0.5)).collect();
        RasterGrid::new(t, 1, data, None).unwrap()
    }

    fn rotated_rect(angle_deg: f64) -> RasterGrid {
        let (s, c) = angle_deg.to_radians().sin_cos();
        image(80, 80, |x, y| {
            let (dx, dy) = (x - 40.0, y - 40.0);
            let (u, v) = (c * dx + s * dy, -s * dx + c * dy);
            if u.abs() < 22.0 && v.abs() < 14.0 {
                1.0
            } else {
                0.0
            }
        })
    }

    #[test]
    fn constant_image_has_no_edges() {
        let e = compute_edge_map(&image(20, 20, |_, _| 3.0), DEFAULT_LOW, DEFAULT_HIGH).unwrap();
        assert_eq!(e.edge_count(), 0);
    }

    #[test]
    fn vertical_step_gives_one_column() {
        let e = compute_edge_map(&image(20, 12, |x, _| if x > 10.0 { 1.0 } else { 0.0 }), DEFAULT_LOW, DEFAULT_HIGH).unwrap();
        for r in 0..12 {
            let cols: Vec<usize> = (0..20).filter(|&c| e.is_edge(r, c)).collect();
            assert_eq!(cols, vec![9], "row {r}");
            assert!(e.orientation[r * 20 + 9].abs() < 1e-12);
        }
    }

    #[test]
    fn inverted_thresholds_are_an_error() {
        assert!(compute_edge_map(&image(4, 4, |_, _| 0.0), 0.3, 0.2).is_err());
    }

    #[test]
    fn axes_of_axis_aligned_and_rotated_rectangles() {
        for angle in [0.0, 30.0, 63.0] {
            let e = compute_edge_map(&rotated_rect(angle), DEFAULT_LOW, DEFAULT_HIGH).unwrap();
            let (theta, conf) = dominant_axes(&e, None).unwrap();
            let diff = (theta.to_degrees() - angle % 90.0 + 45.0).rem_euclid(90.0) - 45.0;
            assert!(diff.abs() <= 2.5, "{angle}: {}", theta.to_degrees());
            assert!(conf > 0.3);
        }
    }

    #[test]
    fn uniform_orientations_have_low_confidence() {
        let mut rng = Stream::new(17);
        let (_, conf) = axis_histogram((0..20_000).map(|_| (rng.range(-std::f64::consts::PI, std::f64::consts::PI), 1.0))).unwrap();
        assert!(conf <= 2.0 / 18.0 + 0.01, "{conf}");
        assert!(axis_histogram(std::iter::empty()).is_none());
    }
}
