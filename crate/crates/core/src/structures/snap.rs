//! Regularisation of region outlines onto a building's dominant axes.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::polygon::{dist, is_simple, signed_area, Polygon};

pub const DEFAULT_ANGLE_TOLERANCE_DEG: f64 = 15.0;
const MERGE_TOLERANCE_DEG: f64 = 1.0;

#[derive(Clone, Copy, Debug)]
struct Line {
    point: [f64; 2],
    angle: f64,
}

fn intersect(a: &Line, b: &Line) -> Option<[f64; 2]> {
    let (da, db) = ([a.angle.cos(), a.angle.sin()], [b.angle.cos(), b.angle.sin()]);
    let denom = da[0] * db[1] - da[1] * db[0];
    if denom.abs() < 1e-9 {
        return None;
    }
    let q = [b.point[0] - a.point[0], b.point[1] - a.point[1]];
    let t = (q[0] * db[1] - q[1] * db[0]) / denom;
    Some([a.point[0] + t * da[0], a.point[1] + t * da[1]])
}

/// Signed difference between two directions, in `(-pi, pi]`.
fn turn(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

/// Snaps every edge within `tolerance` (radians) of `theta0 + k * 45deg` to
/// that direction by rotating it about its midpoint, merges runs of
/// consecutive edges that end up parallel within 1 degree, and rebuilds
/// vertices by intersecting neighbouring lines. If the result is not simple,
/// the snapped edges involved in the conflict revert to their original
/// direction; the input is returned when nothing valid remains.
pub fn snap_boundary(poly: &[[f64; 2]], theta0: f64, tolerance: f64) -> Polygon {
    let n = poly.len();
    if n < 3 {
        return poly.to_vec();
    }
    let mut allow = vec![true; n];
    for _ in 0..=n {
        match rebuild(poly, theta0, tolerance, &allow) {
            Ok(p) => return p,
            Err(conflict) if conflict.iter().any(|&i| allow[i]) => {
                for i in conflict {
                    allow[i] = false;
                }
            }
            Err(_) => break,
        }
    }
    poly.to_vec()
}

/// Returns the snapped polygon, or the original edges that took part in a
/// self-intersection.
fn rebuild(poly: &[[f64; 2]], theta0: f64, tolerance: f64, allow: &[bool]) -> Result<Polygon, Vec<usize>> {
    let n = poly.len();
    let mut lines = Vec::with_capacity(n);
    let mut lengths = Vec::with_capacity(n);
    let mut snapped = vec![false; n];
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        let angle = (b[1] - a[1]).atan2(b[0] - a[0]);
        let mid = [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5];
        let mut best: Option<f64> = None;
        if allow[i] {
            for k in 0..4 {
                let target = theta0 + k as f64 * FRAC_PI_4;
                let diff = (angle - target + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
                if diff.abs() <= tolerance && best.is_none_or(|d: f64| diff.abs() < d.abs()) {
                    best = Some(diff);
                }
            }
        }
        if let Some(diff) = best {
            snapped[i] = true;
            lines.push(Line { point: mid, angle: angle - diff });
        } else {
            lines.push(Line { point: mid, angle });
        }
        lengths.push(dist(a, b));
    }

    // Group consecutive near-parallel edges, starting after a real corner.
    let merge = MERGE_TOLERANCE_DEG.to_radians();
    let parallel = |i: usize, j: usize| turn(lines[i].angle, lines[j].angle).abs() < merge;
    let Some(start) = (0..n).find(|&i| !parallel((i + n - 1) % n, i)) else {
        return Ok(poly.to_vec());
    };
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for step in 0..n {
        let i = (start + step) % n;
        match groups.last_mut() {
            Some(g) if parallel(*g.last().expect("non-empty"), i) => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    if groups.len() < 3 {
        return Err((0..n).filter(|&i| snapped[i]).collect());
    }
    let merged: Vec<Line> = groups
        .iter()
        .map(|g| {
            if g.len() == 1 {
                return lines[g[0]];
            }
            let total: f64 = g.iter().map(|&i| lengths[i]).sum::<f64>().max(f64::MIN_POSITIVE);
            let point = [
                g.iter().map(|&i| lines[i].point[0] * lengths[i]).sum::<f64>() / total,
                g.iter().map(|&i| lines[i].point[1] * lengths[i]).sum::<f64>() / total,
            ];
            let angle = match g.iter().filter(|&&i| snapped[i]).max_by(|&&a, &&b| lengths[a].total_cmp(&lengths[b])) {
                Some(&i) => lines[i].angle,
                None => {
                    let (sx, sy) =
                        g.iter().fold((0.0, 0.0), |(x, y), &i| (x + lengths[i] * lines[i].angle.cos(), y + lengths[i] * lines[i].angle.sin()));
                    sy.atan2(sx)
                }
            };
            Line { point, angle }
        })
        .collect();

    let m = groups.len();
    let mut out = Vec::with_capacity(m);
    for g in 0..m {
        let (prev, cur) = (&merged[(g + m - 1) % m], &merged[g]);
        // Original vertex where the previous group ends and this one starts.
        let original = poly[groups[g][0]];
        let reach = groups[(g + m - 1) % m].iter().chain(&groups[g]).map(|&i| lengths[i]).sum::<f64>();
        out.push(match intersect(prev, cur) {
            Some(p) if dist(p, original) <= reach => p,
            _ => original,
        });
    }
    out.dedup();
    if out.len() >= 3 && out.first() == out.last() {
        out.pop();
    }
    if out.len() >= 3 && is_simple(&out) && signed_area(&out).signum() == signed_area(poly).signum() {
        return Ok(out);
    }
    Err(conflicting_edges(&out, &groups, &snapped))
}

fn conflicting_edges(out: &[[f64; 2]], groups: &[Vec<usize>], snapped: &[bool]) -> Vec<usize> {
    use super::polygon::segments_intersect;
    let m = out.len();
    let mut bad = vec![false; groups.len()];
    if m == groups.len() {
        for i in 0..m {
            for j in i + 2..m {
                if i == 0 && j == m - 1 {
                    continue;
                }
                if segments_intersect(out[i], out[(i + 1) % m], out[j], out[(j + 1) % m]) {
                    // Edge i of the output runs along group i.
                    bad[i] = true;
                    bad[j] = true;
                }
            }
        }
    }
    let mut edges: Vec<usize> = groups.iter().zip(&bad).filter(|(_, &b)| b).flat_map(|(g, _)| g.iter().copied()).filter(|&i| snapped[i]).collect();
    if edges.is_empty() {
        edges = (0..snapped.len()).filter(|&i| snapped[i]).collect();
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::polygon::raster_iou;

    fn deg(d: f64) -> f64 {
        d.to_radians()
    }

    fn edge_angles(p: &[[f64; 2]]) -> Vec<f64> {
        (0..p.len())
            .map(|i| {
                let (a, b) = (p[i], p[(i + 1) % p.len()]);
                (b[1] - a[1]).atan2(b[0] - a[0]).to_degrees()
            })
            .collect()
    }

    #[test]
    fn aligned_square_is_a_fixed_point() {
        let sq = vec![[0.0, 0.0], [5.0, 0.0], [5.0, 5.0], [0.0, 5.0]];
        let out = snap_boundary(&sq, 0.0, deg(15.0));
        assert_eq!(out.len(), 4);
        for (a, b) in out.iter().zip(&sq) {
            assert!(dist(*a, *b) < 1e-9);
        }
    }

    #[test]
    fn jittered_square_becomes_a_rectangle() {
        let jittered = vec![[0.1, -0.2], [10.2, 0.3], [9.8, 10.1], [-0.3, 9.7]];
        let out = snap_boundary(&jittered, 0.0, deg(15.0));
        assert_eq!(out.len(), 4);
        for a in edge_angles(&out) {
            let r = (a + 360.0) % 90.0;
            assert!(r.min(90.0 - r) < 1e-9, "{a}");
        }
        let truth = vec![vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]];
        assert!(raster_iou(&[out], &truth, 0.05) >= 0.95);
    }

    #[test]
    fn chamfer_stays_at_45_degrees() {
        let oct = [[0.0, 0.0], [10.0, 0.0], [10.0, 6.0], [7.0, 9.0], [0.0, 9.0]];
        let rotated: Vec<[f64; 2]> = oct.iter().map(|p| [p[0] + 0.05 * p[1], p[1] - 0.04 * p[0]]).collect();
        let out = snap_boundary(&rotated, 0.0, deg(15.0));
        assert_eq!(out.len(), 5);
        let angles = edge_angles(&out);
        assert!((angles[2] - 135.0).abs() < 1e-9, "{angles:?}");
        assert!(is_simple(&out));
    }

    #[test]
    fn collinear_runs_merge_and_area_change_is_small() {
        let poly = vec![[0.0, 0.0], [4.0, 0.1], [8.0, -0.1], [12.0, 0.0], [12.0, 6.0], [0.0, 6.0]];
        let out = snap_boundary(&poly, 0.0, deg(15.0));
        assert_eq!(out.len(), 4);
        let change = (signed_area(&out) - signed_area(&poly)).abs() / signed_area(&poly);
        assert!(change < 0.1);
    }

    #[test]
    fn rotated_axes() {
        let (s, c) = deg(30.0).sin_cos();
        let rect: Vec<[f64; 2]> =
            [[0.0, 0.0], [8.0, 0.3], [8.2, 5.0], [-0.1, 4.9]].iter().map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect();
        let out = snap_boundary(&rect, deg(30.0), deg(15.0));
        for a in edge_angles(&out) {
            let r = (a - 30.0 + 360.0) % 90.0;
            assert!(r.min(90.0 - r) < 1e-9, "{a}");
        }
    }
}
