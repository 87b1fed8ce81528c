//! Region outlines: alpha boundaries of projected inliers, loop cleanup,
//! and Douglas-Peucker simplification.

use std::collections::BTreeMap;

use delaunator::{triangulate, Point, EMPTY};

use super::polygon::{dist, make_ccw, proper_intersection, segment_distance, signed_area, Polygon};
use super::StructureError;

/// Default smallest kept region, in square meters.
pub const DEFAULT_MIN_AREA: f64 = 7.0;

fn circumradius(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let (ab, bc, ca) = (dist(a, b), dist(b, c), dist(c, a));
    let area2 = ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs();
    if area2 == 0.0 {
        f64::INFINITY
    } else {
        ab * bc * ca / (2.0 * area2)
    }
}

/// Outer loops of the alpha shape of `points`: Delaunay triangles with
/// circumradius at most `alpha` are kept, and edges bordering exactly one
/// kept triangle are chained into counter-clockwise loops. Hole loops are
/// dropped. Loops may touch themselves at pinch vertices; see
/// [`clean_boundary`].
pub fn alpha_boundary(points: &[[f64; 2]], alpha: f64) -> Result<Vec<Polygon>, StructureError> {
    if points.len() < 3 {
        return Err(StructureError::Degenerate(format!("{} points cannot bound a region", points.len())));
    }
    let pts: Vec<Point> = points.iter().map(|p| Point { x: p[0], y: p[1] }).collect();
    let tri = triangulate(&pts);
    if tri.triangles.is_empty() {
        return Err(StructureError::Degenerate("points are collinear".into()));
    }
    let ntri = tri.triangles.len() / 3;
    let kept: Vec<bool> = (0..ntri)
        .map(|t| {
            let [a, b, c] = [0, 1, 2].map(|k| points[tri.triangles[3 * t + k]]);
            circumradius(a, b, c) <= alpha
        })
        .collect();
    let Some(first) = kept.iter().position(|&k| k) else {
        return Ok(Vec::new());
    };
    let orient = {
        let [a, b, c] = [0, 1, 2].map(|k| points[tri.triangles[3 * first + k]]);
        super::polygon::cross(a, b, c).signum()
    };

    // Directed boundary edges with the kept region on their left.
    let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut edge_count = 0;
    for e in 0..tri.triangles.len() {
        if !kept[e / 3] {
            continue;
        }
        let opp = tri.halfedges[e];
        if opp != EMPTY && kept[opp / 3] {
            continue;
        }
        let next = if e % 3 == 2 { e - 2 } else { e + 1 };
        let (mut from, mut to) = (tri.triangles[e], tri.triangles[next]);
        if orient < 0.0 {
            std::mem::swap(&mut from, &mut to);
        }
        outgoing.entry(from).or_default().push(to);
        edge_count += 1;
    }
    for v in outgoing.values_mut() {
        v.sort_unstable();
    }

    let mut loops = Vec::new();
    let mut used = 0;
    while used < edge_count {
        let start = *outgoing.iter().find(|(_, v)| !v.is_empty()).expect("edges remain").0;
        let mut chain = vec![start];
        let mut cur = start;
        loop {
            let next = {
                let outs = outgoing.get_mut(&cur).expect("closed boundary");
                outs.remove(0)
            };
            used += 1;
            if next == start {
                break;
            }
            chain.push(next);
            cur = next;
            if outgoing.get(&cur).is_none_or(|v| v.is_empty()) {
                break;
            }
        }
        let poly: Polygon = chain.iter().map(|&i| points[i]).collect();
        if poly.len() >= 3 && signed_area(&poly) > 0.0 {
            loops.push(poly);
        }
    }
    Ok(loops)
}

/// Splits a loop at repeated vertices into simple sub-loops.
fn split_at_repeats(poly: &[[f64; 2]]) -> Vec<Polygon> {
    let mut out = Vec::new();
    let mut stack: Vec<[f64; 2]> = Vec::new();
    for &p in poly.iter().chain(std::iter::once(&poly[0])) {
        if let Some(pos) = stack.iter().position(|&q| q == p) {
            let sub: Polygon = stack.drain(pos + 1..).collect();
            let mut sub_loop = vec![stack[pos]];
            sub_loop.extend(sub);
            if sub_loop.len() >= 3 {
                out.push(sub_loop);
            }
        } else {
            stack.push(p);
        }
    }
    // The closing point matched stack[0]; anything left is already emitted.
    out
}

/// Inserts every proper self-crossing point as a vertex on both edges.
fn insert_crossings(poly: &[[f64; 2]]) -> Polygon {
    let n = poly.len();
    let mut extra: Vec<Vec<(f64, [f64; 2])>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if let Some((p, t, u)) = proper_intersection(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]) {
                extra[i].push((t, p));
                extra[j].push((u, p));
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        out.push(poly[i]);
        extra[i].sort_by(|a, b| a.0.total_cmp(&b.0));
        out.extend(extra[i].iter().map(|e| e.1));
    }
    out
}

/// Splits self-intersecting loops into simple loops, drops loops with fewer
/// than three vertices or an area below `min_area`, and orients the rest
/// counter-clockwise.
pub fn clean_boundary(polygons: &[Polygon], min_area: f64) -> Vec<Polygon> {
    let mut out = Vec::new();
    for poly in polygons {
        let mut p: Polygon = poly.clone();
        p.dedup();
        while p.len() > 1 && p.first() == p.last() {
            p.pop();
        }
        if p.len() < 3 {
            continue;
        }
        for sub in split_at_repeats(&insert_crossings(&p)) {
            let area = signed_area(&sub).abs();
            if sub.len() >= 3 && area > 0.0 && area >= min_area {
                out.push(make_ccw(sub));
            }
        }
    }
    out
}

fn douglas_peucker(chain: &[[f64; 2]], tol: f64, keep: &mut Vec<[f64; 2]>) {
    let (a, b) = (chain[0], chain[chain.len() - 1]);
    let (idx, d) =
        (1..chain.len() - 1).map(|i| (i, segment_distance(chain[i], a, b))).fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
    if idx > 0 && d > tol {
        douglas_peucker(&chain[..=idx], tol, keep);
        douglas_peucker(&chain[idx..], tol, keep);
    } else {
        keep.push(a);
    }
}

/// Douglas-Peucker simplification of a closed loop. The loop is split at its
/// first vertex and the vertex farthest from it. Returns the input when the
/// result would have fewer than three vertices.
pub fn simplify_boundary(poly: &[[f64; 2]], tolerance: f64) -> Polygon {
    if poly.len() <= 3 || tolerance <= 0.0 {
        return poly.to_vec();
    }
    let far = (1..poly.len()).fold(1, |best, i| if dist(poly[0], poly[i]) > dist(poly[0], poly[best]) { i } else { best });
    let mut keep = Vec::new();
    douglas_peucker(&poly[..=far], tolerance, &mut keep);
    let mut back: Polygon = poly[far..].to_vec();
    back.push(poly[0]);
    douglas_peucker(&back, tolerance, &mut keep);
    if keep.len() < 3 || signed_area(&keep).abs() == 0.0 {
        poly.to_vec()
    } else {
        keep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::polygon::{is_ccw, is_simple, outline_hausdorff};

    fn grid(x0: f64, y0: f64, size: f64, step: f64) -> Vec<[f64; 2]> {
        let n = (size / step).round() as usize;
        let mut pts = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                pts.push([x0 + i as f64 * step, y0 + j as f64 * step]);
            }
        }
        pts
    }

    #[test]
    fn dense_square_gives_one_loop_near_the_square() {
        let pts = grid(0.0, 0.0, 9.9, 0.3);
        let loops = alpha_boundary(&pts, 5.0).unwrap();
        assert_eq!(loops.len(), 1);
        assert!(is_ccw(&loops[0]));
        let truth = vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]];
        assert!(outline_hausdorff(&loops[0], &truth) < 0.5);
    }

    #[test]
    fn infinite_alpha_is_the_convex_hull() {
        let pts = vec![[0.0, 0.0], [4.0, 0.0], [4.0, 3.0], [0.0, 3.0], [2.0, 1.0], [1.0, 2.0], [3.0, 1.5]];
        let loops = alpha_boundary(&pts, f64::INFINITY).unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 4);
        assert!((signed_area(&loops[0]) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn separated_clusters_give_two_loops_and_collinear_fails() {
        let mut pts = grid(0.0, 0.0, 3.0, 0.3);
        pts.extend(grid(23.0, 0.0, 3.0, 0.3));
        assert_eq!(alpha_boundary(&pts, 5.0).unwrap().len(), 2);
        let line: Vec<[f64; 2]> = (0..10).map(|i| [i as f64, 2.0 * i as f64]).collect();
        assert!(matches!(alpha_boundary(&line, 5.0), Err(StructureError::Degenerate(_))));
    }

    #[test]
    fn figure_eight_splits_in_two() {
        let eight = vec![[0.0, 0.0], [4.0, 4.0], [4.0, 2.0], [4.0, 0.0], [0.0, 4.0], [0.0, 2.0]];
        let parts = clean_boundary(&[eight], 0.0);
        assert_eq!(parts.len(), 2);
        for p in &parts {
            assert!(is_simple(p) && is_ccw(p));
            assert!((signed_area(p) - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cleanup_keeps_squares_and_drops_small_or_flat_loops() {
        let sq = vec![[0.0, 0.0], [3.0, 0.0], [3.0, 3.0], [0.0, 3.0]];
        assert_eq!(clean_boundary(std::slice::from_ref(&sq), 7.0), vec![sq.clone()]);
        assert!(clean_boundary(&[vec![[0.0, 0.0], [1.0, 0.0]]], 0.0).is_empty());
        assert!(clean_boundary(&[vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]]], 0.0).is_empty());
        let small = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]];
        assert!(clean_boundary(&[small], 7.0).is_empty());
        let pinched = vec![[0.0, 0.0], [3.0, 0.0], [3.0, 3.0], [6.0, 3.0], [6.0, 6.0], [3.0, 6.0], [3.0, 3.0], [0.0, 3.0]];
        assert_eq!(clean_boundary(&[pinched], 1.0).len(), 2);
    }

    #[test]
    fn simplification_removes_staircase_noise() {
        let mut poly = Vec::new();
        for i in 0..10 {
            poly.push([i as f64, if i % 2 == 0 { 0.0 } else { 0.1 }]);
        }
        poly.extend([[10.0, 0.0], [10.0, 5.0], [0.0, 5.0]]);
        let s = simplify_boundary(&poly, 0.3);
        assert_eq!(s.len(), 4);
        assert!(is_simple(&s));
    }
}
