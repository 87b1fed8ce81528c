//! Greedy sequential RANSAC plane extraction with roof priors.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{Matrix3, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::geo::{Point3, PointCloud};
use crate::rng::Stream;

/// Draw budget and early-exit confidence for one extraction round.
pub const MAX_DRAWS: usize = 10_000;
pub const SUCCESS_PROBABILITY: f64 = 0.999;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacPriors {
    /// Largest accepted angle between the plane normal and +z, in degrees.
    pub max_slope_deg: f64,
    pub min_points: usize,
    /// Inlier distance to the plane, in meters.
    pub epsilon: f64,
    /// Cell size of the occupancy grid used for the connectivity test, in
    /// meters.
    pub bitmap_epsilon: f64,
}

impl Default for RansacPriors {
    fn default() -> Self {
        Self { max_slope_deg: 50.0, min_points: 75, epsilon: 0.35, bitmap_epsilon: 0.35 }
    }
}

/// Plane `normal . p = d` with an upward unit normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanePrimitive {
    pub normal: Point3,
    pub d: f64,
    /// Indices into the fitted cloud.
    pub inliers: Vec<usize>,
    pub rms: f64,
}

impl PlanePrimitive {
    pub fn distance(&self, p: &Point3) -> f64 {
        self.normal.dot(p) - self.d
    }

    /// Elevation of the plane above `(x, y)`.
    pub fn z_at(&self, x: f64, y: f64) -> f64 {
        (self.d - self.normal.x * x - self.normal.y * y) / self.normal.z
    }

    /// Angle between the normal and +z, in degrees.
    pub fn slope_deg(&self) -> f64 {
        self.normal.z.clamp(-1.0, 1.0).acos().to_degrees()
    }

    pub fn satisfies(&self, priors: &RansacPriors) -> bool {
        (self.normal.norm() - 1.0).abs() < 1e-9
            && self.normal.z > 0.0
            && self.slope_deg() < priors.max_slope_deg
            && self.inliers.len() >= priors.min_points
    }
}

fn upward(normal: Point3, through: Point3) -> Option<(Point3, f64)> {
    let mut n = normal.normalized()?;
    if n.z < 0.0 {
        n = -n;
    }
    Some((n, n.dot(&through)))
}

/// Least-squares plane through `points` (smallest principal axis).
pub fn fit_plane_pca(points: &[Point3]) -> Option<(Point3, f64)> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let c = points.iter().fold(Point3::default(), |a, p| a + *p) * (1.0 / n);
    let mut cov = Matrix3::zeros();
    for p in points {
        let q = *p - c;
        let v = nalgebra::Vector3::new(q.x, q.y, q.z);
        cov += v * v.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let (k, _) = eig.eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |best, (i, &v)| if v < best.1 { (i, v) } else { best });
    let e = eig.eigenvectors.column(k);
    upward(Point3::new(e[0], e[1], e[2]), c)
}

/// Largest 8-connected group of `candidates` on a horizontal grid with
/// cells of `cell` meters. Ties go to the group containing the smallest
/// cell key.
fn largest_component(points: &[Point3], candidates: &[usize], cell: f64) -> Vec<usize> {
    let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for &i in candidates {
        let p = points[i];
        cells.entry(((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)).or_default().push(i);
    }
    let mut seen: BTreeMap<(i64, i64), bool> = cells.keys().map(|&k| (k, false)).collect();
    let mut best: Vec<usize> = Vec::new();
    for &start in cells.keys() {
        if seen[&start] {
            continue;
        }
        let mut group = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen.insert(start, true);
        while let Some((cx, cy)) = queue.pop_front() {
            group.extend_from_slice(&cells[&(cx, cy)]);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let k = (cx + dx, cy + dy);
                    if let Some(s) = seen.get_mut(&k) {
                        if !*s {
                            *s = true;
                            queue.push_back(k);
                        }
                    }
                }
            }
        }
        if group.len() > best.len() {
            best = group;
        }
    }
    best.sort_unstable();
    best
}

fn inliers_of(points: &[Point3], pool: &[usize], n: Point3, d: f64, eps: f64) -> Vec<usize> {
    pool.iter().copied().filter(|&i| (n.dot(&points[i]) - d).abs() <= eps).collect()
}

fn rms(points: &[Point3], idx: &[usize], n: Point3, d: f64) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    (idx.iter().map(|&i| (n.dot(&points[i]) - d).powi(2)).sum::<f64>() / idx.len() as f64).sqrt()
}

/// Extracts roof planes one at a time, largest consensus first.
///
/// Each round draws 3-point samples until the adaptive bound for
/// [`SUCCESS_PROBABILITY`] or [`MAX_DRAWS`] is reached. A candidate scores
/// the largest connected (at `bitmap_epsilon`) set of its inliers within
/// `epsilon`, and only candidates within the slope prior are scored. The
/// winner is refined by PCA, its inliers are recollected, and it is accepted
/// if it still meets the priors; its inliers then leave the pool.
///
/// After extraction every claimed point moves to the accepted plane it is
/// closest to, and planes are refitted on their final inliers.
pub fn fit_planes_ransac(cloud: &PointCloud, priors: &RansacPriors, seed: u64) -> Vec<PlanePrimitive> {
    let points = &cloud.points;
    let mut rng = Stream::new(seed);
    let max_slope_cos = priors.max_slope_deg.to_radians().cos();
    let mut pool: Vec<usize> = (0..points.len()).collect();
    let mut planes: Vec<(Point3, f64, Vec<usize>)> = Vec::new();

    while pool.len() >= priors.min_points.max(3) {
        let n = pool.len();
        let mut best: Option<(Point3, f64, Vec<usize>)> = None;
        let mut budget = MAX_DRAWS;
        let mut draws = 0;
        while draws < budget {
            draws += 1;
            let a = rng.below(n);
            let mut b = rng.below(n);
            while b == a {
                b = rng.below(n);
            }
            let mut c = rng.below(n);
            while c == a || c == b {
                c = rng.below(n);
            }
            let (pa, pb, pc) = (points[pool[a]], points[pool[b]], points[pool[c]]);
            let Some((normal, d)) = upward((pb - pa).cross(&(pc - pa)), pa) else {
                continue;
            };
            if normal.z <= max_slope_cos {
                continue;
            }
            let best_len = best.as_ref().map_or(0, |b| b.2.len());
            let raw = inliers_of(points, &pool, normal, d, priors.epsilon);
            if raw.len() <= best_len {
                continue;
            }
            let comp = largest_component(points, &raw, priors.bitmap_epsilon);
            if comp.len() > best_len {
                let w = comp.len() as f64 / n as f64;
                let miss = 1.0 - w.powi(3);
                if miss <= 0.0 {
                    budget = draws;
                } else {
                    let need = ((1.0 - SUCCESS_PROBABILITY).ln() / miss.ln()).ceil();
                    budget = budget.min(need.max(1.0) as usize);
                }
                best = Some((normal, d, comp));
            }
        }
        let Some((_, _, comp)) = best else { break };
        let pts: Vec<Point3> = comp.iter().map(|&i| points[i]).collect();
        let Some((normal, d)) = fit_plane_pca(&pts) else { break };
        if normal.z <= max_slope_cos {
            break;
        }
        let refined = largest_component(points, &inliers_of(points, &pool, normal, d, priors.epsilon), priors.bitmap_epsilon);
        if refined.len() < priors.min_points {
            break;
        }
        pool.retain(|i| refined.binary_search(i).is_err());
        planes.push((normal, d, refined));
    }

    // Move each claimed point to a strictly closer plane whose inliers
    // occupy its grid cell or one next to it, then refit.
    let cell_of = |p: &Point3| ((p.x / priors.bitmap_epsilon).floor() as i64, (p.y / priors.bitmap_epsilon).floor() as i64);
    let occupied: Vec<std::collections::BTreeSet<(i64, i64)>> = planes.iter().map(|p| p.2.iter().map(|&i| cell_of(&points[i])).collect()).collect();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); planes.len()];
    for (owner, plane) in planes.iter().enumerate() {
        for &i in &plane.2 {
            let p = points[i];
            let (cx, cy) = cell_of(&p);
            let residual = |k: usize| (planes[k].0.dot(&p) - planes[k].1).abs();
            let mut best = owner;
            for k in 0..planes.len() {
                let near = (-1..=1).any(|dx| (-1..=1).any(|dy| occupied[k].contains(&(cx + dx, cy + dy))));
                if k != owner && near && residual(k) < residual(best) {
                    best = k;
                }
            }
            members[best].push(i);
        }
    }
    for m in &mut members {
        m.sort_unstable();
    }
    planes
        .into_iter()
        .zip(members)
        .filter_map(|((normal, d, _), idx)| {
            let pts: Vec<Point3> = idx.iter().map(|&i| points[i]).collect();
            let (normal, d) = fit_plane_pca(&pts).unwrap_or((normal, d));
            let plane = PlanePrimitive { rms: rms(points, &idx, normal, d), normal, d, inliers: idx };
            plane.satisfies(priors).then_some(plane)
        })
        .collect()
}
