//! Planar polygon utilities on `[x, y]` vertex lists (implicitly closed).

pub type Polygon = Vec<[f64; 2]>;

pub fn signed_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

pub fn is_ccw(poly: &[[f64; 2]]) -> bool {
    signed_area(poly) > 0.0
}

pub fn make_ccw(mut poly: Polygon) -> Polygon {
    if signed_area(&poly) < 0.0 {
        poly.reverse();
    }
    poly
}

pub(crate) fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn on_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// True when closed segments `ab` and `cd` share a point.
pub fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (d1, d2) = (cross(c, d, a), cross(c, d, b));
    let (d3, d4) = (cross(a, b, c), cross(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(a, c, d))
        || (d2 == 0.0 && on_segment(b, c, d))
        || (d3 == 0.0 && on_segment(c, a, b))
        || (d4 == 0.0 && on_segment(d, a, b))
}

/// Intersection of two segments when they cross at a single point strictly
/// inside both.
pub fn proper_intersection(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> Option<([f64; 2], f64, f64)> {
    let r = [b[0] - a[0], b[1] - a[1]];
    let s = [d[0] - c[0], d[1] - c[1]];
    let denom = r[0] * s[1] - r[1] * s[0];
    if denom == 0.0 {
        return None;
    }
    let q = [c[0] - a[0], c[1] - a[1]];
    let t = (q[0] * s[1] - q[1] * s[0]) / denom;
    let u = (q[0] * r[1] - q[1] * r[0]) / denom;
    let eps = 1e-12;
    (t > eps && t < 1.0 - eps && u > eps && u < 1.0 - eps).then(|| ([a[0] + t * r[0], a[1] + t * r[1]], t, u))
}

/// No two non-adjacent edges touch, no adjacent edges overlap, and no
/// vertex repeats.
pub fn is_simple(poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    for i in 0..n {
        for j in i + 1..n {
            if poly[i] == poly[j] {
                return false;
            }
        }
    }
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (poly[j], poly[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared endpoint only; collinear folding back is a touch.
                let shared = if j == i + 1 { b } else { a };
                let (other_a, other_b) = if j == i + 1 { (a, d) } else { (b, c) };
                if cross(shared, other_a, other_b) == 0.0 {
                    let u = [other_a[0] - shared[0], other_a[1] - shared[1]];
                    let v = [other_b[0] - shared[0], other_b[1] - shared[1]];
                    if u[0] * v[0] + u[1] * v[1] > 0.0 {
                        return false;
                    }
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Even-odd point-in-polygon test.
pub fn contains_point(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0] {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn perimeter(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| dist(poly[i], poly[(i + 1) % n])).sum()
}

pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Distance from `p` to segment `ab`.
pub fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Symmetric Hausdorff distance between two polygon outlines, sampled at
/// the vertices of each against the edges of the other.
pub fn outline_hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    let one_way = |p: &[[f64; 2]], q: &[[f64; 2]]| {
        p.iter().map(|&v| (0..q.len()).map(|i| segment_distance(v, q[i], q[(i + 1) % q.len()])).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Intersection-over-union of two polygon sets (each read as a union of
/// its members), estimated on a regular grid of `step` meters.
pub fn raster_iou(a: &[Polygon], b: &[Polygon], step: f64) -> f64 {
    let all = a.iter().chain(b).flatten();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p[0]);
        y0 = y0.min(p[1]);
        x1 = x1.max(p[0]);
        y1 = y1.max(p[1]);
    }
    if !x0.is_finite() {
        return 0.0;
    }
    let (nx, ny) = (((x1 - x0) / step).ceil() as usize, ((y1 - y0) / step).ceil() as usize);
    let (mut inter, mut uni) = (0usize, 0usize);
    for i in 0..nx {
        for j in 0..ny {
            let p = [x0 + (i as f64 + 0.5) * step, y0 + (j as f64 + 0.5) * step];
            let ina = a.iter().any(|poly| contains_point(poly, p));
            let inb = b.iter().any(|poly| contains_point(poly, p));
            inter += (ina && inb) as usize;
            uni += (ina || inb) as usize;
        }
    }
    if uni == 0 {
        0.0
    } else {
        inter as f64 / uni as f64
    }
}
