use serde::{Deserialize, Serialize};

use crate::geo::{Extent, Point3};
use crate::mesh::Mesh;

use super::polygon::{cross, is_simple, make_ccw, signed_area, Polygon};
use super::ransac::PlanePrimitive;
use super::StructureError;

/// A roof face: its plane and outline. The outline is stored in horizontal
/// `(x, y)` coordinates of the local frame, counter-clockwise; roof points
/// are recovered by lifting it onto the plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarRegion {
    pub plane: PlanePrimitive,
    pub boundary: Polygon,
}

impl PlanarRegion {
    pub fn roof_points(&self) -> Vec<Point3> {
        self.boundary.iter().map(|p| Point3::new(p[0], p[1], self.plane.z_at(p[0], p[1]))).collect()
    }

    pub fn min_roof_z(&self) -> f64 {
        self.roof_points().iter().map(|p| p.z).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildingMesh {
    pub mesh: Mesh,
    /// Building cluster the roof face came from.
    pub building: usize,
    /// Index of the face within its building.
    pub region: usize,
    pub roof_triangles: usize,
}

/// Ear-clipping triangulation of a simple counter-clockwise polygon. Returns
/// counter-clockwise index triples.
pub fn ear_clip(poly: &[[f64; 2]]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    let mut out = Vec::with_capacity(poly.len().saturating_sub(2));
    while idx.len() > 3 {
        let m = idx.len();
        let is_ear = |k: usize| {
            let (a, b, c) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            if cross(poly[a], poly[b], poly[c]) <= 0.0 {
                return false;
            }
            idx.iter().all(|&o| {
                if o == a || o == b || o == c {
                    return true;
                }
                let p = poly[o];
                !(cross(poly[a], poly[b], p) >= 0.0 && cross(poly[b], poly[c], p) >= 0.0 && cross(poly[c], poly[a], p) >= 0.0)
            })
        };
        // Numerical trouble on nearly degenerate outlines: fall back to the
        // most convex vertex.
        let k = (0..m).find(|&k| is_ear(k)).unwrap_or_else(|| {
            (0..m)
                .max_by(|&x, &y| {
                    let turn = |k: usize| cross(poly[idx[(k + m - 1) % m]], poly[idx[k]], poly[idx[(k + 1) % m]]);
                    turn(x).total_cmp(&turn(y)).then(y.cmp(&x))
                })
                .expect("at least 4 vertices")
        });
        out.push([idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]]);
        idx.remove(k);
    }
    if idx.len() == 3 {
        out.push([idx[0], idx[1], idx[2]]);
    }
    out
}

/// Closed-sided prism from a roof face down to a constant ground elevation
/// (local-frame z). Vertices are the `n` roof corners followed by the `n`
/// ground corners; the roof is ear-clipped into `n - 2` triangles and every
/// outline edge gets one outward-facing wall quad. There is no floor.
pub fn extrude_region(region: &PlanarRegion, ground_z: f64, extent: &Extent) -> Result<Mesh, StructureError> {
    let outline = make_ccw(region.boundary.clone());
    if outline.len() < 3 || signed_area(&outline) <= 0.0 || !is_simple(&outline) {
        return Err(StructureError::Degenerate("roof outline is not a simple polygon".into()));
    }
    let lifted = PlanarRegion { plane: region.plane.clone(), boundary: outline };
    let roof = lifted.roof_points();
    let min_roof = lifted.min_roof_z();
    if !(ground_z < min_roof) {
        return Err(StructureError::GroundAboveRoof { ground: ground_z, roof: min_roof });
    }
    let n = roof.len();
    let mut mesh = Mesh::default();
    mesh.vertices.extend_from_slice(&roof);
    mesh.vertices.extend(roof.iter().map(|p| Point3::new(p.x, p.y, ground_z)));
    mesh.uvs = mesh.vertices.iter().map(|p| extent.uv(p.x, p.y)).collect();
    mesh.triangles = ear_clip(&lifted.boundary);
    for i in 0..n {
        let j = (i + 1) % n;
        let (ri, rj, gi, gj) = (i, j, n + i, n + j);
        mesh.triangles.push([gi, gj, rj]);
        mesh.triangles.push([gi, rj, ri]);
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(z: f64) -> PlanePrimitive {
        PlanePrimitive { normal: Point3::new(0.0, 0.0, 1.0), d: z, inliers: vec![], rms: 0.0 }
    }

    fn extent() -> Extent {
        Extent { min_x: -50.0, max_x: 50.0, min_y: -50.0, max_y: 50.0 }
    }

    #[test]
    fn square_prism_counts_and_walls() {
        let region = PlanarRegion { plane: flat(10.0), boundary: vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]] };
        let m = extrude_region(&region, 0.0, &extent()).unwrap();
        assert_eq!(m.vertex_count(), 8);
        assert_eq!(m.triangle_count(), 10);
        assert!(m.validate().is_ok());
        for t in 0..2 {
            assert_eq!(m.normal(t).unwrap().z, 1.0);
        }
        let c = [2.0, 2.0];
        for t in 2..10 {
            let nrm = m.normal(t).unwrap();
            assert!(nrm.z.abs() < 1e-9);
            let v = m.vertices[m.triangles[t][0]];
            assert!(nrm.x * (v.x - c[0]) + nrm.y * (v.y - c[1]) > 0.0, "wall {t} faces inward");
        }
        // Roof plus walls close every roof edge exactly twice.
        let uses = m.edge_use();
        for i in 0..4usize {
            let j = (i + 1) % 4;
            assert_eq!(uses[&(i.min(j), i.max(j))], 2);
        }
    }

    #[test]
    fn ngon_formula_and_concave_outline() {
        let l_shape = vec![[0.0, 0.0], [6.0, 0.0], [6.0, 2.0], [2.0, 2.0], [2.0, 6.0], [0.0, 6.0]];
        let tris = ear_clip(&l_shape);
        assert_eq!(tris.len(), 4);
        let area: f64 = tris.iter().map(|t| 0.5 * cross(l_shape[t[0]], l_shape[t[1]], l_shape[t[2]])).sum();
        assert!((area - signed_area(&l_shape)).abs() < 1e-12);
        let m = extrude_region(&PlanarRegion { plane: flat(5.0), boundary: l_shape }, 1.0, &extent()).unwrap();
        assert_eq!(m.triangle_count(), (6 - 2) + 2 * 6);
    }

    #[test]
    fn sloped_roof_follows_the_plane() {
        let pitch = 30f64.to_radians();
        let normal = Point3::new(pitch.sin(), 0.0, pitch.cos());
        let plane = PlanePrimitive { normal, d: normal.dot(&Point3::new(0.0, 0.0, 12.0)), inliers: vec![], rms: 0.0 };
        let region = PlanarRegion { plane: plane.clone(), boundary: vec![[0.0, 0.0], [5.0, 0.0], [5.0, 8.0], [0.0, 8.0]] };
        let m = extrude_region(&region, 0.0, &extent()).unwrap();
        for v in &m.vertices[..4] {
            assert!(plane.distance(v).abs() < 1e-9);
        }
        assert!((m.vertices[1].z - (12.0 - 5.0 * pitch.tan())).abs() < 1e-9);
        assert!(matches!(extrude_region(&region, 20.0, &extent()), Err(StructureError::GroundAboveRoof { .. })));
    }
}
