//! Flat road and path surfaces laid over the terrain.

use crate::geo::Point3;
use crate::mesh::Mesh;
use crate::placement::{Ground, RoadKind, RoadNetwork};

use super::SceneError;

/// Height of decals above the terrain, to keep them from z-fighting.
pub const DECAL_LIFT: f64 = 0.01;

/// Material database indices for the two surface kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecalMaterials {
    pub road: usize,
    pub path: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecalMesh {
    pub edge: usize,
    pub material: usize,
    pub mesh: Mesh,
}

/// One quad per network edge, `lanes * lane_width` wide and centered on the
/// edge, held at the ground height of the edge midpoint plus [`DECAL_LIFT`].
/// Triangles face up; UVs run along (`u`) and across (`v`) the edge.
pub fn build_decal_meshes(
    network: &RoadNetwork,
    lane_width: f64,
    materials: DecalMaterials,
    ground: &dyn Ground,
) -> Result<Vec<DecalMesh>, SceneError> {
    if !(lane_width > 0.0 && lane_width.is_finite()) {
        return Err(SceneError::InvalidParameter(format!("lane width must be positive, got {lane_width}")));
    }
    Ok(network
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let (a, b) = (network.nodes[e.a], network.nodes[e.b]);
            let len = network.edge_length(i);
            let (dx, dy) = ((b.x - a.x) / len, (b.y - a.y) / len);
            let half = 0.5 * e.lanes as f64 * lane_width;
            let (rx, ry) = (dy * half, -dx * half);
            let z = ground.height(0.5 * (a.x + b.x), 0.5 * (a.y + b.y)) + DECAL_LIFT;
            let vertices = vec![
                Point3::new(a.x + rx, a.y + ry, z),
                Point3::new(b.x + rx, b.y + ry, z),
                Point3::new(b.x - rx, b.y - ry, z),
                Point3::new(a.x - rx, a.y - ry, z),
            ];
            let material = match e.kind {
                RoadKind::Road => materials.road,
                RoadKind::Path => materials.path,
            };
            DecalMesh {
                edge: i,
                material,
                mesh: Mesh { vertices, uvs: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], triangles: vec![[0, 1, 2], [0, 2, 3]] },
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::{FlatGround, RoadEdge};

    #[test]
    fn fifty_meter_two_lane_quad() {
        let net = RoadNetwork::new(
            vec![Point3::new(0.0, 0.0, 0.0), Point3::new(30.0, 40.0, 0.0), Point3::new(30.0, 60.0, 0.0)],
            vec![RoadEdge { a: 0, b: 1, lanes: 2, kind: RoadKind::Road }, RoadEdge { a: 1, b: 2, lanes: 1, kind: RoadKind::Path }],
        )
        .unwrap();
        let mats = DecalMaterials { road: 4, path: 7 };
        let d = build_decal_meshes(&net, 4.0, mats, &FlatGround(2.0)).unwrap();
        assert_eq!(d.len(), 2);
        let m = &d[0].mesh;
        assert_eq!(m.triangle_count(), 2);
        assert!((m.surface_area() - 50.0 * 8.0).abs() < 1e-9);
        assert!(m.vertices.iter().all(|v| (v.z - 2.01).abs() < 1e-12));
        assert!(m.normal(0).unwrap().z > 0.999_999 && m.normal(1).unwrap().z > 0.999_999);
        assert_eq!(d[0].material, 4);
        assert_eq!(d[1].material, 7);
        assert!(m.validate().is_ok());
        assert!(build_decal_meshes(&net, 0.0, mats, &FlatGround(0.0)).is_err());
    }
}
