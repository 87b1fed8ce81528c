use crate::geo::{LvcsOrigin, Point3};
use crate::mesh::Mesh;

use super::tiles::TileGrid;

/// Grid mesh over the smoothed tile corners, in the local frame of
/// `origin`. Vertices are numbered row-major from the north-west corner;
/// each cell is split along its NW-SE diagonal into (NW, SW, SE) and
/// (NW, SE, NE). Texture coordinates span the scene extent with `v`
/// growing north.
pub fn triangulate_dtm(tiles: &TileGrid, origin: &LvcsOrigin) -> Mesh {
    let (rows, cols) = (tiles.rows, tiles.cols);
    let mut mesh = Mesh::default();
    for i in 0..=rows {
        for j in 0..=cols {
            let (x, y) = tiles.corner_xy(i, j);
            mesh.vertices.push(Point3::new(x, y, tiles.corner(i, j) - origin.elev));
            mesh.uvs.push(tiles.extent.uv(x, y));
        }
    }
    let idx = |i: usize, j: usize| i * (cols + 1) + j;
    for i in 0..rows {
        for j in 0..cols {
            let (nw, ne, sw, se) = (idx(i, j), idx(i, j + 1), idx(i + 1, j), idx(i + 1, j + 1));
            mesh.triangles.push([nw, sw, se]);
            mesh.triangles.push([nw, se, ne]);
        }
    }
    mesh
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Extent;
    use crate::terrain::tiles::TileCell;

    fn flat(rows: usize, cols: usize, elev: f64) -> TileGrid {
        TileGrid {
            tile_size: 10.0,
            rows,
            cols,
            extent: Extent { min_x: -5.0, max_x: -5.0 + 10.0 * cols as f64, min_y: 2.0, max_y: 2.0 + 10.0 * rows as f64 },
            tiles: vec![TileCell { ground_elev: elev, corner_elevs: [elev; 4], sample_count: 1, dsm_max: None }; rows * cols],
            corners: vec![elev; (rows + 1) * (cols + 1)],
        }
    }

    #[test]
    fn counts_uvs_and_normals() {
        let origin = LvcsOrigin::new(0.0, 0.0, 1.0).unwrap();
        let m = triangulate_dtm(&flat(2, 2, 5.0), &origin);
        assert_eq!(m.vertex_count(), 9);
        assert_eq!(m.triangle_count(), 8);
        assert_eq!(m.uvs[0], [0.0, 1.0]);
        assert_eq!(m.uvs[8], [1.0, 0.0]);
        assert!(m.validate().is_ok());
        for t in 0..m.triangle_count() {
            assert_eq!(m.normal(t), Some(Point3::new(0.0, 0.0, 1.0)));
        }
        assert!(m.vertices.iter().all(|v| v.z == 4.0));
    }

    #[test]
    fn grid_is_a_manifold_triangulation() {
        let (rows, cols) = (3, 4);
        let m = triangulate_dtm(&flat(rows, cols, 0.0), &LvcsOrigin::new(0.0, 0.0, 0.0).unwrap());
        assert_eq!(m.triangle_count(), 2 * rows * cols);
        let uses = m.edge_use();
        let boundary = uses.values().filter(|&&n| n == 1).count();
        assert_eq!(boundary, 2 * (rows + cols));
        assert!(uses.values().all(|&n| n == 1 || n == 2));
        assert!((m.surface_area() - 1200.0).abs() < 1e-9);
    }
}
