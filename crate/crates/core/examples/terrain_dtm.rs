//! Bare-earth terrain from a surface model with buildings and trees on it.

use scenesmith::fixture;
use scenesmith::scene::write_obj;
use scenesmith::terrain::{build_tile_grid, smooth_corners, triangulate_dtm, TerrainParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("scenesmith-example"));
    std::fs::create_dir_all(&out)?;
    let origin = fixture::origin();
    let dsm = fixture::dsm(3);
    let params = TerrainParams { tile_size: 16.0, ..TerrainParams::default() };
    let initial = build_tile_grid(&dsm, None, &origin, &params)?;
    let tiles = smooth_corners(&initial, params.iterations, params.outlier_threshold)?;

    let mut worst: f64 = 0.0;
    for i in 0..=tiles.rows {
        for j in 0..=tiles.cols {
            let (x, y) = tiles.corner_xy(i, j);
            worst = worst.max((tiles.corner(i, j) - fixture::ground_elevation(x, y)).abs());
        }
    }
    println!("{}x{} tiles, worst corner error {worst:.3} m", tiles.rows, tiles.cols);
    let dtm = tiles.to_raster(&dsm, &origin)?;
    let above = dtm.data().iter().zip(dsm.data()).filter(|(t, s)| *t - *s > 0.5).count();
    println!("pixels where terrain rises more than 0.5 m above the surface: {above}");

    let mesh = triangulate_dtm(&tiles, &origin);
    let path = out.join("terrain.obj");
    write_obj(&mesh, &path)?;
    println!("{} vertices, {} triangles -> {}", mesh.vertex_count(), mesh.triangle_count(), path.display());
    Ok(())
}
