//! Finds buildings in the surface model, fits roof planes and turns each face
//! into a closed prism standing on the terrain.

use scenesmith::fixture;
use scenesmith::geo::RasterGrid;
use scenesmith::scene::write_obj;
use scenesmith::structures::polygon::raster_iou;
use scenesmith::structures::{debug_lines, model_buildings, segment_buildings, BuildingInputs, BuildingParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("scenesmith-buildings"));
    std::fs::create_dir_all(&out)?;
    let origin = fixture::origin();
    let dsm = fixture::dsm(11);
    let terrain: Vec<f64> = (0..fixture::SIZE * fixture::SIZE)
        .map(|k| {
            let (x, y) = fixture::pixel_center(k / fixture::SIZE, k % fixture::SIZE);
            fixture::ground_elevation(x, y)
        })
        .collect();
    let dtm = RasterGrid::new(dsm.transform, 1, terrain, None)?;
    let extent = dsm.transform.extent(&origin)?;

    let mut params = BuildingParams::default();
    // The occupancy cells must be at least one pixel wide on a 1 m grid.
    params.priors.bitmap_epsilon = 1.0;
    params.priors.min_points = 40;
    let clusters = segment_buildings(&dsm, &dtm, None, params.height_threshold, 40)?;
    let inputs = BuildingInputs { dsm: &dsm, dtm: &dtm, origin: &origin, edges: None, extent: &extent };
    let models = model_buildings(&clusters, &inputs, &params, 5)?;

    for (model, truth) in models.iter().zip(fixture::buildings()) {
        println!("{} ({} px, ground {:.2} m):", truth.name, model.pixel_count, model.ground_z);
        for r in &model.regions {
            let n = r.plane.normal;
            let err = truth.roof_normals().iter().map(|t| t.dot(&n).clamp(-1.0, 1.0).acos().to_degrees()).fold(f64::INFINITY, f64::min);
            println!("  face: {} inliers, {} outline vertices, normal off by {err:.2} deg", r.plane.inliers.len(), r.boundary.len());
        }
        let iou = raster_iou(&model.footprints(), &[truth.footprint()], 0.1);
        println!("  footprint IoU against the true outline: {iou:.3}");
        for m in &model.meshes {
            write_obj(&m.mesh, &out.join(format!("building_{}_{}.obj", m.building, m.region)))?;
        }
    }
    std::fs::write(out.join("planes.jsonl"), debug_lines(&models))?;
    println!("meshes and plane log in {}", out.display());
    Ok(())
}
