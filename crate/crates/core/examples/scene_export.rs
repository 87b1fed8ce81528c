//! Writes a small scene (terrain, one building, road decals, car instances,
//! material database) and validates it by reading everything back.

use std::collections::BTreeMap;

use scenesmith::fixture;
use scenesmith::geo::Point3;
use scenesmith::placement::{parse_road_geojson, place_cars_on_roads, AssetCatalog, AssetEntry, RoadParams, TerrainGround};
use scenesmith::scene::{assemble_scene, build_decal_meshes, read_obj, validate_manifest, DecalMaterials, MaterialDatabase, SceneBundle};
use scenesmith::spectral::BandSet;
use scenesmith::structures::ransac::PlanePrimitive;
use scenesmith::structures::{extrude_region, PlanarRegion};
use scenesmith::terrain::{build_tile_grid, smooth_corners, triangulate_dtm, TerrainParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("scenesmith-export"));
    let origin = fixture::origin();
    let library = fixture::library();
    let dsm = fixture::dsm(1);
    let params = TerrainParams { tile_size: 16.0, ..TerrainParams::default() };
    let tiles = smooth_corners(&build_tile_grid(&dsm, None, &origin, &params)?, params.iterations, params.outlier_threshold)?;
    let ground = TerrainGround { tiles: &tiles, datum: origin.elev };
    let extent = dsm.transform.extent(&origin)?;

    let names = [fixture::ASPHALT, fixture::CONCRETE, fixture::GRASS, fixture::METAL];
    let palette: Vec<_> = names.iter().map(|n| library.find_by_name(n).unwrap().id).collect();
    let material_db = MaterialDatabase::from_palette(&palette, &library)?;

    // A flat 8 m roof over the first fixture footprint.
    let truth = &fixture::buildings()[0];
    let [x0, x1, y0, y1] = truth.bounds;
    let roof = truth.roof_elevation(x0, y0) - origin.elev;
    let plane = PlanePrimitive { normal: Point3::new(0.0, 0.0, 1.0), d: roof, inliers: Vec::new(), rms: 0.0 };
    let region = PlanarRegion { plane, boundary: truth.footprint() };
    let ground_z = ground.tiles.elevation_at(0.5 * (x0 + x1), 0.5 * (y0 + y1)) - origin.elev;
    let building = extrude_region(&region, ground_z, &extent)?;

    let roads = parse_road_geojson(&fixture::roads_geojson(), &origin, &ground)?;
    let decals = build_decal_meshes(&roads.network, 4.0, DecalMaterials { road: 0, path: 1 }, &ground)?;
    let assets =
        AssetCatalog::new(BTreeMap::from([("sedan".to_string(), AssetEntry { mesh: "cars/sedan.obj".into(), variants: 3, footprint_radius: 2.4 })]))?;
    let cars = place_cars_on_roads(&roads.network, &assets, &RoadParams { occupancy: 0.5, ..RoadParams::default() }, 2)?;

    let bundle = SceneBundle {
        origin,
        bands: BandSet::worldview3().intervals().to_vec(),
        terrain: triangulate_dtm(&tiles, &origin),
        buildings: vec![(building, Some(3))],
        decals,
        instances: BTreeMap::from([("cars".to_string(), cars)]),
        assets,
        material_db,
        maps: Vec::new(),
    };
    let manifest = assemble_scene(&bundle, &out)?;
    let checked = validate_manifest(&out.join("manifest.json"))?;
    assert_eq!(manifest, checked);
    for m in &checked.meshes {
        let mesh = read_obj(&out.join(&m.path))?;
        println!("{:<24} {:>4} vertices {:>4} triangles  area {:8.1} m2", m.path, mesh.vertex_count(), mesh.triangle_count(), mesh.surface_area());
    }
    for i in &checked.instances {
        println!("{:<24} {} instances", i.path, i.count);
    }
    println!("{} materials, manifest valid: {}", checked.material_database.count, out.join("manifest.json").display());
    Ok(())
}
