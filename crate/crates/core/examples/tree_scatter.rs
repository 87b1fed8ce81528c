//! Scatters trees with a density that follows the material map, keeping a
//! minimum distance between trunks.

use std::collections::BTreeMap;

use scenesmith::fixture;
use scenesmith::geo::{GeoTransform, RasterGrid, INDEX_NODATA};
use scenesmith::material::MaterialMap;
use scenesmith::placement::{density_map_from_materials, place_by_density, AssetCatalog, AssetEntry, FlatGround};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let origin = fixture::origin();
    let library = fixture::library();
    let palette: Vec<_> = library.records().iter().map(|r| r.id).collect();
    let index = |name: &str| palette.iter().position(|&m| library.get(m).unwrap().name == name).unwrap() as f64;
    let data: Vec<f64> = (0..fixture::SIZE * fixture::SIZE)
        .map(|k| {
            let (x, y) = fixture::pixel_center(k / fixture::SIZE, k % fixture::SIZE);
            index(fixture::material_at(x, y))
        })
        .collect();
    let transform = GeoTransform::new(fixture::ORIGIN_LON, fixture::ORIGIN_LAT, 1.0, 1.0, fixture::SIZE, fixture::SIZE)?;
    let map = MaterialMap::new(RasterGrid::new(transform, 1, data, Some(INDEX_NODATA))?, palette)?;

    let id = |name: &str| library.find_by_name(name).unwrap().id;
    let weights = BTreeMap::from([(id(fixture::CANOPY), 1.0), (id(fixture::GRASS), 0.005)]);
    let density = density_map_from_materials(&map, &weights, &origin, 30)?;
    let trees = AssetCatalog::new(BTreeMap::from([
        ("oak".to_string(), AssetEntry { mesh: "trees/oak.obj".into(), variants: 3, footprint_radius: 3.0 }),
        ("maple".to_string(), AssetEntry { mesh: "trees/maple.obj".into(), variants: 2, footprint_radius: 2.5 }),
    ]))?;
    let placed = place_by_density(&density, &trees, 30, 2.5, (0.8, 1.2), &FlatGround(0.0), 4)?;
    let on_canopy = placed.records.iter().filter(|r| fixture::material_at(r.position.x, r.position.y) == fixture::CANOPY).count();
    println!("{} trees after {} attempts ({} short), {on_canopy} of them under a canopy", placed.records.len(), placed.attempts, placed.shortfall);

    // Coarse text map: '*' marks trees, '#' canopy pixels.
    for r in (0..fixture::SIZE).step_by(2) {
        let line: String = (0..fixture::SIZE)
            .map(|c| {
                let (x, y) = fixture::pixel_center(r, c);
                let hit = placed.records.iter().any(|t| (t.position.x - x).abs() < 0.5 && (t.position.y - y).abs() < 1.0);
                if hit {
                    '*'
                } else if fixture::material_at(x, y) == fixture::CANOPY {
                    '#'
                } else {
                    '.'
                }
            })
            .collect();
        println!("{line}");
    }
    Ok(())
}
