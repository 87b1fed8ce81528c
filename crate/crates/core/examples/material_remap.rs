//! Replaces materials by rule, with different targets on the ground and on
//! structures.

use scenesmith::fixture;
use scenesmith::geo::RasterGrid;
use scenesmith::material::{
    apply_remap, build_material_catalog, class_to_material_map, quantize_vnir, RemapRule, RemapSource, RemapTable, SurfaceContext, VnirImage,
};
use scenesmith::spectral::BandSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let library = fixture::library();
    let bands = BandSet::worldview3();
    let image = VnirImage::new(fixture::reflectance(7), bands.clone())?;
    let (clusters, classes) = quantize_vnir(&image, 8, 1, 1)?;
    let catalog = build_material_catalog(&clusters, &library, &bands)?;
    let map = class_to_material_map(&classes, &catalog)?;

    let id = |name: &str| library.find_by_name(name).unwrap().id;
    let table = RemapTable::new([
        // Any roof-tagged material on a structure becomes red brick...
        RemapRule { source: RemapSource::Tag("roof".into()), context: SurfaceContext::Structure, target: id("red brick") },
        // ...and bare soil anywhere becomes grass.
        RemapRule { source: RemapSource::Material(id(fixture::SOIL)), context: SurfaceContext::Any, target: id(fixture::GRASS) },
    ])?;
    let mut mask = RasterGrid::filled(map.grid.transform, 1, 0.0, None)?;
    for b in fixture::buildings().iter().take(1) {
        for r in 0..fixture::SIZE {
            for c in 0..fixture::SIZE {
                let (x, y) = fixture::pixel_center(r, c);
                if b.contains(x, y) {
                    mask.set(0, r, c, 1.0);
                }
            }
        }
    }
    let remapped = apply_remap(&map, &table, &library, Some(&mask))?;

    let count = |m: &scenesmith::material::MaterialMap, name: &str| {
        let target = id(name);
        (0..fixture::SIZE * fixture::SIZE).filter(|k| m.material_at(k / fixture::SIZE, k % fixture::SIZE) == Some(target)).count()
    };
    for name in [fixture::SOIL, fixture::GRASS, fixture::METAL, fixture::SHINGLE, "red brick"] {
        println!("{name:<14} {:>5} -> {:>5} px", count(&map, name), count(&remapped, name));
    }
    Ok(())
}
