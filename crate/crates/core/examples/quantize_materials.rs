//! Clusters the image with k-means++, names each cluster after its closest
//! library material, and blends the result into a mixture map.

use scenesmith::fixture;
use scenesmith::material::{build_material_catalog, build_mixture_map, class_to_material_map, quantize_vnir, VnirImage};
use scenesmith::spectral::BandSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("scenesmith-example"));
    std::fs::create_dir_all(&out)?;
    let library = fixture::library();
    let bands = BandSet::worldview3();
    let image = VnirImage::new(fixture::reflectance(7), bands.clone())?;

    let (clusters, classes) = quantize_vnir(&image, 10, 2, 42)?;
    println!("k-means: {} iterations, final SSE {:.5}", clusters.iterations, clusters.sse_history.last().unwrap());
    let catalog = build_material_catalog(&clusters, &library, &bands)?;
    for (k, (&m, &a)) in catalog.cluster_materials.iter().zip(&catalog.cluster_angles).enumerate() {
        println!("cluster {k:>2} -> {:<14} {:.2} deg", library.get(m).unwrap().name, a.to_degrees());
    }
    println!("{} clusters collapse to {} materials", catalog.cluster_count(), catalog.unique_count());

    let map = class_to_material_map(&classes, &catalog)?;
    let mixture = build_mixture_map(&map, 2, 1.5)?;
    // Pixel position on the upsampled grid where the footpath meets the road.
    let (x, y) = (40.0 * 2.0, 48.0 * 2.0);
    let names: Vec<String> = mixture
        .abundance_at(x, y)
        .iter()
        .zip(&mixture.palette)
        .filter(|(a, _)| **a > 0.01)
        .map(|(a, &m)| format!("{} {:.2}", library.get(m).unwrap().name, a))
        .collect();
    println!("abundances where the footpath meets the road: {}", names.join(", "));
    map.write(&out.join("materials.hdr"), &library)?;
    mixture.write(&out.join("mixture.hdr"), &library)?;
    println!("wrote {}", out.join("mixture.hdr").display());
    Ok(())
}
