//! Matches pixel spectra against a spectral library with the spectral angle.

use scenesmith::fixture;
use scenesmith::spectral::{resample_to_bands, spectral_angle, BandSet, BandVector, ResampledLibrary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let library = fixture::library();
    let bands = BandSet::worldview3();
    let resampled = ResampledLibrary::new(&library, &bands)?;

    // A grass pixel seen under brighter illumination: the angle ignores scale.
    let grass = library.find_by_name(fixture::GRASS).expect("grass in library");
    let pixel = resample_to_bands(&grass.curve, &bands)?.scaled(1.7);
    let (id, angle) = resampled.best_match(&pixel)?;
    println!("bright grass pixel -> {} ({angle:.2e} rad)", library.get(id).unwrap().name);

    // A 70/30 mix of asphalt and grass lands nearest one of the two.
    let asphalt = resampled.vector(library.find_by_name(fixture::ASPHALT).unwrap().id).unwrap();
    let grass_v = resampled.vector(grass.id).unwrap();
    let mix = BandVector::new(asphalt.values().iter().zip(grass_v.values()).map(|(a, g)| 0.7 * a + 0.3 * g).collect());
    let (id, angle) = resampled.best_match(&mix)?;
    println!("asphalt/grass mix -> {} ({:.2} deg)", library.get(id).unwrap().name, angle.to_degrees());

    println!("\nangle table (deg):");
    for (a, va) in resampled.entries().take(5) {
        let row: Vec<String> = resampled.entries().take(5).map(|(_, vb)| format!("{:6.2}", spectral_angle(va, vb).unwrap().to_degrees())).collect();
        println!("{:>14} {}", library.get(a).unwrap().name, row.join(" "));
    }
    Ok(())
}
