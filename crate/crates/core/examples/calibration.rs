//! Fits a per-band gain and offset from pixels of known materials and
//! applies it to the whole image.

use scenesmith::fixture;
use scenesmith::material::{apply_calibration, VnirImage};
use scenesmith::spectral::{fit_calibration, BandSet, BandVector, ResampledLibrary};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let library = fixture::library();
    let bands = BandSet::worldview3();
    let resampled = ResampledLibrary::new(&library, &bands)?;
    let raw = VnirImage::new(fixture::vnir(7), bands.clone())?;

    let mut samples = Vec::new();
    let mut references = Vec::new();
    for (name, pixels) in fixture::calibration_targets() {
        let reference = resampled.vector(library.find_by_name(name).unwrap().id).unwrap();
        for [r, c] in pixels {
            samples.push(BandVector::new(raw.pixel(r, c).expect("valid pixel")));
            references.push(reference.clone());
        }
    }
    let adj = fit_calibration(&samples, &references)?;
    println!("band  gain (true)       offset (true)");
    for (b, (g, o)) in fixture::distortion(bands.len()).into_iter().enumerate() {
        println!("{b:>4}  {:.4} ({g:.4})  {:+.4} ({o:+.4})", adj.gain[b], adj.offset[b]);
    }

    let calibrated = apply_calibration(&raw, &adj)?;
    let grass = resampled.vector(library.find_by_name(fixture::GRASS).unwrap().id).unwrap();
    let px = calibrated.pixel(30, 20).unwrap();
    let err = px.iter().zip(grass.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max band error on an unseen grass pixel: {err:.4}");
    Ok(())
}
