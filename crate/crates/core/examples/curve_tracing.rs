//! Rebuilds a reflectance curve from points picked on a plotted figure.

use scenesmith::spectral::{trace_curve, AxisCalibration, AxisTicks};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Plot area: u = 100 px is 400 nm, u = 900 px is 1000 nm; v = 500 px is
    // reflectance 0, v = 100 px is reflectance 0.5 (image rows grow down).
    let axes = AxisCalibration { x: AxisTicks::linear((100.0, 400.0), (900.0, 1000.0)), y: AxisTicks::linear((500.0, 0.0), (100.0, 0.5)) };
    let clicks = [(100.0, 460.0), (230.0, 430.0), (300.0, 440.0), (380.0, 420.0), (420.0, 250.0), (520.0, 180.0), (900.0, 175.0)];
    let grid: Vec<f64> = (0..=12).map(|i| 400.0 + 50.0 * i as f64).collect();
    let curve = trace_curve(&axes, &clicks, &grid)?;
    for (w, r) in curve.wavelengths().iter().zip(curve.reflectance()) {
        println!("{w:6.0} nm  {r:.4}  {}", "#".repeat((r * 100.0) as usize));
    }
    Ok(())
}
