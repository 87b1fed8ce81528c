//! Rebuilding a reflectance curve from points clicked on a plotted figure.

use serde::{Deserialize, Serialize};

use super::curve::SpectralCurve;
use super::SpectralError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisScale {
    #[default]
    Linear,
    Log,
}

/// Two clicked reference ticks on one axis: `(pixel coordinate, data value)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisTicks {
    pub first: (f64, f64),
    pub second: (f64, f64),
    pub scale: AxisScale,
}

impl AxisTicks {
    pub fn linear(first: (f64, f64), second: (f64, f64)) -> Self {
        Self { first, second, scale: AxisScale::Linear }
    }

    fn map(&self, pixel: f64) -> f64 {
        let (p0, d0) = self.first;
        let (p1, d1) = self.second;
        d0 + (pixel - p0) * (d1 - d0) / (p1 - p0)
    }

    fn validate(&self, axis: &str) -> Result<(), SpectralError> {
        if self.scale == AxisScale::Log {
            return Err(SpectralError::Trace(format!("{axis} axis: logarithmic axes are not supported")));
        }
        if self.first.0 == self.second.0 || self.first.1 == self.second.1 {
            return Err(SpectralError::Trace(format!("{axis} axis: calibration ticks coincide")));
        }
        if ![self.first.0, self.first.1, self.second.0, self.second.1].iter().all(|v| v.is_finite()) {
            return Err(SpectralError::Trace(format!("{axis} axis: non-finite calibration")));
        }
        Ok(())
    }
}

/// Pixel-to-data mapping of a plotted spectrum: `x` maps the horizontal
/// pixel coordinate `u` to nm, `y` maps the vertical pixel coordinate `v` to
/// reflectance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisCalibration {
    pub x: AxisTicks,
    pub y: AxisTicks,
}

/// Maps each traced pixel to `(nm, reflectance)`, sorts by wavelength,
/// averages points that land on the same wavelength, and resamples linearly
/// onto `output_grid`. Grid wavelengths outside the traced span are an
/// error.
pub fn trace_curve(calibration: &AxisCalibration, traced_points: &[(f64, f64)], output_grid: &[f64]) -> Result<SpectralCurve, SpectralError> {
    calibration.x.validate("x")?;
    calibration.y.validate("y")?;
    if traced_points.len() < 2 {
        return Err(SpectralError::Trace("need at least 2 traced points".into()));
    }
    let mut data: Vec<(f64, f64)> = traced_points.iter().map(|&(u, v)| (calibration.x.map(u), calibration.y.map(v))).collect();
    data.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64, usize)> = Vec::new();
    for (nm, r) in data {
        match merged.last_mut() {
            Some(last) if last.0 == nm => {
                last.1 += r;
                last.2 += 1;
            }
            _ => merged.push((nm, r, 1)),
        }
    }
    let knots: Vec<(f64, f64)> = merged.into_iter().map(|(nm, sum, n)| (nm, sum / n as f64)).collect();
    if knots.len() < 2 {
        return Err(SpectralError::Trace("traced points collapse to a single wavelength".into()));
    }
    let (lo, hi) = (knots[0].0, knots[knots.len() - 1].0);
    let mut values = Vec::with_capacity(output_grid.len());
    for &nm in output_grid {
        if nm < lo || nm > hi {
            return Err(SpectralError::Trace(format!("grid wavelength {nm} outside traced span [{lo}, {hi}]")));
        }
        let i = knots.partition_point(|k| k.0 <= nm).clamp(1, knots.len() - 1);
        let (w0, r0) = knots[i - 1];
        let (w1, r1) = knots[i];
        values.push(r0 + (r1 - r0) * (nm - w0) / (w1 - w0));
    }
    SpectralCurve::new(output_grid.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity() -> AxisCalibration {
        AxisCalibration { x: AxisTicks::linear((0.0, 0.0), (1.0, 1.0)), y: AxisTicks::linear((0.0, 0.0), (1.0, 1.0)) }
    }

    #[test]
    fn identity_calibration_on_flat_line() {
        let pts = [(400.0, 0.5), (700.0, 0.5), (1000.0, 0.5)];
        let c = trace_curve(&identity(), &pts, &[400.0, 550.0, 1000.0]).unwrap();
        assert!(c.reflectance().iter().all(|&r| r == 0.5));
    }

    #[test]
    fn identity_calibration_reproduces_traced_points() {
        let pts = [(700.0, 0.3), (400.0, 0.1), (1000.0, 0.45)];
        let grid = [400.0, 700.0, 1000.0];
        let c = trace_curve(&identity(), &pts, &grid).unwrap();
        assert_eq!(c.reflectance(), &[0.1, 0.3, 0.45]);
    }

    #[test]
    fn affine_axis_mapping() {
        // u in [100, 900] -> [400, 1040] nm: u = 500 is 720 nm by hand.
        // v grows downward: v = 600 -> 0, v = 100 -> 1.
        let cal = AxisCalibration { x: AxisTicks::linear((100.0, 400.0), (900.0, 1040.0)), y: AxisTicks::linear((600.0, 0.0), (100.0, 1.0)) };
        let pts = [(100.0, 600.0), (500.0, 350.0), (900.0, 100.0)];
        let c = trace_curve(&cal, &pts, &[720.0]).unwrap_err();
        assert!(matches!(c, SpectralError::InvalidCurve(_)));
        let c = trace_curve(&cal, &pts, &[400.0, 720.0, 1040.0]).unwrap();
        assert!((c.reflectance()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_points_linear_resample() {
        let pts = [(400.0, 0.0), (800.0, 0.4)];
        let grid = [400.0, 500.0, 600.0, 700.0, 800.0];
        let c = trace_curve(&identity(), &pts, &grid).unwrap();
        for (r, want) in c.reflectance().iter().zip([0.0, 0.1, 0.2, 0.3, 0.4]) {
            assert!((r - want).abs() < 1e-12);
        }
    }

    #[test]
    fn duplicate_wavelengths_are_averaged() {
        let pts = [(400.0, 0.2), (400.0, 0.4), (500.0, 0.3)];
        let c = trace_curve(&identity(), &pts, &[400.0, 500.0]).unwrap();
        assert!((c.reflectance()[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_log_axes_rejected() {
        let mut cal = identity();
        cal.x.second.0 = 0.0;
        assert!(trace_curve(&cal, &[(0.0, 0.1), (1.0, 0.2)], &[0.5]).is_err());
        let mut cal = identity();
        cal.y.scale = AxisScale::Log;
        assert!(matches!(trace_curve(&cal, &[(0.0, 0.1), (1.0, 0.2)], &[0.5]), Err(SpectralError::Trace(_))));
    }
}
