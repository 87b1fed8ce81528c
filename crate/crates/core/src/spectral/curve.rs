use serde::{Deserialize, Serialize};

use super::SpectralError;

/// Reflectance sampled at strictly increasing wavelengths (nm).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    wavelengths: Vec<f64>,
    reflectance: Vec<f64>,
}

/// Reflectance below this is rejected outright; values between it and zero
/// are clamped to zero.
pub const MIN_REFLECTANCE: f64 = -0.01;
pub const MAX_REFLECTANCE: f64 = 1.5;

impl SpectralCurve {
    pub fn new(wavelengths: Vec<f64>, mut reflectance: Vec<f64>) -> Result<Self, SpectralError> {
        if wavelengths.len() != reflectance.len() {
            return Err(SpectralError::InvalidCurve(format!("{} wavelengths but {} reflectance values", wavelengths.len(), reflectance.len())));
        }
        if wavelengths.len() < 2 {
            return Err(SpectralError::InvalidCurve("a curve needs at least 2 samples".into()));
        }
        if wavelengths.iter().any(|w| !w.is_finite()) || wavelengths.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpectralError::InvalidCurve("wavelengths must be finite and strictly increasing".into()));
        }
        for r in reflectance.iter_mut() {
            if !r.is_finite() || *r < MIN_REFLECTANCE || *r > MAX_REFLECTANCE {
                return Err(SpectralError::InvalidCurve(format!("reflectance {r} outside [0, {MAX_REFLECTANCE}]")));
            }
            if *r < 0.0 {
                *r = 0.0;
            }
        }
        Ok(Self { wavelengths, reflectance })
    }

    pub fn constant(lo: f64, hi: f64, value: f64) -> Result<Self, SpectralError> {
        Self::new(vec![lo, hi], vec![value, value])
    }

    pub fn wavelengths(&self) -> &[f64] {
        &self.wavelengths
    }

    pub fn reflectance(&self) -> &[f64] {
        &self.reflectance
    }

    pub fn len(&self) -> usize {
        self.wavelengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.wavelengths.is_empty()
    }

    pub fn min_wavelength(&self) -> f64 {
        self.wavelengths[0]
    }

    pub fn max_wavelength(&self) -> f64 {
        *self.wavelengths.last().unwrap()
    }

    /// Linear interpolation; `None` outside the sampled range.
    pub fn value_at(&self, nm: f64) -> Option<f64> {
        if nm < self.min_wavelength() || nm > self.max_wavelength() {
            return None;
        }
        let i = self.wavelengths.partition_point(|&w| w <= nm);
        if i == 0 {
            return Some(self.reflectance[0]);
        }
        if i >= self.len() {
            return Some(*self.reflectance.last().unwrap());
        }
        let (w0, w1) = (self.wavelengths[i - 1], self.wavelengths[i]);
        let (r0, r1) = (self.reflectance[i - 1], self.reflectance[i]);
        Some(r0 + (r1 - r0) * (nm - w0) / (w1 - w0))
    }

    /// Mean of the interpolated curve over `[lo, hi]` clipped to the sampled
    /// range, by exact trapezoidal integration of the piecewise-linear
    /// curve. Returns `None` when the overlap is empty.
    pub fn band_mean(&self, lo: f64, hi: f64) -> Option<f64> {
        let a = lo.max(self.min_wavelength());
        let b = hi.min(self.max_wavelength());
        if b <= a {
            return None;
        }
        let mut knots = vec![a];
        knots.extend(self.wavelengths.iter().copied().filter(|&w| w > a && w < b));
        knots.push(b);
        let area: f64 = knots
            .windows(2)
            .map(|k| {
                let (y0, y1) = (self.value_at(k[0]).unwrap(), self.value_at(k[1]).unwrap());
                0.5 * (y0 + y1) * (k[1] - k[0])
            })
            .sum();
        Some(area / (b - a))
    }
}

/// Spectral response intervals of a multispectral sensor, one per band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandSet {
    bands: Vec<(f64, f64)>,
}

impl BandSet {
    pub fn new(bands: Vec<(f64, f64)>) -> Result<Self, SpectralError> {
        if bands.is_empty() {
            return Err(SpectralError::InvalidBands("band set is empty".into()));
        }
        if bands.iter().any(|&(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(SpectralError::InvalidBands("every band needs low < high".into()));
        }
        if bands.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(SpectralError::InvalidBands("bands must be ordered by low edge".into()));
        }
        Ok(Self { bands })
    }

    /// WorldView-3 VNIR: coastal, blue, green, yellow, red, red edge, NIR1,
    /// NIR2.
    pub fn worldview3() -> Self {
        Self {
            bands: vec![
                (400.0, 450.0),
                (450.0, 510.0),
                (510.0, 580.0),
                (585.0, 625.0),
                (630.0, 690.0),
                (705.0, 745.0),
                (770.0, 895.0),
                (860.0, 1040.0),
            ],
        }
    }

    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.bands
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bands.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

impl Default for BandSet {
    fn default() -> Self {
        Self::worldview3()
    }
}

/// Per-band reflectance of one pixel, cluster center or resampled spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandVector(pub Vec<f64>);

impl BandVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> BandVector {
        BandVector(self.0.iter().map(|v| v * s).collect())
    }
}

impl From<Vec<f64>> for BandVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Mean reflectance of `curve` within each band.
///
/// A band that only partially overlaps the curve is averaged over the
/// overlap; a band with no overlap is an error.
pub fn resample_to_bands(curve: &SpectralCurve, bands: &BandSet) -> Result<BandVector, SpectralError> {
    bands
        .intervals()
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            curve.band_mean(lo, hi).ok_or(SpectralError::Coverage {
                band: i,
                low: lo,
                high: hi,
                curve_min: curve.min_wavelength(),
                curve_max: curve.max_wavelength(),
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(BandVector)
}
