//! Scene-specific refinement of an already calibrated reflectance image.
//!
//! Pixels of known material (road asphalt found through the road map, path
//! concrete) are paired with the library reflectance of that material and a
//! per-band affine correction `out = gain * in + offset` is fitted by least
//! squares.

use serde::{Deserialize, Serialize};

use super::curve::BandVector;
use super::SpectralError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationAdjustment {
    pub gain: Vec<f64>,
    pub offset: Vec<f64>,
}

impl CalibrationAdjustment {
    pub fn identity(bands: usize) -> Self {
        Self { gain: vec![1.0; bands], offset: vec![0.0; bands] }
    }

    pub fn bands(&self) -> usize {
        self.gain.len()
    }

    /// Corrected value for band `b`, clamped at zero.
    pub fn apply_value(&self, b: usize, v: f64) -> f64 {
        (self.gain[b] * v + self.offset[b]).max(0.0)
    }

    pub fn apply(&self, x: &BandVector) -> BandVector {
        BandVector(x.values().iter().enumerate().map(|(b, &v)| self.apply_value(b, v)).collect())
    }
}

/// Fits one affine correction per band.
///
/// `references` holds either one reference vector per sample or a single
/// vector shared by all samples. For each band the fit minimises
/// `sum_i (gain * s_i + offset - ref_i)^2`. A band where the samples or the
/// references do not vary cannot separate gain from offset and falls back to
/// `gain = 1`, `offset = mean(ref) - mean(s)`.
pub fn fit_calibration(samples: &[BandVector], references: &[BandVector]) -> Result<CalibrationAdjustment, SpectralError> {
    if samples.len() < 2 {
        return Err(SpectralError::Calibration(format!("need at least 2 samples, got {}", samples.len())));
    }
    if references.len() != 1 && references.len() != samples.len() {
        return Err(SpectralError::Calibration(format!(
            "{} references for {} samples; pass one per sample or a single shared reference",
            references.len(),
            samples.len()
        )));
    }
    let bands = samples[0].len();
    for v in samples.iter().chain(references) {
        if v.len() != bands {
            return Err(SpectralError::BandMismatch { expected: bands, actual: v.len() });
        }
    }
    let reference = |i: usize| if references.len() == 1 { &references[0] } else { &references[i] };
    let n = samples.len() as f64;
    let mut adj = CalibrationAdjustment::identity(bands);
    for b in 0..bands {
        let mean_s = samples.iter().map(|s| s.0[b]).sum::<f64>() / n;
        let mean_r = (0..samples.len()).map(|i| reference(i).0[b]).sum::<f64>() / n;
        let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
        for (i, s) in samples.iter().enumerate() {
            let dx = s.0[b] - mean_s;
            let dy = reference(i).0[b] - mean_r;
            sxx += dx * dx;
            sxy += dx * dy;
            syy += dy * dy;
        }
        let scale = mean_s.abs().max(mean_r.abs()).max(1e-12);
        let degenerate = sxx <= (1e-12 * scale).powi(2) * n || syy <= (1e-12 * scale).powi(2) * n;
        let (gain, offset) = if degenerate {
            (1.0, mean_r - mean_s)
        } else {
            let g = sxy / sxx;
            (g, mean_r - g * mean_s)
        };
        if !(gain.is_finite() && gain > 0.0 && offset.is_finite()) {
            return Err(SpectralError::Calibration(format!("band {b}: fitted gain {gain} is not positive; samples do not track the reference")));
        }
        adj.gain[b] = gain;
        adj.offset[b] = offset;
    }
    Ok(adj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn bv(v: &[f64]) -> BandVector {
        BandVector(v.to_vec())
    }

    #[test]
    fn samples_equal_to_reference_give_identity() {
        let r = bv(&[0.1, 0.2, 0.3]);
        let adj = fit_calibration(&[r.clone(), r.clone(), r.clone()], std::slice::from_ref(&r)).unwrap();
        assert_eq!(adj, CalibrationAdjustment::identity(3));
    }

    #[test]
    fn doubled_samples_give_half_gain() {
        let refs = vec![bv(&[0.1, 0.2]), bv(&[0.1, 0.2]), bv(&[0.3, 0.05])];
        let samples: Vec<_> = refs.iter().map(|r| r.scaled(2.0)).collect();
        let adj = fit_calibration(&samples, &refs).unwrap();
        for b in 0..2 {
            assert!((adj.gain[b] - 0.5).abs() < 1e-12);
            assert!(adj.offset[b].abs() < 1e-12);
        }
    }

    #[test]
    fn recovers_synthetic_affine_distortion() {
        let mut rng = crate::rng::Stream::new(5);
        let gains = [0.8, 1.3, 1.9, 0.55];
        let offsets = [0.02, -0.04, 0.0, 0.045];
        let mut samples = Vec::new();
        let mut refs = Vec::new();
        for _ in 0..400 {
            let r: Vec<f64> = (0..4).map(|_| rng.range(0.05, 0.6)).collect();
            let s: Vec<f64> = (0..4)
                .map(|b| {
                    let noise = rng.normal() * 0.01;
                    (r[b] - offsets[b]) / gains[b] + noise
                })
                .collect();
            refs.push(BandVector(r));
            samples.push(BandVector(s));
        }
        let adj = fit_calibration(&samples, &refs).unwrap();
        for b in 0..4 {
            assert!(((adj.gain[b] - gains[b]) / gains[b]).abs() < 0.05, "gain {b}: {}", adj.gain[b]);
            assert!((adj.offset[b] - offsets[b]).abs() < 0.01, "offset {b}: {}", adj.offset[b]);
        }
    }

    #[test]
    fn residual_equals_normal_equation_optimum() {
        let mut rng = crate::rng::Stream::new(8);
        let samples: Vec<_> = (0..30).map(|_| BandVector(vec![rng.range(0.0, 1.0), rng.range(0.0, 1.0)])).collect();
        let refs: Vec<_> = samples
            .iter()
            .map(|s| BandVector(vec![0.7 * s.0[0] + 0.1 + rng.range(-0.02, 0.02), 1.2 * s.0[1] - 0.05 + rng.range(-0.02, 0.02)]))
            .collect();
        let adj = fit_calibration(&samples, &refs).unwrap();
        for b in 0..2 {
            let a = DMatrix::from_fn(samples.len(), 2, |i, j| if j == 0 { samples[i].0[b] } else { 1.0 });
            let y = DVector::from_fn(samples.len(), |i, _| refs[i].0[b]);
            let sol = (a.transpose() * &a).lu().solve(&(a.transpose() * &y)).unwrap();
            let optimum = (&a * &sol - &y).norm_squared();
            let ours: f64 = samples.iter().zip(&refs).map(|(s, r)| (adj.gain[b] * s.0[b] + adj.offset[b] - r.0[b]).powi(2)).sum();
            assert!((ours - optimum).abs() < 1e-12, "{ours} vs {optimum}");
        }
    }

    #[test]
    fn constant_samples_fall_back_to_offset() {
        let s = bv(&[0.2, 0.4]);
        let adj = fit_calibration(&[s.clone(), s.clone()], &[bv(&[0.25, 0.3])]).unwrap();
        assert_eq!(adj.gain, vec![1.0, 1.0]);
        assert!((adj.offset[0] - 0.05).abs() < 1e-15);
        assert!((adj.offset[1] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples() {
        assert!(fit_calibration(&[bv(&[0.1])], &[bv(&[0.1])]).is_err());
    }
}
