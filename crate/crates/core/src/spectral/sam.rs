use super::curve::BandVector;
use super::SpectralError;

/// Spectral angle between a pixel vector and a reference vector, in radians.
///
/// Equal to `acos(x.r / (|x| |r|))` but evaluated as
/// `2 atan2(|x^ - r^|, |x^ + r^|)` on the unit vectors, which keeps full
/// precision for nearly parallel spectra where `acos` near 1 loses half the
/// significant digits.
pub fn spectral_angle(x: &BandVector, r: &BandVector) -> Result<f64, SpectralError> {
    spectral_angle_slices(x.values(), r.values())
}

pub fn spectral_angle_slices(x: &[f64], r: &[f64]) -> Result<f64, SpectralError> {
    if x.len() != r.len() {
        return Err(SpectralError::BandMismatch { expected: r.len(), actual: x.len() });
    }
    let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nr = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(nx > 0.0 && nr > 0.0) || !nx.is_finite() || !nr.is_finite() {
        return Err(SpectralError::ZeroVector);
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in x.iter().zip(r) {
        let (ua, ub) = (a / nx, b / nr);
        diff += (ua - ub) * (ua - ub);
        sum += (ua + ub) * (ua + ub);
    }
    Ok(2.0 * diff.sqrt().atan2(sum.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn v(x: &[f64]) -> BandVector {
        BandVector(x.to_vec())
    }

    #[test]
    fn identical_orthogonal_and_scaled() {
        let x = v(&[0.1, 0.2, 0.3, 0.25, 0.3, 0.4, 0.5, 0.5]);
        assert_eq!(spectral_angle(&x, &x).unwrap(), 0.0);
        let mut e1 = vec![0.0; 8];
        e1[0] = 1.0;
        let mut e2 = vec![0.0; 8];
        e2[1] = 1.0;
        assert!((spectral_angle(&v(&e1), &v(&e2)).unwrap() - FRAC_PI_2).abs() < 1e-15);
        let ones = v(&[1.0; 8]);
        let threes = v(&[3.0; 8]);
        assert!(spectral_angle(&ones, &threes).unwrap().abs() < 1e-15);
    }

    #[test]
    fn agrees_with_arccos_definition() {
        let x = v(&[0.1, 0.5, 0.3]);
        let r = v(&[0.4, 0.1, 0.2]);
        let dot: f64 = x.values().iter().zip(r.values()).map(|(a, b)| a * b).sum();
        let acos = (dot / (x.norm() * r.norm())).acos();
        assert!((spectral_angle(&x, &r).unwrap() - acos).abs() < 1e-12);
    }

    #[test]
    fn opposite_vectors_give_pi() {
        let a = spectral_angle(&v(&[1.0, 2.0]), &v(&[-1.0, -2.0])).unwrap();
        assert!((a - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_is_a_domain_error() {
        assert!(matches!(spectral_angle(&v(&[0.0, 0.0]), &v(&[1.0, 0.0])), Err(SpectralError::ZeroVector)));
        assert!(spectral_angle(&v(&[1.0]), &v(&[1.0, 0.0])).is_err());
    }
}
