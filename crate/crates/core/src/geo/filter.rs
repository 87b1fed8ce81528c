//! Separable Gaussian filtering of single-band planes.

/// Normalised Gaussian kernel with radius `ceil(3 sigma)`. `sigma == 0`
/// yields the identity kernel `[1.0]`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Symmetric reflection of an out-of-range index (`d c b a | a b c d`).
pub fn reflect(mut i: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

/// Convolves a row-major `width x height` plane with `kernel` along rows and
/// then columns, reflecting at the borders.
pub fn convolve_separable(plane: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    debug_assert_eq!(plane.len(), width * height);
    if kernel.len() == 1 {
        return plane.iter().map(|v| v * kernel[0]).collect();
    }
    let radius = (kernel.len() / 2) as i64;
    let mut tmp = vec![0.0; plane.len()];
    for r in 0..height {
        let row = &plane[r * width..(r + 1) * width];
        for c in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * row[reflect(c as i64 + k as i64 - radius, width)];
            }
            tmp[r * width + c] = acc;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * tmp[reflect(r as i64 + k as i64 - radius, height) * width + c];
            }
            out[r * width + c] = acc;
        }
    }
    out
}

pub fn gaussian_blur(plane: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    convolve_separable(plane, width, height, &gaussian_kernel(sigma))
}
