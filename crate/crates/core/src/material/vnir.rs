use crate::geo::RasterGrid;
use crate::spectral::{BandSet, CalibrationAdjustment};

use super::MappingError;

/// Calibrated multispectral reflectance raster, one grid band per sensor
/// band.
#[derive(Clone, Debug, PartialEq)]
pub struct VnirImage {
    pub grid: RasterGrid,
    pub bands: BandSet,
}

impl VnirImage {
    pub fn new(grid: RasterGrid, bands: BandSet) -> Result<Self, MappingError> {
        if grid.bands != bands.len() {
            return Err(MappingError::BandMismatch { expected: bands.len(), actual: grid.bands });
        }
        Ok(Self { grid, bands })
    }

    pub fn width(&self) -> usize {
        self.grid.width()
    }

    pub fn height(&self) -> usize {
        self.grid.height()
    }

    pub fn band_count(&self) -> usize {
        self.grid.bands
    }

    /// Band values at a pixel, or `None` when any band is nodata.
    pub fn pixel(&self, row: usize, col: usize) -> Option<Vec<f64>> {
        if self.grid.pixel_is_nodata(row, col) {
            return None;
        }
        Some((0..self.band_count()).map(|b| self.grid.get(b, row, col)).collect())
    }

    /// Single-band mean over all bands, used as a panchromatic proxy for
    /// edge detection. Nodata pixels stay nodata.
    pub fn intensity(&self) -> RasterGrid {
        let (w, h) = (self.width(), self.height());
        let nodata = self.grid.nodata;
        let mut data = vec![0.0; w * h];
        for r in 0..h {
            for c in 0..w {
                data[r * w + c] = match self.pixel(r, c) {
                    Some(v) => v.iter().sum::<f64>() / v.len() as f64,
                    None => nodata.unwrap_or(f64::NAN),
                };
            }
        }
        RasterGrid::new(self.grid.transform, 1, data, nodata).expect("same dimensions")
    }
}

/// Applies a per-band affine correction, clamping results at zero. Nodata
/// pixels are left untouched.
pub fn apply_calibration(image: &VnirImage, adj: &CalibrationAdjustment) -> Result<VnirImage, MappingError> {
    if adj.bands() != image.band_count() {
        return Err(MappingError::BandMismatch { expected: image.band_count(), actual: adj.bands() });
    }
    let mut out = image.clone();
    for r in 0..image.height() {
        for c in 0..image.width() {
            if image.grid.pixel_is_nodata(r, c) {
                continue;
            }
            for b in 0..image.band_count() {
                out.grid.set(b, r, c, adj.apply_value(b, image.grid.get(b, r, c)));
            }
        }
    }
    Ok(out)
}
