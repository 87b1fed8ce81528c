//! Soft material boundaries: a per-material abundance image obtained by
//! upsampling the material map, blurring one-hot channels, and normalising.

use std::path::Path;

use rayon::prelude::*;

use crate::geo::envi::{data_path_for, write_envi_raster_named, DataType, EnviOptions};
use crate::geo::filter::gaussian_blur;
use crate::geo::{GeoTransform, RasterGrid};
use crate::spectral::{MaterialId, MaterialLibrary};

use super::maps::MaterialMap;
use super::MappingError;

pub const DEFAULT_UPSAMPLE: usize = 2;
pub const DEFAULT_SIGMA: f64 = 1.5;

/// One band per palette entry, each holding that material's relative
/// abundance.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureMap {
    pub grid: RasterGrid,
    pub palette: Vec<MaterialId>,
    pub upsample_factor: usize,
    pub sigma: f64,
}

impl MixtureMap {
    pub fn channels(&self) -> usize {
        self.grid.bands
    }

    pub fn abundances(&self, row: usize, col: usize) -> Vec<f64> {
        (0..self.channels()).map(|b| self.grid.get(b, row, col)).collect()
    }

    /// Bilinear sample at a continuous pixel position (`x` right, `y` down,
    /// pixel `(r, c)` centered at `(c + 0.5, r + 0.5)`), clamped to the
    /// outermost pixel centers.
    pub fn abundance_at(&self, x: f64, y: f64) -> Vec<f64> {
        let (w, h) = (self.grid.width(), self.grid.height());
        let fx = (x - 0.5).clamp(0.0, (w - 1) as f64);
        let fy = (y - 0.5).clamp(0.0, (h - 1) as f64);
        let (c0, r0) = (fx.floor() as usize, fy.floor() as usize);
        let (c1, r1) = ((c0 + 1).min(w - 1), (r0 + 1).min(h - 1));
        let (tx, ty) = (fx - c0 as f64, fy - r0 as f64);
        (0..self.channels())
            .map(|b| {
                let g = |r, c| self.grid.get(b, r, c);
                (1.0 - ty) * ((1.0 - tx) * g(r0, c0) + tx * g(r0, c1)) + ty * ((1.0 - tx) * g(r1, c0) + tx * g(r1, c1))
            })
            .collect()
    }

    /// Channel with the largest abundance at a pixel (lowest index on ties).
    pub fn dominant(&self, row: usize, col: usize) -> usize {
        let a = self.abundances(row, col);
        (0..a.len()).fold(0, |best, i| if a[i] > a[best] { i } else { best })
    }

    /// Writes an n-band float32 ENVI image with material names as band
    /// names.
    pub fn write(&self, header_path: &Path, library: &MaterialLibrary) -> Result<(), MappingError> {
        let names: Vec<String> =
            self.palette.iter().map(|&id| library.get(id).map_or_else(|| format!("material {id}"), |r| r.name.clone())).collect();
        write_envi_raster_named(&self.grid, header_path, &data_path_for(header_path), &EnviOptions::new(DataType::F32), Some(&names))?;
        Ok(())
    }
}

pub fn build_mixture_map(map: &MaterialMap, upsample_factor: usize, sigma: f64) -> Result<MixtureMap, MappingError> {
    if upsample_factor == 0 {
        return Err(MappingError::InvalidParameter("upsample factor must be at least 1".into()));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(MappingError::InvalidParameter(format!("sigma must be finite and non-negative, got {sigma}")));
    }
    if map.has_nodata() {
        return Err(MappingError::InvalidParameter("material map has nodata pixels".into()));
    }
    let src = &map.grid.transform;
    let transform = GeoTransform::new(
        src.origin_lon,
        src.origin_lat,
        src.pixel_size_x / upsample_factor as f64,
        src.pixel_size_y / upsample_factor as f64,
        src.width * upsample_factor,
        src.height * upsample_factor,
    )?;
    let (w, h) = (transform.width, transform.height);
    let labels: Vec<usize> = (0..w * h).map(|k| map.grid.get(0, k / w / upsample_factor, k % w / upsample_factor) as usize).collect();
    let n = map.palette.len();
    let channels: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|ch| {
            let onehot: Vec<f64> = labels.iter().map(|&l| if l == ch { 1.0 } else { 0.0 }).collect();
            gaussian_blur(&onehot, w, h, sigma)
        })
        .collect();
    let mut data = vec![0.0; n * w * h];
    for k in 0..w * h {
        let total: f64 = channels.iter().map(|c| c[k]).sum();
        for (ch, plane) in channels.iter().enumerate() {
            data[ch * w * h + k] = (plane[k] / total).clamp(0.0, 1.0);
        }
    }
    Ok(MixtureMap { grid: RasterGrid::new(transform, n, data, None)?, palette: map.palette.clone(), upsample_factor, sigma })
}
