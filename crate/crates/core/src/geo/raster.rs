use serde::{Deserialize, Serialize};

use super::lvcs::{lvcs_from_geodetic, LvcsOrigin};
use super::GeoError;

/// Sentinel used for missing samples when a header does not declare one.
pub const DEFAULT_NODATA: f64 = -9999.0;

/// Nodata sentinel for index rasters (class and material maps) stored as
/// 16-bit unsigned integers.
pub const INDEX_NODATA: f64 = 65535.0;

/// Georeferencing of a north-up raster.
///
/// `origin_lon`/`origin_lat` locate the north-west corner of the first
/// pixel. Pixel sizes are ground distances in meters. Samples are addressed
/// at pixel centers everywhere in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeoTransform {
    pub origin_lon: f64,
    pub origin_lat: f64,
    pub pixel_size_x: f64,
    pub pixel_size_y: f64,
    pub width: usize,
    pub height: usize,
}

impl GeoTransform {
    pub fn new(origin_lon: f64, origin_lat: f64, pixel_size_x: f64, pixel_size_y: f64, width: usize, height: usize) -> Result<Self, GeoError> {
        let t = Self { origin_lon, origin_lat, pixel_size_x, pixel_size_y, width, height };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), GeoError> {
        if !(self.pixel_size_x > 0.0 && self.pixel_size_y > 0.0) {
            return Err(GeoError::InvalidTransform("pixel sizes must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(GeoError::InvalidTransform("raster must be at least 1x1".into()));
        }
        Ok(())
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn same_grid(&self, other: &GeoTransform) -> bool {
        self == other
    }

    /// Ground extent of the raster in the local frame of `origin`.
    pub fn extent(&self, origin: &LvcsOrigin) -> Result<Extent, GeoError> {
        let nw = lvcs_from_geodetic(self.origin_lat, self.origin_lon, origin.elev, origin)?;
        Ok(Extent {
            min_x: nw.x,
            max_x: nw.x + self.width as f64 * self.pixel_size_x,
            min_y: nw.y - self.height as f64 * self.pixel_size_y,
            max_y: nw.y,
        })
    }
}

/// Axis-aligned ground rectangle in the local frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extent {
    pub min_x: f64,
    pub max_x: f64,
    pub min_y: f64,
    pub max_y: f64,
}

impl Extent {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    /// Texture coordinate of a ground position: `u` grows east, `v` grows
    /// north, so the north-west corner maps to `(0, 1)`. Clamped to `[0, 1]`.
    pub fn uv(&self, x: f64, y: f64) -> [f64; 2] {
        [((x - self.min_x) / self.width()).clamp(0.0, 1.0), ((y - self.min_y) / self.height()).clamp(0.0, 1.0)]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }
}

/// Maps between pixel indices and ground positions for one raster.
#[derive(Clone, Copy, Debug)]
pub struct PixelFrame {
    pub extent: Extent,
    pub pixel_size_x: f64,
    pub pixel_size_y: f64,
    pub width: usize,
    pub height: usize,
}

impl PixelFrame {
    pub fn new(transform: &GeoTransform, origin: &LvcsOrigin) -> Result<Self, GeoError> {
        Ok(Self {
            extent: transform.extent(origin)?,
            pixel_size_x: transform.pixel_size_x,
            pixel_size_y: transform.pixel_size_y,
            width: transform.width,
            height: transform.height,
        })
    }

    pub fn center(&self, row: usize, col: usize) -> (f64, f64) {
        (self.extent.min_x + (col as f64 + 0.5) * self.pixel_size_x, self.extent.max_y - (row as f64 + 0.5) * self.pixel_size_y)
    }

    /// Pixel containing a ground position, if inside the raster.
    pub fn pixel_at(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let c = ((x - self.extent.min_x) / self.pixel_size_x).floor();
        let r = ((self.extent.max_y - y) / self.pixel_size_y).floor();
        if c < 0.0 || r < 0.0 || c >= self.width as f64 || r >= self.height as f64 {
            return None;
        }
        Some((r as usize, c as usize))
    }
}

/// Multi-band raster of `f64` samples stored band-sequentially.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterGrid {
    pub transform: GeoTransform,
    pub bands: usize,
    data: Vec<f64>,
    pub nodata: Option<f64>,
}

impl RasterGrid {
    pub fn new(transform: GeoTransform, bands: usize, data: Vec<f64>, nodata: Option<f64>) -> Result<Self, GeoError> {
        transform.validate()?;
        if bands == 0 {
            return Err(GeoError::DimensionMismatch("raster needs at least one band".into()));
        }
        let expected = transform.pixel_count() * bands;
        if data.len() != expected {
            return Err(GeoError::DimensionMismatch(format!(
                "expected {expected} samples for {}x{}x{bands}, got {}",
                transform.width,
                transform.height,
                data.len()
            )));
        }
        Ok(Self { transform, bands, data, nodata })
    }

    pub fn filled(transform: GeoTransform, bands: usize, value: f64, nodata: Option<f64>) -> Result<Self, GeoError> {
        let n = transform.pixel_count() * bands;
        Self::new(transform, bands, vec![value; n], nodata)
    }

    pub fn width(&self) -> usize {
        self.transform.width
    }

    pub fn height(&self) -> usize {
        self.transform.height
    }

    fn index(&self, band: usize, row: usize, col: usize) -> usize {
        debug_assert!(band < self.bands && row < self.height() && col < self.width());
        (band * self.height() + row) * self.width() + col
    }

    pub fn get(&self, band: usize, row: usize, col: usize) -> f64 {
        self.data[self.index(band, row, col)]
    }

    pub fn set(&mut self, band: usize, row: usize, col: usize, value: f64) {
        let i = self.index(band, row, col);
        self.data[i] = value;
    }

    pub fn band(&self, band: usize) -> &[f64] {
        let n = self.transform.pixel_count();
        &self.data[band * n..(band + 1) * n]
    }

    pub fn band_mut(&mut self, band: usize) -> &mut [f64] {
        let n = self.transform.pixel_count();
        &mut self.data[band * n..(band + 1) * n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_nodata(&self, value: f64) -> bool {
        match self.nodata {
            Some(nd) => value == nd || (nd.is_nan() && value.is_nan()),
            None => false,
        }
    }

    /// True when any band holds the nodata sentinel at this pixel.
    pub fn pixel_is_nodata(&self, row: usize, col: usize) -> bool {
        self.nodata.is_some() && (0..self.bands).any(|b| self.is_nodata(self.get(b, row, col)))
    }

    pub fn same_dims(&self, other: &RasterGrid) -> bool {
        self.width() == other.width() && self.height() == other.height()
    }
}
