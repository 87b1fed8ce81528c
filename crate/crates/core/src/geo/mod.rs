//! Coordinate frames, rasters, and raster file I/O shared by every stage.

pub mod envi;
pub mod filter;
pub mod lvcs;
pub mod pointcloud;
pub mod raster;

pub use envi::{read_envi_raster, write_envi_raster, DataType, EnviOptions, Interleave};
pub use lvcs::{geodetic_from_lvcs, lvcs_from_geodetic, LvcsOrigin, Point3};
pub use pointcloud::{dsm_to_pointcloud, PointCloud};
pub use raster::{Extent, GeoTransform, PixelFrame, RasterGrid, DEFAULT_NODATA, INDEX_NODATA};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid geotransform: {0}")]
    InvalidTransform(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

#[derive(Debug, Error)]
pub enum EnviError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed ENVI header: {0}")]
    MalformedHeader(String),
    #[error("ENVI header is missing `{0}`")]
    MissingKey(&'static str),
    #[error("unsupported interleave `{0}`")]
    UnsupportedInterleave(String),
    #[error("unsupported ENVI data type {0}")]
    UnsupportedDataType(u32),
    #[error("data file truncated: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("value {value} cannot be stored as ENVI data type {data_type}")]
    Unrepresentable { value: f64, data_type: u32 },
}
