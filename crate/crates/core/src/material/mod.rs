//! Per-pixel material assignment: quantization of the multispectral image,
//! matching of cluster centers to library materials, material maps,
//! remapping rules, and blended mixture maps.

pub mod catalog;
pub mod kmeans;
pub mod maps;
pub mod mixture;
pub mod remap;
pub mod vnir;

pub use catalog::{build_material_catalog, MaterialCatalog};
pub use kmeans::{quantize_vnir, ClassMap, ClusterSet};
pub use maps::{class_to_material_map, read_material_map, MaterialMap};
pub use mixture::{build_mixture_map, MixtureMap};
pub use remap::{apply_remap, RemapRule, RemapSource, RemapTable, SurfaceContext};
pub use vnir::{apply_calibration, VnirImage};

use thiserror::Error;

use crate::geo::{EnviError, GeoError};
use crate::spectral::SpectralError;

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expected {expected} bands, got {actual}")]
    BandMismatch { expected: usize, actual: usize },
    #[error("k = {k} exceeds the {distinct} distinct subsampled pixels")]
    TooFewSamples { k: usize, distinct: usize },
    #[error("index {value} outside [0, {limit})")]
    IndexOutOfRange { value: f64, limit: usize },
    #[error("duplicate remap rule for {0}")]
    DuplicateRule(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Envi(#[from] EnviError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
