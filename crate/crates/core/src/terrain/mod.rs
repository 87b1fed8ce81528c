//! Bare-earth terrain from a surface model: per-tile ground estimates from
//! elevation histograms, iterative smoothing of the shared tile corners, and
//! a textured grid mesh.

pub mod mesh;
pub mod tiles;

pub use mesh::triangulate_dtm;
pub use tiles::{build_tile_grid, smooth_corners, tile_ground_elevation, TerrainParams, TileCell, TileGrid};

use thiserror::Error;

use crate::geo::GeoError;

#[derive(Debug, Error)]
pub enum TerrainError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no ground samples: {0}")]
    Empty(String),
    #[error("mask is {mask_w}x{mask_h}, surface model is {dsm_w}x{dsm_h}")]
    MaskMismatch { mask_w: usize, mask_h: usize, dsm_w: usize, dsm_h: usize },
    #[error(transparent)]
    Geo(#[from] GeoError),
}
