//! Builds render-ready simulation scenes from a surface model, an 8-band
//! multispectral image, a spectral reflectance library and road vectors.
//!
//! The stages mirror the CLI: [`spectral`] calibration and matching,
//! [`material`] quantization and maps, [`terrain`] extraction,
//! [`structures`] reconstruction, [`placement`] of cars and trees, and
//! [`scene`] export. [`pipeline`] runs them with caching.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod fixture;
pub mod geo;
pub mod material;
pub mod mesh;
pub mod pipeline;
pub mod placement;
pub mod rng;
pub mod scene;
pub mod spectral;
pub mod structures;
pub mod terrain;
