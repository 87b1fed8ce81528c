//! Export of the finished scene: OBJ meshes, the material database, instance
//! lists, road decals, and a JSON manifest tying the files together.

pub mod decals;
pub mod instances;
pub mod manifest;
pub mod matdb;
pub mod obj;

pub use decals::{build_decal_meshes, DecalMaterials, DecalMesh};
pub use instances::{format_instance_list, parse_instance_list, read_instance_list, write_instance_list};
pub use manifest::{assemble_scene, validate_manifest, MapKind, MapReference, SceneBundle, SceneManifest};
pub use matdb::{read_material_database, write_material_database, MaterialDatabase, MaterialEntry};
pub use obj::{format_obj, parse_obj, read_obj, write_obj};

use thiserror::Error;

use crate::geo::EnviError;
use crate::material::MappingError;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid mesh `{name}`: {reason}")]
    InvalidMesh { name: String, reason: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("scene validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Envi(#[from] EnviError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
