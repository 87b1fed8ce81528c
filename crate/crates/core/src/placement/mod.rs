//! Procedural population of the scene: cars along road edges and in parking
//! rows, and vegetation scattered according to a density map.

pub mod density;
pub mod geojson;
pub mod parking;
pub mod roads;
pub mod types;

pub use density::{density_map_from_materials, place_by_density, DensityMap, DensityPlacement};
pub use geojson::{parse_road_geojson, RoadFeatures};
pub use parking::{place_parking, ParkingParams, ParkingRow};
pub use roads::{place_cars_on_roads, right_vector, RoadParams};
pub use types::{AssetCatalog, AssetEntry, FlatGround, Ground, PlacementRecord, RoadEdge, RoadKind, RoadNetwork, TerrainGround};

use thiserror::Error;

use crate::geo::GeoError;

#[derive(Debug, Error)]
pub enum PlacementError {
    #[error("asset catalog is empty")]
    EmptyCatalog,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("direction must be a unit vector, got ({0}, {1})")]
    InvalidDirection(f64, f64),
    #[error("invalid road network: {0}")]
    InvalidNetwork(String),
    #[error("road file: {0}")]
    GeoJson(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}
