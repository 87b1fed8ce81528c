use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geo::Point3;
use crate::rng::Stream;
use crate::terrain::TileGrid;

use super::PlacementError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoadKind {
    Road,
    Path,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadEdge {
    pub a: usize,
    pub b: usize,
    pub lanes: u32,
    pub kind: RoadKind,
}

/// Road centerlines in the local frame.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub nodes: Vec<Point3>,
    pub edges: Vec<RoadEdge>,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<Point3>, edges: Vec<RoadEdge>) -> Result<Self, PlacementError> {
        let net = Self { nodes, edges };
        for (i, e) in net.edges.iter().enumerate() {
            if e.a == e.b || e.a >= net.nodes.len() || e.b >= net.nodes.len() {
                return Err(PlacementError::InvalidNetwork(format!("edge {i} has invalid endpoints ({}, {})", e.a, e.b)));
            }
            if net.edge_length(i) <= 0.0 {
                return Err(PlacementError::InvalidNetwork(format!("edge {i} has zero length")));
            }
        }
        Ok(net)
    }

    /// Horizontal length of edge `i`.
    pub fn edge_length(&self, i: usize) -> f64 {
        let e = &self.edges[i];
        let (a, b) = (self.nodes[e.a], self.nodes[e.b]);
        (b.x - a.x).hypot(b.y - a.y)
    }

    pub fn total_length(&self, kind: RoadKind) -> f64 {
        (0..self.edges.len()).filter(|&i| self.edges[i].kind == kind).map(|i| self.edge_length(i)).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetEntry {
    /// Mesh file, relative to the asset directory.
    pub mesh: String,
    pub variants: usize,
    /// Footprint radius in meters.
    pub footprint_radius: f64,
}

/// Assets by id. Iteration and random picks follow id order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AssetCatalog {
    pub entries: BTreeMap<String, AssetEntry>,
}

impl AssetCatalog {
    pub fn new(entries: impl IntoIterator<Item = (String, AssetEntry)>) -> Result<Self, PlacementError> {
        let entries: BTreeMap<_, _> = entries.into_iter().collect();
        for (id, e) in &entries {
            if e.variants == 0 {
                return Err(PlacementError::InvalidParameter(format!("asset `{id}` has no material variants")));
            }
        }
        Ok(Self { entries })
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub(crate) fn require(&self) -> Result<(), PlacementError> {
        if self.is_empty() {
            Err(PlacementError::EmptyCatalog)
        } else {
            Ok(())
        }
    }

    /// Uniform asset, then uniform material variant of that asset.
    pub fn pick(&self, rng: &mut Stream) -> (String, usize) {
        let (id, entry) = self.entries.iter().nth(rng.below(self.entries.len())).expect("non-empty catalog");
        (id.clone(), rng.below(entry.variants))
    }
}

/// One placed asset instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacementRecord {
    pub asset_id: String,
    pub position: Point3,
    /// Radians counter-clockwise from east, in `[-pi, pi]`.
    pub heading: f64,
    pub scale: f64,
    pub material_variant: usize,
}

/// Height of the ground in the local frame.
pub trait Ground: Sync {
    fn height(&self, x: f64, y: f64) -> f64;
}

pub struct FlatGround(pub f64);

impl Ground for FlatGround {
    fn height(&self, _x: f64, _y: f64) -> f64 {
        self.0
    }
}

/// Smoothed terrain tiles, shifted from absolute elevations to the local
/// frame of an origin at `datum`.
pub struct TerrainGround<'a> {
    pub tiles: &'a TileGrid,
    pub datum: f64,
}

impl Ground for TerrainGround<'_> {
    fn height(&self, x: f64, y: f64) -> f64 {
        self.tiles.elevation_at(x, y) - self.datum
    }
}

/// Wraps an angle into `[-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w < -PI {
        -PI
    } else {
        w
    }
}
