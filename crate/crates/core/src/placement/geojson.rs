//! Reader for the subset of GeoJSON used for road and parking annotations:
//! a `FeatureCollection` of `LineString` features whose coordinates are
//! `[lon, lat]` and whose properties carry
//!
//! * `kind`: `"road"`, `"path"` or `"parking"` (required),
//! * `lanes`: lane count for roads and paths (default 2),
//! * `spot_spacing`: meters per parking spot (default 2.7),
//! * `side_offset`: meters from the row line to spot centers, to the right
//!   of the drawing direction (default 2.75).
//!
//! Road and path vertices sharing identical coordinates become one network
//! node; each segment of a parking line becomes one parking row.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::geo::{lvcs_from_geodetic, LvcsOrigin, Point3};

use super::parking::ParkingRow;
use super::types::{Ground, RoadEdge, RoadKind, RoadNetwork};
use super::PlacementError;

pub const DEFAULT_LANES: u32 = 2;
pub const DEFAULT_SPOT_SPACING: f64 = 2.7;
pub const DEFAULT_SIDE_OFFSET: f64 = 2.75;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RoadFeatures {
    pub network: RoadNetwork,
    pub parking: Vec<ParkingRow>,
}

fn bad(msg: impl Into<String>) -> PlacementError {
    PlacementError::GeoJson(msg.into())
}

pub fn parse_road_geojson(text: &str, origin: &LvcsOrigin, ground: &dyn Ground) -> Result<RoadFeatures, PlacementError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(bad("top level must be a FeatureCollection"));
    }
    let features = doc.get("features").and_then(Value::as_array).ok_or_else(|| bad("missing `features` array"))?;
    let mut node_ids: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut parking = Vec::new();
    for (fi, f) in features.iter().enumerate() {
        let geom = f.get("geometry").ok_or_else(|| bad(format!("feature {fi}: missing geometry")))?;
        if geom.get("type").and_then(Value::as_str) != Some("LineString") {
            return Err(bad(format!("feature {fi}: only LineString geometries are supported")));
        }
        let coords: Vec<(f64, f64)> = geom
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| bad(format!("feature {fi}: missing coordinates")))?
            .iter()
            .map(|c| match c.as_array().map(|a| a.as_slice()) {
                Some([lon, lat, ..]) => match (lon.as_f64(), lat.as_f64()) {
                    (Some(lon), Some(lat)) => Ok((lon, lat)),
                    _ => Err(bad(format!("feature {fi}: non-numeric coordinate"))),
                },
                _ => Err(bad(format!("feature {fi}: coordinates must be [lon, lat]"))),
            })
            .collect::<Result<_, _>>()?;
        if coords.len() < 2 {
            return Err(bad(format!("feature {fi}: a LineString needs at least two positions")));
        }
        let props = f.get("properties").cloned().unwrap_or(Value::Null);
        let kind = props.get("kind").and_then(Value::as_str).ok_or_else(|| bad(format!("feature {fi}: missing `kind`")))?;
        let number = |key: &str, default: f64| -> Result<f64, PlacementError> {
            match props.get(key) {
                None | Some(Value::Null) => Ok(default),
                Some(v) => v.as_f64().ok_or_else(|| bad(format!("feature {fi}: `{key}` must be a number"))),
            }
        };
        let local = |(lon, lat): (f64, f64)| -> Result<Point3, PlacementError> {
            let p = lvcs_from_geodetic(lat, lon, origin.elev, origin)?;
            Ok(Point3::new(p.x, p.y, ground.height(p.x, p.y)))
        };
        match kind {
            "road" | "path" => {
                let lanes = number("lanes", DEFAULT_LANES as f64)?;
                if lanes < 1.0 || lanes.fract() != 0.0 {
                    return Err(bad(format!("feature {fi}: `lanes` must be a positive integer")));
                }
                let kind = if kind == "road" { RoadKind::Road } else { RoadKind::Path };
                let mut ids = Vec::with_capacity(coords.len());
                for &c in &coords {
                    let key = (c.0.to_bits(), c.1.to_bits());
                    let id = match node_ids.get(&key) {
                        Some(&id) => id,
                        None => {
                            nodes.push(local(c)?);
                            node_ids.insert(key, nodes.len() - 1);
                            nodes.len() - 1
                        }
                    };
                    ids.push(id);
                }
                for w in ids.windows(2) {
                    if w[0] != w[1] {
                        edges.push(RoadEdge { a: w[0], b: w[1], lanes: lanes as u32, kind });
                    }
                }
            }
            "parking" => {
                let spot_spacing = number("spot_spacing", DEFAULT_SPOT_SPACING)?;
                let side_offset = number("side_offset", DEFAULT_SIDE_OFFSET)?;
                for w in coords.windows(2) {
                    parking.push(ParkingRow { start: local(w[0])?, end: local(w[1])?, spot_spacing, side_offset });
                }
            }
            other => return Err(bad(format!("feature {fi}: unknown kind `{other}`"))),
        }
    }
    Ok(RoadFeatures { network: RoadNetwork::new(nodes, edges)?, parking })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::types::FlatGround;

    #[test]
    fn parses_roads_paths_and_parking() {
        let text = r#"{"type": "FeatureCollection", "features": [
            {"type": "Feature", "properties": {"kind": "road", "lanes": 4},
             "geometry": {"type": "LineString", "coordinates": [[0.0, 0.0], [0.001, 0.0], [0.001, 0.001]]}},
            {"type": "Feature", "properties": {"kind": "path"},
             "geometry": {"type": "LineString", "coordinates": [[0.001, 0.001], [0.0, 0.001]]}},
            {"type": "Feature", "properties": {"kind": "parking", "spot_spacing": 2.5},
             "geometry": {"type": "LineString", "coordinates": [[0.0, -0.0005], [0.0005, -0.0005]]}}
        ]}"#;
        let origin = LvcsOrigin::new(0.0, 0.0, 0.0).unwrap();
        let f = parse_road_geojson(text, &origin, &FlatGround(1.5)).unwrap();
        assert_eq!(f.network.nodes.len(), 4);
        assert_eq!(f.network.edges.len(), 3);
        assert_eq!(f.network.edges[2], RoadEdge { a: 2, b: 3, lanes: 2, kind: RoadKind::Path });
        assert_eq!(f.network.edges[0].lanes, 4);
        assert!((f.network.edge_length(0) - 111.32).abs() < 0.1);
        assert!(f.network.nodes.iter().all(|n| n.z == 1.5));
        assert_eq!(f.parking.len(), 1);
        assert_eq!(f.parking[0].spot_spacing, 2.5);
        assert_eq!(f.parking[0].side_offset, DEFAULT_SIDE_OFFSET);
    }

    #[test]
    fn rejects_unsupported_input() {
        let origin = LvcsOrigin::new(0.0, 0.0, 0.0).unwrap();
        let g = FlatGround(0.0);
        assert!(parse_road_geojson("{}", &origin, &g).is_err());
        let point = r#"{"type": "FeatureCollection", "features": [{"type": "Feature", "properties": {"kind": "road"}, "geometry": {"type": "Point", "coordinates": [0, 0]}}]}"#;
        assert!(parse_road_geojson(point, &origin, &g).is_err());
        let kind = r#"{"type": "FeatureCollection", "features": [{"type": "Feature", "properties": {"kind": "canal"}, "geometry": {"type": "LineString", "coordinates": [[0, 0], [0.001, 0]]}}]}"#;
        assert!(parse_road_geojson(kind, &origin, &g).is_err());
    }
}
