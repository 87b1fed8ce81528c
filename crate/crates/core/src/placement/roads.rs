use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geo::Point3;
use crate::rng::{tags, Stream};

use super::types::{AssetCatalog, PlacementRecord, RoadKind, RoadNetwork};
use super::PlacementError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoadParams {
    /// Distance between the centers of opposing lanes, in meters.
    pub lane_offset: f64,
    /// Spacing of candidate car slots along an edge, in meters.
    pub min_interval: f64,
    /// Probability that a slot holds a car.
    pub occupancy: f64,
}

impl Default for RoadParams {
    fn default() -> Self {
        Self { lane_offset: 4.0, min_interval: 10.0, occupancy: 0.15 }
    }
}

/// Unit vector pointing to the right of the unit direction `v`: the
/// direction rotated clockwise by 90 degrees.
pub fn right_vector(v: [f64; 2]) -> Result<[f64; 2], PlacementError> {
    if ((v[0] * v[0] + v[1] * v[1]).sqrt() - 1.0).abs() > 1e-9 {
        return Err(PlacementError::InvalidDirection(v[0], v[1]));
    }
    let theta = v[1].atan2(v[0]) - std::f64::consts::FRAC_PI_2;
    Ok([theta.cos(), theta.sin()])
}

/// Cars in both directions of every road edge (paths get none).
///
/// Slots sit every `min_interval` meters starting `min_interval / 2` from
/// each direction's starting node. A slot is taken with probability
/// `occupancy`; its car sits `lane_offset / 2` to the right of the
/// centerline, facing the direction of travel. Each edge draws from its own
/// stream, forward slots first, so results are independent of scheduling.
/// Records come out ordered by edge, direction, slot.
pub fn place_cars_on_roads(
    network: &RoadNetwork,
    catalog: &AssetCatalog,
    params: &RoadParams,
    seed: u64,
) -> Result<Vec<PlacementRecord>, PlacementError> {
    catalog.require()?;
    if !(params.min_interval > 0.0) || !(0.0..=1.0).contains(&params.occupancy) || !params.lane_offset.is_finite() {
        return Err(PlacementError::InvalidParameter(format!("{params:?}")));
    }
    let per_edge: Result<Vec<Vec<PlacementRecord>>, PlacementError> = (0..network.edges.len())
        .into_par_iter()
        .map(|i| {
            let e = &network.edges[i];
            if e.kind != RoadKind::Road {
                return Ok(Vec::new());
            }
            let mut rng = Stream::derived(seed, tags::ROAD_CARS, i as u64);
            let (a, b) = (network.nodes[e.a], network.nodes[e.b]);
            let len = network.edge_length(i);
            let mut out = Vec::new();
            for (from, to) in [(a, b), (b, a)] {
                let v = [(to.x - from.x) / len, (to.y - from.y) / len];
                let r = right_vector(v)?;
                let heading = v[1].atan2(v[0]);
                let mut s = params.min_interval * 0.5;
                while s < len {
                    if rng.chance(params.occupancy) {
                        let (asset_id, variant) = catalog.pick(&mut rng);
                        let t = s / len;
                        let half = params.lane_offset * 0.5;
                        out.push(PlacementRecord {
                            asset_id,
                            position: Point3::new(from.x + s * v[0] + half * r[0], from.y + s * v[1] + half * r[1], from.z + t * (to.z - from.z)),
                            heading,
                            scale: 1.0,
                            material_variant: variant,
                        });
                    }
                    s += params.min_interval;
                }
            }
            Ok(out)
        })
        .collect();
    Ok(per_edge?.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::types::{AssetEntry, RoadEdge};

    fn catalog() -> AssetCatalog {
        AssetCatalog::new([
            ("sedan".to_string(), AssetEntry { mesh: "sedan.obj".into(), variants: 4, footprint_radius: 2.5 }),
            ("truck".to_string(), AssetEntry { mesh: "truck.obj".into(), variants: 2, footprint_radius: 3.0 }),
        ])
        .unwrap()
    }

    fn straight(len: f64, kind: RoadKind) -> RoadNetwork {
        RoadNetwork::new(vec![Point3::new(0.0, 0.0, 0.0), Point3::new(len, 0.0, 0.0)], vec![RoadEdge { a: 0, b: 1, lanes: 2, kind }]).unwrap()
    }

    #[test]
    fn right_vector_cases() {
        let close = |a: [f64; 2], b: [f64; 2]| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12;
        assert!(close(right_vector([1.0, 0.0]).unwrap(), [0.0, -1.0]));
        assert!(close(right_vector([0.0, 1.0]).unwrap(), [1.0, 0.0]));
        let r = right_vector([0.6, 0.8]).unwrap();
        assert!(close(r, [0.8, -0.6]));
        assert!((r[0] * 0.6 + r[1] * 0.8).abs() < 1e-12);
        assert!(0.6 * r[1] - 0.8 * r[0] < 0.0);
        assert!(right_vector([0.0, 0.0]).is_err());
    }

    #[test]
    fn full_occupancy_slot_count_and_sides() {
        let params = RoadParams { occupancy: 1.0, ..RoadParams::default() };
        let cars = place_cars_on_roads(&straight(100.0, RoadKind::Road), &catalog(), &params, 1).unwrap();
        assert_eq!(cars.len(), 20);
        for c in &cars[..10] {
            assert!((c.position.y + 2.0).abs() < 1e-12);
            assert_eq!(c.heading, 0.0);
        }
        for c in &cars[10..] {
            assert!((c.position.y - 2.0).abs() < 1e-12);
            assert!((c.heading - std::f64::consts::PI).abs() < 1e-12);
        }
        assert!((cars[0].position.x - 5.0).abs() < 1e-12);
        assert!((cars[10].position.x - 95.0).abs() < 1e-12);
    }

    #[test]
    fn empty_cases() {
        let none = RoadParams { occupancy: 0.0, ..RoadParams::default() };
        assert!(place_cars_on_roads(&straight(100.0, RoadKind::Road), &catalog(), &none, 1).unwrap().is_empty());
        let all = RoadParams { occupancy: 1.0, ..RoadParams::default() };
        assert!(place_cars_on_roads(&straight(100.0, RoadKind::Path), &catalog(), &all, 1).unwrap().is_empty());
        assert!(matches!(
            place_cars_on_roads(&straight(100.0, RoadKind::Road), &AssetCatalog::default(), &all, 1),
            Err(PlacementError::EmptyCatalog)
        ));
    }

    #[test]
    fn deterministic_and_uses_catalog() {
        let net = straight(1000.0, RoadKind::Road);
        let p = RoadParams { occupancy: 0.5, ..RoadParams::default() };
        let a = place_cars_on_roads(&net, &catalog(), &p, 7).unwrap();
        assert_eq!(a, place_cars_on_roads(&net, &catalog(), &p, 7).unwrap());
        assert!(a.iter().any(|c| c.asset_id == "sedan") && a.iter().any(|c| c.asset_id == "truck"));
        assert!(a.iter().all(|c| c.material_variant < 4));
    }
}
