use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geo::Point3;
use crate::rng::{tags, Stream};

use super::roads::right_vector;
use super::types::{wrap_angle, AssetCatalog, PlacementRecord};
use super::PlacementError;

/// A line drawn along a row of parking spots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParkingRow {
    pub start: Point3,
    pub end: Point3,
    /// Spot width along the row, in meters.
    pub spot_spacing: f64,
    /// Distance from the row line to the spot centers, to the right of the
    /// start-to-end direction, in meters.
    pub side_offset: f64,
}

impl ParkingRow {
    pub fn length(&self) -> f64 {
        (self.end.x - self.start.x).hypot(self.end.y - self.start.y)
    }

    pub fn spot_count(&self) -> usize {
        (self.length() / self.spot_spacing).floor() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParkingParams {
    pub occupancy: f64,
    /// Probability that a parked car faces out of its spot.
    pub reverse_probability: f64,
    /// Heading jitter bound, in degrees.
    pub heading_jitter_deg: f64,
    /// Position jitter bound along the row, in meters.
    pub lateral_jitter: f64,
}

impl Default for ParkingParams {
    fn default() -> Self {
        Self { occupancy: 0.7, reverse_probability: 0.1, heading_jitter_deg: 3.0, lateral_jitter: 0.2 }
    }
}

/// Fills parking spots. Spot `i` of a row sits at `(i + 0.5) * spot_spacing`
/// along it, offset `side_offset` to its right. An occupied spot gets a car
/// facing into the spot (along the right vector), reversed with
/// `reverse_probability`, with uniform heading and along-row jitter. Each
/// row draws from its own stream: occupancy first, then (for occupied
/// spots) reversal, heading jitter, position jitter, asset and variant.
pub fn place_parking(rows: &[ParkingRow], catalog: &AssetCatalog, params: &ParkingParams, seed: u64) -> Result<Vec<PlacementRecord>, PlacementError> {
    catalog.require()?;
    if !(0.0..=1.0).contains(&params.occupancy) || !(0.0..=1.0).contains(&params.reverse_probability) {
        return Err(PlacementError::InvalidParameter(format!("{params:?}")));
    }
    for (i, row) in rows.iter().enumerate() {
        if !(row.spot_spacing > 0.0) || row.length() < row.spot_spacing {
            return Err(PlacementError::InvalidParameter(format!("parking row {i} is shorter than one spot")));
        }
    }
    let jitter = params.heading_jitter_deg.to_radians();
    let per_row: Vec<Vec<PlacementRecord>> = rows
        .par_iter()
        .enumerate()
        .map(|(i, row)| {
            let mut rng = Stream::derived(seed, tags::PARKING, i as u64);
            let len = row.length();
            let dir = [(row.end.x - row.start.x) / len, (row.end.y - row.start.y) / len];
            let right = right_vector(dir).expect("normalised direction");
            let facing = right[1].atan2(right[0]);
            let mut out = Vec::new();
            for spot in 0..row.spot_count() {
                if !rng.chance(params.occupancy) {
                    continue;
                }
                let reversed = rng.chance(params.reverse_probability);
                let dh = rng.range(-jitter, jitter);
                let ds = rng.range(-params.lateral_jitter, params.lateral_jitter);
                let (asset_id, variant) = catalog.pick(&mut rng);
                let s = (spot as f64 + 0.5) * row.spot_spacing + ds;
                let t = s / len;
                out.push(PlacementRecord {
                    asset_id,
                    position: Point3::new(
                        row.start.x + s * dir[0] + row.side_offset * right[0],
                        row.start.y + s * dir[1] + row.side_offset * right[1],
                        row.start.z + t * (row.end.z - row.start.z),
                    ),
                    heading: wrap_angle(facing + if reversed { PI } else { 0.0 } + dh),
                    scale: 1.0,
                    material_variant: variant,
                });
            }
            out
        })
        .collect();
    Ok(per_row.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::types::AssetEntry;

    fn catalog() -> AssetCatalog {
        AssetCatalog::new([("car".to_string(), AssetEntry { mesh: "car.obj".into(), variants: 3, footprint_radius: 2.5 })]).unwrap()
    }

    fn row(spots: usize) -> ParkingRow {
        ParkingRow { start: Point3::new(0.0, 0.0, 1.0), end: Point3::new(2.5 * spots as f64, 0.0, 1.0), spot_spacing: 2.5, side_offset: 3.0 }
    }

    /// Replays the per-row stream to count occupied spots.
    fn occupancy_oracle(spots: usize, p: f64, seed: u64) -> usize {
        let mut rng = Stream::derived(seed, tags::PARKING, 0);
        let mut n = 0;
        for _ in 0..spots {
            if rng.chance(p) {
                n += 1;
                rng.uniform();
                rng.uniform();
                rng.uniform();
                rng.uniform();
                rng.uniform();
            }
        }
        n
    }

    #[test]
    fn full_row() {
        let p = ParkingParams { occupancy: 1.0, ..ParkingParams::default() };
        let cars = place_parking(&[row(10)], &catalog(), &p, 3).unwrap();
        assert_eq!(cars.len(), 10);
        for (i, c) in cars.iter().enumerate() {
            assert!((c.position.x - (i as f64 + 0.5) * 2.5).abs() <= 0.2 + 1e-12);
            assert!((c.position.y + 3.0).abs() < 1e-12);
            let facing_in = (wrap_angle(c.heading + std::f64::consts::FRAC_PI_2)).abs() <= 3f64.to_radians() + 1e-12;
            let backed_in = (wrap_angle(c.heading - std::f64::consts::FRAC_PI_2)).abs() <= 3f64.to_radians() + 1e-12;
            assert!(facing_in || backed_in);
        }
    }

    #[test]
    fn count_matches_stream_replay() {
        for seed in 0..5 {
            let cars = place_parking(&[row(10)], &catalog(), &ParkingParams::default(), seed).unwrap();
            assert_eq!(cars.len(), occupancy_oracle(10, 0.7, seed));
        }
    }

    #[test]
    fn rejects_short_rows_and_empty_catalog() {
        let mut short = row(1);
        short.end.x = 1.0;
        assert!(place_parking(&[short], &catalog(), &ParkingParams::default(), 0).is_err());
        assert!(place_parking(&[row(3)], &AssetCatalog::default(), &ParkingParams::default(), 0).is_err());
    }
}
