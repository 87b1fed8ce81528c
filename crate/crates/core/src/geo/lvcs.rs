//! Local vertical coordinate system (east/north/up) anchored at a geodetic
//! origin.
//!
//! The conversion is a local tangent-plane approximation on the WGS-84
//! ellipsoid: latitude offsets scale by the meridian radius of curvature and
//! longitude offsets by the prime-vertical radius times `cos(lat)`, both
//! evaluated at the origin latitude. Scenes are a few kilometres across, so
//! the curvature error stays at the centimetre level.

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

use super::GeoError;

/// WGS-84 semi-major axis in meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;

fn e2() -> f64 {
    WGS84_F * (2.0 - WGS84_F)
}

/// Meridian radius of curvature at `lat_deg`.
pub fn meridian_radius(lat_deg: f64) -> f64 {
    let s = lat_deg.to_radians().sin();
    WGS84_A * (1.0 - e2()) / (1.0 - e2() * s * s).powf(1.5)
}

/// Prime-vertical radius of curvature at `lat_deg`.
pub fn prime_vertical_radius(lat_deg: f64) -> f64 {
    let s = lat_deg.to_radians().sin();
    WGS84_A / (1.0 - e2() * s * s).sqrt()
}

/// Meters per degree of latitude and longitude at `lat_deg`.
pub fn meters_per_degree(lat_deg: f64) -> (f64, f64) {
    let lat = meridian_radius(lat_deg).to_radians();
    let lon = (prime_vertical_radius(lat_deg) * lat_deg.to_radians().cos()).to_radians();
    (lat, lon)
}

/// Point in the local frame: x east, y north, z up, all in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, o: &Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Point3) -> Point3 {
        Point3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(&self) -> Option<Point3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| *self * (1.0 / n))
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Geodetic anchor of the local frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LvcsOrigin {
    pub lat: f64,
    pub lon: f64,
    pub elev: f64,
}

impl LvcsOrigin {
    pub fn new(lat: f64, lon: f64, elev: f64) -> Result<Self, GeoError> {
        check_geodetic(lat, lon, elev)?;
        Ok(Self { lat, lon, elev })
    }

    pub fn to_local(&self, lat: f64, lon: f64, elev: f64) -> Result<Point3, GeoError> {
        lvcs_from_geodetic(lat, lon, elev, self)
    }

    pub fn to_geodetic(&self, p: Point3) -> Result<(f64, f64, f64), GeoError> {
        geodetic_from_lvcs(p, self)
    }
}

fn check_geodetic(lat: f64, lon: f64, elev: f64) -> Result<(), GeoError> {
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) || !elev.is_finite() {
        return Err(GeoError::Domain(format!("geodetic coordinate out of range: lat {lat}, lon {lon}, elev {elev}")));
    }
    Ok(())
}

fn lon_scale(origin: &LvcsOrigin) -> Result<f64, GeoError> {
    let scale = prime_vertical_radius(origin.lat) * origin.lat.to_radians().cos();
    if scale < 1e-3 {
        return Err(GeoError::Domain("tangent plane undefined at the poles".into()));
    }
    Ok(scale)
}

/// Offsets of a geodetic point from `origin` in the local frame.
///
/// The point must lie within one degree of the origin in both latitude and
/// longitude.
pub fn lvcs_from_geodetic(lat: f64, lon: f64, elev: f64, origin: &LvcsOrigin) -> Result<Point3, GeoError> {
    check_geodetic(lat, lon, elev)?;
    check_geodetic(origin.lat, origin.lon, origin.elev)?;
    let dlat = lat - origin.lat;
    let dlon = lon - origin.lon;
    if dlat.abs() >= 1.0 || dlon.abs() >= 1.0 {
        return Err(GeoError::Domain(format!("point ({lat}, {lon}) is more than 1 degree from the origin")));
    }
    Ok(Point3::new(dlon.to_radians() * lon_scale(origin)?, dlat.to_radians() * meridian_radius(origin.lat), elev - origin.elev))
}

/// Inverse of [`lvcs_from_geodetic`].
pub fn geodetic_from_lvcs(p: Point3, origin: &LvcsOrigin) -> Result<(f64, f64, f64), GeoError> {
    if !p.is_finite() {
        return Err(GeoError::Domain("non-finite local point".into()));
    }
    let lat = origin.lat + (p.y / meridian_radius(origin.lat)).to_degrees();
    let lon = origin.lon + (p.x / lon_scale(origin)?).to_degrees();
    Ok((lat, lon, origin.elev + p.z))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Meridian arc length between two latitudes by composite Simpson
    /// quadrature of the meridian radius; independent of the tangent-plane
    /// shortcut.
    fn meridian_arc(lat0: f64, lat1: f64) -> f64 {
        let n = 1000;
        let (a, b) = (lat0.to_radians(), lat1.to_radians());
        let h = (b - a) / n as f64;
        let m = |phi: f64| {
            let s = phi.sin();
            WGS84_A * (1.0 - e2()) / (1.0 - e2() * s * s).powf(1.5)
        };
        let mut sum = m(a) + m(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * m(a + i as f64 * h);
        }
        sum * h / 3.0
    }

    #[test]
    fn origin_maps_to_zero() {
        let o = LvcsOrigin::new(32.88, -117.24, 100.0).unwrap();
        let p = lvcs_from_geodetic(32.88, -117.24, 100.0, &o).unwrap();
        assert_eq!(p, Point3::new(0.0, 0.0, 0.0));
        let p = lvcs_from_geodetic(32.88, -117.24, 105.0, &o).unwrap();
        assert_eq!(p, Point3::new(0.0, 0.0, 5.0));
    }

    #[test]
    fn northward_offset_matches_meridian_arc() {
        let o = LvcsOrigin::new(0.0, 0.0, 0.0).unwrap();
        let p = lvcs_from_geodetic(0.001, 0.0, 0.0, &o).unwrap();
        let arc = meridian_arc(0.0, 0.001);
        assert!((arc - 110.57).abs() < 0.5, "oracle arc {arc}");
        assert!((p.y - arc).abs() < 1e-3, "{} vs {}", p.y, arc);
        assert!((p.y - 110.57).abs() < 0.5);
        assert_eq!(p.x, 0.0);
    }

    #[test]
    fn zero_maps_back_to_origin() {
        let o = LvcsOrigin::new(-33.9, 151.2, 12.0).unwrap();
        assert_eq!(geodetic_from_lvcs(Point3::default(), &o).unwrap(), (-33.9, 151.2, 12.0));
    }

    #[test]
    fn round_trip_sweep_within_5km() {
        let o = LvcsOrigin::new(32.88, -117.24, 100.0).unwrap();
        let mut rng = crate::rng::Stream::new(3);
        let (mlat, mlon) = meters_per_degree(o.lat);
        for _ in 0..100 {
            let dx = rng.range(-5000.0, 5000.0);
            let dy = rng.range(-5000.0, 5000.0);
            let lat = o.lat + dy / mlat;
            let lon = o.lon + dx / mlon;
            let elev = rng.range(-50.0, 400.0);
            let p = lvcs_from_geodetic(lat, lon, elev, &o).unwrap();
            let (lat2, lon2, elev2) = geodetic_from_lvcs(p, &o).unwrap();
            assert!((lat - lat2).abs() < 1e-6);
            assert!((lon - lon2).abs() < 1e-6);
            assert!((elev - elev2).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_far_and_invalid_points() {
        let o = LvcsOrigin::new(10.0, 10.0, 0.0).unwrap();
        assert!(lvcs_from_geodetic(11.5, 10.0, 0.0, &o).is_err());
        assert!(lvcs_from_geodetic(95.0, 10.0, 0.0, &o).is_err());
        assert!(LvcsOrigin::new(10.0, 190.0, 0.0).is_err());
    }
}
