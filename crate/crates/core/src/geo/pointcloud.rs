use super::lvcs::{LvcsOrigin, Point3};
use super::raster::{PixelFrame, RasterGrid};
use super::GeoError;

/// DSM samples lifted into the local frame, one point per valid pixel.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    /// `(row, col)` of the pixel each point came from.
    pub source_pixel: Vec<(usize, usize)>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push(&mut self, p: Point3, pixel: (usize, usize)) {
        self.points.push(p);
        self.source_pixel.push(pixel);
    }

    pub fn subset(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            source_pixel: indices.iter().map(|&i| self.source_pixel[i]).collect(),
        }
    }
}

/// Converts every valid DSM pixel to a point at its pixel center.
///
/// DSM values are elevations in meters on the same vertical datum as the
/// origin, so `z = dsm - origin.elev`. A nonzero `mask` sample excludes the
/// pixel (trees, water).
pub fn dsm_to_pointcloud(dsm: &RasterGrid, mask: Option<&RasterGrid>, origin: &LvcsOrigin) -> Result<PointCloud, GeoError> {
    if dsm.bands != 1 {
        return Err(GeoError::DimensionMismatch(format!("DSM must have 1 band, has {}", dsm.bands)));
    }
    if let Some(m) = mask {
        if !m.same_dims(dsm) {
            return Err(GeoError::DimensionMismatch(format!("mask is {}x{}, DSM is {}x{}", m.width(), m.height(), dsm.width(), dsm.height())));
        }
    }
    let frame = PixelFrame::new(&dsm.transform, origin)?;
    let mut cloud = PointCloud::default();
    for row in 0..dsm.height() {
        for col in 0..dsm.width() {
            let z = dsm.get(0, row, col);
            if dsm.is_nodata(z) || !z.is_finite() {
                continue;
            }
            if let Some(m) = mask {
                let v = m.get(0, row, col);
                if v != 0.0 && !m.is_nodata(v) {
                    continue;
                }
            }
            let (x, y) = frame.center(row, col);
            cloud.push(Point3::new(x, y, z - origin.elev), (row, col));
        }
    }
    Ok(cloud)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoTransform;

    fn dsm(values: Vec<f64>) -> RasterGrid {
        let t = GeoTransform::new(-117.24, 32.88, 0.3, 0.3, 3, 3).unwrap();
        RasterGrid::new(t, 1, values, Some(-9999.0)).unwrap()
    }

    #[test]
    fn one_point_per_valid_pixel() {
        let o = LvcsOrigin::new(32.88, -117.24, 2.0).unwrap();
        let cloud = dsm_to_pointcloud(&dsm(vec![10.0; 9]), None, &o).unwrap();
        assert_eq!(cloud.len(), 9);
        assert!(cloud.points.iter().all(|p| p.z == 8.0));
        let mut v = vec![10.0; 9];
        v[1] = -9999.0;
        v[7] = -9999.0;
        assert_eq!(dsm_to_pointcloud(&dsm(v), None, &o).unwrap().len(), 7);
    }

    #[test]
    fn pixel_centers_and_mask() {
        let o = LvcsOrigin::new(32.88, -117.24, 0.0).unwrap();
        let mut mask = dsm(vec![0.0; 9]);
        mask.set(0, 2, 2, 1.0);
        let cloud = dsm_to_pointcloud(&dsm(vec![1.0; 9]), Some(&mask), &o).unwrap();
        assert_eq!(cloud.len(), 8);
        assert!((cloud.points[0].x - 0.15).abs() < 1e-9);
        assert!((cloud.points[0].y + 0.15).abs() < 1e-9);
        assert_eq!(cloud.source_pixel[4], (1, 1));
    }

    #[test]
    fn mask_dimension_mismatch() {
        let o = LvcsOrigin::new(32.88, -117.24, 0.0).unwrap();
        let t = GeoTransform::new(-117.24, 32.88, 0.3, 0.3, 2, 2).unwrap();
        let mask = RasterGrid::filled(t, 1, 0.0, None).unwrap();
        assert!(dsm_to_pointcloud(&dsm(vec![1.0; 9]), Some(&mask), &o).is_err());
    }
}
