use serde::{Deserialize, Serialize};

use crate::spectral::{BandSet, MaterialId, MaterialLibrary, ResampledLibrary};

use super::kmeans::ClusterSet;
use super::MappingError;

/// Library material matched to each cluster center, and the deduplicated
/// set those matches collapse to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialCatalog {
    pub cluster_materials: Vec<MaterialId>,
    /// Spectral angle of each center to its match, in radians.
    pub cluster_angles: Vec<f64>,
    pub unique_materials: Vec<MaterialId>,
    /// Cluster index to index into `unique_materials`.
    pub remap: Vec<usize>,
}

impl MaterialCatalog {
    pub fn from_matches(matches: &[(MaterialId, f64)]) -> Self {
        let mut unique: Vec<MaterialId> = Vec::new();
        let mut remap = Vec::with_capacity(matches.len());
        for &(id, _) in matches {
            let idx = match unique.iter().position(|&u| u == id) {
                Some(i) => i,
                None => {
                    unique.push(id);
                    unique.len() - 1
                }
            };
            remap.push(idx);
        }
        let catalog = Self {
            cluster_materials: matches.iter().map(|m| m.0).collect(),
            cluster_angles: matches.iter().map(|m| m.1).collect(),
            unique_materials: unique,
            remap,
        };
        assert!(catalog.unique_count() <= catalog.cluster_count());
        catalog
    }

    pub fn with_resampled(clusters: &ClusterSet, library: &ResampledLibrary) -> Result<Self, MappingError> {
        let matches = clusters.centers.iter().map(|c| library.best_match(c)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::from_matches(&matches))
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_materials.len()
    }

    pub fn unique_count(&self) -> usize {
        self.unique_materials.len()
    }
}

/// Matches every cluster center against the library by spectral angle and
/// deduplicates the result in first-occurrence order.
pub fn build_material_catalog(clusters: &ClusterSet, library: &MaterialLibrary, bands: &BandSet) -> Result<MaterialCatalog, MappingError> {
    let resampled = ResampledLibrary::new(library, bands)?;
    MaterialCatalog::with_resampled(clusters, &resampled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{BandVector, SpectralCurve};

    fn library() -> MaterialLibrary {
        MaterialLibrary::from_curves((0..4).map(|i| {
            let wl: Vec<f64> = (0..=30).map(|j| 350.0 + 25.0 * j as f64).collect();
            let refl = wl.iter().map(|w| 0.05 + 0.1 * i as f64 + 0.0002 * (w - 350.0) * i as f64).collect();
            (format!("m{i}"), vec![], SpectralCurve::new(wl, refl).unwrap())
        }))
    }

    fn clusters(centers: Vec<BandVector>) -> ClusterSet {
        ClusterSet { k: centers.len(), centers, seed: 0, iterations: 1, sse_history: vec![] }
    }

    #[test]
    fn identical_centers_collapse() {
        let lib = library();
        let c = clusters(vec![BandVector(vec![0.2; 8]); 5]);
        let cat = build_material_catalog(&c, &lib, &BandSet::worldview3()).unwrap();
        assert_eq!(cat.unique_count(), 1);
        assert_eq!(cat.remap, vec![0; 5]);
    }

    #[test]
    fn library_centers_give_identity_remap() {
        let lib = library();
        let bands = BandSet::worldview3();
        let rl = ResampledLibrary::new(&lib, &bands).unwrap();
        let order = [2usize, 0, 3, 1];
        let c = clusters(order.iter().map(|&i| rl.vector(i).unwrap().clone()).collect());
        let cat = build_material_catalog(&c, &lib, &bands).unwrap();
        assert_eq!(cat.cluster_materials, order.to_vec());
        assert_eq!(cat.unique_materials, order.to_vec());
        assert_eq!(cat.remap, vec![0, 1, 2, 3]);
        assert!(cat.cluster_angles.iter().all(|&a| a < 1e-7));
    }

    #[test]
    fn first_occurrence_order() {
        let cat = MaterialCatalog::from_matches(&[(5, 0.1), (2, 0.0), (5, 0.2), (9, 0.0), (2, 0.3)]);
        assert_eq!(cat.unique_materials, vec![5, 2, 9]);
        assert_eq!(cat.remap, vec![0, 1, 0, 2, 1]);
    }
}
