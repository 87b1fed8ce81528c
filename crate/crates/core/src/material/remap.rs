//! Substitution of matched materials by scene-appropriate ones, optionally
//! distinguishing terrain from built surfaces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geo::RasterGrid;
use crate::spectral::{MaterialId, MaterialLibrary};

use super::maps::MaterialMap;
use super::MappingError;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemapSource {
    Material(MaterialId),
    Tag(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceContext {
    Terrain,
    Structure,
    Any,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemapRule {
    pub source: RemapSource,
    pub context: SurfaceContext,
    pub target: MaterialId,
}

/// Remap rules keyed by `(source, context)`.
///
/// Lookup for a pixel tries, in order: its material in its context, its
/// material in any context, each of its class tags in its context, each of
/// its class tags in any context. Tags are tried in the order the library
/// record lists them.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RemapTable {
    rules: BTreeMap<(RemapSource, SurfaceContext), MaterialId>,
}

impl RemapTable {
    pub fn new(rules: impl IntoIterator<Item = RemapRule>) -> Result<Self, MappingError> {
        let mut table = Self::default();
        for rule in rules {
            let key = (rule.source, rule.context);
            if table.rules.contains_key(&key) {
                return Err(MappingError::DuplicateRule(format!("{:?} in {:?} context", key.0, key.1)));
            }
            table.rules.insert(key, rule.target);
        }
        Ok(table)
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn lookup(&self, material: MaterialId, tags: &[String], context: SurfaceContext) -> Option<MaterialId> {
        let get = |src: RemapSource, ctx| self.rules.get(&(src, ctx)).copied();
        get(RemapSource::Material(material), context)
            .or_else(|| get(RemapSource::Material(material), SurfaceContext::Any))
            .or_else(|| tags.iter().find_map(|t| get(RemapSource::Tag(t.to_ascii_lowercase()), context)))
            .or_else(|| tags.iter().find_map(|t| get(RemapSource::Tag(t.to_ascii_lowercase()), SurfaceContext::Any)))
    }
}

/// Remaps every pixel by material and surface context. Pixels without a
/// matching rule keep their material. New target materials are appended to
/// the palette, so existing palette indices stay valid.
///
/// A nonzero `context_mask` pixel marks a structure surface; without a mask
/// every pixel is terrain.
pub fn apply_remap(
    map: &MaterialMap,
    table: &RemapTable,
    library: &MaterialLibrary,
    context_mask: Option<&RasterGrid>,
) -> Result<MaterialMap, MappingError> {
    if let Some(mask) = context_mask {
        if !mask.same_dims(&map.grid) {
            return Err(MappingError::InvalidParameter(format!(
                "context mask is {}x{}, material map is {}x{}",
                mask.width(),
                mask.height(),
                map.grid.width(),
                map.grid.height()
            )));
        }
    }
    let mut palette = map.palette.clone();
    // lut[i] = new palette index for old index i in (terrain, structure).
    let mut lut = Vec::with_capacity(map.palette.len());
    for (i, &id) in map.palette.iter().enumerate() {
        let tags = library.get(id).map(|r| r.class_tags.as_slice()).unwrap_or(&[]);
        let mut pair = [i; 2];
        for (slot, ctx) in [SurfaceContext::Terrain, SurfaceContext::Structure].into_iter().enumerate() {
            if let Some(target) = table.lookup(id, tags, ctx) {
                pair[slot] = match palette.iter().position(|&p| p == target) {
                    Some(j) => j,
                    None => {
                        palette.push(target);
                        palette.len() - 1
                    }
                };
            }
        }
        lut.push(pair);
    }
    let mut grid = map.grid.clone();
    let w = grid.width();
    for (k, v) in grid.band_mut(0).iter_mut().enumerate() {
        if map.grid.is_nodata(*v) {
            continue;
        }
        let structure = context_mask.is_some_and(|m| m.get(0, k / w, k % w) != 0.0);
        *v = lut[*v as usize][structure as usize] as f64;
    }
    MaterialMap::new(grid, palette)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{GeoTransform, INDEX_NODATA};
    use crate::spectral::SpectralCurve;

    fn library() -> MaterialLibrary {
        let c = || SpectralCurve::constant(350.0, 2500.0, 0.1).unwrap();
        MaterialLibrary::from_curves([
            ("asphalt", vec!["road".to_string()], c()),
            ("moroccan pine", vec!["vegetation".to_string()], c()),
            ("grass", vec!["vegetation".to_string()], c()),
            ("roof shingle", vec!["roof".to_string()], c()),
            ("soil", vec![], c()),
        ])
    }

    fn map(values: Vec<f64>, palette: Vec<usize>) -> MaterialMap {
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1.0, 2, values.len() / 2).unwrap();
        MaterialMap::new(RasterGrid::new(t, 1, values, Some(INDEX_NODATA)).unwrap(), palette).unwrap()
    }

    fn rule(source: RemapSource, context: SurfaceContext, target: usize) -> RemapRule {
        RemapRule { source, context, target }
    }

    #[test]
    fn empty_table_is_identity() {
        let m = map(vec![0.0, 1.0, INDEX_NODATA, 1.0], vec![0, 1]);
        assert_eq!(apply_remap(&m, &RemapTable::default(), &library(), None).unwrap(), m);
    }

    #[test]
    fn pine_becomes_grass() {
        let m = map(vec![0.0, 1.0, 1.0, 0.0], vec![0, 1]);
        let t = RemapTable::new([rule(RemapSource::Material(1), SurfaceContext::Any, 2)]).unwrap();
        let out = apply_remap(&m, &t, &library(), None).unwrap();
        let mats: Vec<_> = (0..4).map(|k| out.material_at(k / 2, k % 2).unwrap()).collect();
        assert_eq!(mats, vec![0, 2, 2, 0]);
    }

    #[test]
    fn structure_context_only_on_masked_pixels() {
        let m = map(vec![0.0; 4], vec![0]);
        let t = RemapTable::new([rule(RemapSource::Material(0), SurfaceContext::Structure, 3)]).unwrap();
        let mask = RasterGrid::new(m.grid.transform, 1, vec![0.0, 1.0, 0.0, 1.0], None).unwrap();
        let out = apply_remap(&m, &t, &library(), Some(&mask)).unwrap();
        let expected = [0, 3, 0, 3];
        for k in 0..4 {
            assert_eq!(out.material_at(k / 2, k % 2), Some(expected[k]));
        }
    }

    #[test]
    fn priority_material_before_tag_and_context_before_any() {
        let t = RemapTable::new([
            rule(RemapSource::Tag("vegetation".into()), SurfaceContext::Any, 4),
            rule(RemapSource::Tag("vegetation".into()), SurfaceContext::Terrain, 2),
            rule(RemapSource::Material(1), SurfaceContext::Any, 0),
        ])
        .unwrap();
        let tags = vec!["vegetation".to_string()];
        assert_eq!(t.lookup(1, &tags, SurfaceContext::Terrain), Some(0));
        assert_eq!(t.lookup(2, &tags, SurfaceContext::Terrain), Some(2));
        assert_eq!(t.lookup(2, &tags, SurfaceContext::Structure), Some(4));
        assert_eq!(t.lookup(3, &[], SurfaceContext::Structure), None);
    }

    #[test]
    fn duplicate_keys_and_bad_masks_are_rejected() {
        let r = rule(RemapSource::Material(1), SurfaceContext::Any, 2);
        assert!(RemapTable::new([r.clone(), r]).is_err());
        let m = map(vec![0.0; 4], vec![0]);
        let t = GeoTransform::new(0.0, 0.0, 1.0, 1.0, 3, 3).unwrap();
        let mask = RasterGrid::filled(t, 1, 0.0, None).unwrap();
        assert!(apply_remap(&m, &RemapTable::default(), &library(), Some(&mask)).is_err());
    }
}
