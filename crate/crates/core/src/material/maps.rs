use std::fmt::Write as _;
use std::path::Path;

use crate::geo::envi::{write_envi_raster_named, DataType, EnviOptions};
use crate::geo::{RasterGrid, INDEX_NODATA};
use crate::spectral::{MaterialId, MaterialLibrary};

use super::catalog::MaterialCatalog;
use super::kmeans::ClassMap;
use super::MappingError;

/// Per-pixel index into `palette`, which lists library material ids.
#[derive(Clone, Debug, PartialEq)]
pub struct MaterialMap {
    pub grid: RasterGrid,
    pub palette: Vec<MaterialId>,
}

impl MaterialMap {
    pub fn new(grid: RasterGrid, palette: Vec<MaterialId>) -> Result<Self, MappingError> {
        if grid.bands != 1 {
            return Err(MappingError::InvalidParameter("material map must have one band".into()));
        }
        let map = Self { grid, palette };
        for &v in map.grid.data() {
            map.check_index(v)?;
        }
        Ok(map)
    }

    fn check_index(&self, v: f64) -> Result<(), MappingError> {
        if self.grid.is_nodata(v) {
            return Ok(());
        }
        if v < 0.0 || v.fract() != 0.0 || v as usize >= self.palette.len() {
            return Err(MappingError::IndexOutOfRange { value: v, limit: self.palette.len() });
        }
        Ok(())
    }

    /// Palette index at a pixel, or `None` for nodata.
    pub fn index_at(&self, row: usize, col: usize) -> Option<usize> {
        let v = self.grid.get(0, row, col);
        (!self.grid.is_nodata(v)).then_some(v as usize)
    }

    /// Library material at a pixel.
    pub fn material_at(&self, row: usize, col: usize) -> Option<MaterialId> {
        self.index_at(row, col).map(|i| self.palette[i])
    }

    pub fn has_nodata(&self) -> bool {
        self.grid.data().iter().any(|&v| self.grid.is_nodata(v))
    }

    /// Writes the map as a 16-bit ENVI raster and a palette sidecar
    /// (`<index>\t<material name>` per line) next to it.
    pub fn write(&self, header_path: &Path, library: &MaterialLibrary) -> Result<(), MappingError> {
        let data_path = crate::geo::envi::data_path_for(header_path);
        write_envi_raster_named(&self.grid, header_path, &data_path, &EnviOptions::new(DataType::U16), None)?;
        std::fs::write(palette_path_for(header_path), format_palette(&self.palette, library)?)?;
        Ok(())
    }
}

pub fn palette_path_for(header_path: &Path) -> std::path::PathBuf {
    header_path.with_extension("palette.txt")
}

pub fn format_palette(palette: &[MaterialId], library: &MaterialLibrary) -> Result<String, MappingError> {
    let mut out = String::new();
    for (i, &id) in palette.iter().enumerate() {
        let rec = library.get(id).ok_or_else(|| MappingError::InvalidParameter(format!("palette entry {i} refers to unknown material {id}")))?;
        writeln!(out, "{i}\t{}", rec.name).expect("string write");
    }
    Ok(out)
}

/// Parses a palette sidecar back into material ids by name lookup.
pub fn parse_palette(text: &str, library: &MaterialLibrary) -> Result<Vec<MaterialId>, MappingError> {
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let (idx, name) = line
            .split_once('\t')
            .ok_or_else(|| MappingError::InvalidParameter(format!("palette line {}: expected `index<TAB>name`", line_no + 1)))?;
        if idx.trim().parse::<usize>().ok() != Some(out.len()) {
            return Err(MappingError::InvalidParameter(format!("palette line {}: indices must be consecutive", line_no + 1)));
        }
        let rec = library
            .find_by_name(name.trim())
            .ok_or_else(|| MappingError::InvalidParameter(format!("palette line {}: unknown material `{}`", line_no + 1, name.trim())))?;
        out.push(rec.id);
    }
    Ok(out)
}

pub fn read_material_map(header_path: &Path, library: &MaterialLibrary) -> Result<MaterialMap, MappingError> {
    let grid = crate::geo::read_envi_raster(header_path, &crate::geo::envi::data_path_for(header_path))?;
    let palette = parse_palette(&std::fs::read_to_string(palette_path_for(header_path))?, library)?;
    MaterialMap::new(grid, palette)
}

/// Replaces cluster indices with unique-material indices.
pub fn class_to_material_map(classes: &ClassMap, catalog: &MaterialCatalog) -> Result<MaterialMap, MappingError> {
    if classes.k != catalog.cluster_count() {
        return Err(MappingError::InvalidParameter(format!("class map has {} clusters but the catalog has {}", classes.k, catalog.cluster_count())));
    }
    let mut grid = classes.grid.clone();
    grid.nodata = Some(INDEX_NODATA);
    for v in grid.band_mut(0) {
        if classes.grid.is_nodata(*v) {
            *v = INDEX_NODATA;
            continue;
        }
        if *v < 0.0 || v.fract() != 0.0 || *v as usize >= classes.k {
            return Err(MappingError::IndexOutOfRange { value: *v, limit: classes.k });
        }
        *v = catalog.remap[*v as usize] as f64;
    }
    MaterialMap::new(grid, catalog.unique_materials.clone())
}
