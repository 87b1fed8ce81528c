//! Reference spectra and nearest-angle matching.
//!
//! On disk a library is a directory of `.txt` files, one material each:
//!
//! ```text
//! Name: Asphalt road
//! Class: asphalt, road
//! 400 4.1
//! 410 4.2
//! ...
//! ```
//!
//! Header lines are `Key: value`; `Name` and `Class` (comma-separated tags)
//! are used, an `X Units` value mentioning micrometers rescales wavelengths
//! to nm, and other keys are ignored. Data rows are `wavelength reflectance`
//! separated by whitespace or a comma. Reflectance is read as percent and
//! divided by 100 when any value exceeds 2. Rows may come in either
//! wavelength order. Files are loaded in file-name order and numbered from
//! zero.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::curve::{resample_to_bands, BandSet, BandVector, SpectralCurve};
use super::sam::spectral_angle_slices;
use super::SpectralError;

pub type MaterialId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialRecord {
    pub id: MaterialId,
    pub name: String,
    pub class_tags: Vec<String>,
    pub curve: SpectralCurve,
}

impl MaterialRecord {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.class_tags.iter().any(|t| t.eq_ignore_ascii_case(tag))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaterialLibrary {
    records: Vec<MaterialRecord>,
}

impl MaterialLibrary {
    pub fn new(records: Vec<MaterialRecord>) -> Result<Self, SpectralError> {
        let mut ids: Vec<_> = records.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(SpectralError::Library("duplicate material id".into()));
        }
        Ok(Self { records })
    }

    /// Builds a library from `(name, tags, curve)` triples numbered in order.
    pub fn from_curves<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = (S, Vec<String>, SpectralCurve)>,
        S: Into<String>,
    {
        let records = items
            .into_iter()
            .enumerate()
            .map(|(id, (name, class_tags, curve))| MaterialRecord { id, name: name.into(), class_tags, curve })
            .collect();
        Self { records }
    }

    pub fn records(&self) -> &[MaterialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: MaterialId) -> Option<&MaterialRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn find_by_name(&self, name: &str) -> Option<&MaterialRecord> {
        self.records.iter().find(|r| r.name.eq_ignore_ascii_case(name))
    }

    pub fn with_tag<'a>(&'a self, tag: &'a str) -> impl Iterator<Item = &'a MaterialRecord> + 'a {
        self.records.iter().filter(move |r| r.has_tag(tag))
    }

    pub fn load_dir(dir: &Path) -> Result<Self, SpectralError> {
        let mut paths: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("txt")))
            .collect();
        paths.sort();
        let mut records = Vec::with_capacity(paths.len());
        for (id, path) in paths.iter().enumerate() {
            let text = fs::read_to_string(path)?;
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let (name, tags, curve) = parse_spectrum(&text, &stem).map_err(|e| SpectralError::Library(format!("{}: {e}", path.display())))?;
            records.push(MaterialRecord { id, name, class_tags: tags, curve });
        }
        if records.is_empty() {
            return Err(SpectralError::EmptyLibrary);
        }
        Self::new(records)
    }
}

/// Parses one library file. `fallback_name` is used when there is no
/// `Name:` header.
pub fn parse_spectrum(text: &str, fallback_name: &str) -> Result<(String, Vec<String>, SpectralCurve), SpectralError> {
    let mut name = None;
    let mut tags = Vec::new();
    let mut wl_scale = 1.0;
    let mut rows: Vec<(f64, f64)> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let mut fields = line.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty());
        let first = fields.next().and_then(|f| f.parse::<f64>().ok());
        let second = fields.next().and_then(|f| f.parse::<f64>().ok());
        if let (Some(w), Some(r)) = (first, second) {
            rows.push((w, r));
            continue;
        }
        if !rows.is_empty() {
            return Err(SpectralError::Library(format!("unexpected line after data: `{line}`")));
        }
        if let Some((key, value)) = line.split_once(':') {
            match key.trim().to_ascii_lowercase().as_str() {
                "name" => name = Some(value.trim().to_string()),
                "class" => tags.extend(value.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty())),
                "x units" if value.to_ascii_lowercase().contains("micrometer") => wl_scale = 1000.0,
                _ => {}
            }
        }
    }
    if rows.is_empty() {
        return Err(SpectralError::Library("no data rows".into()));
    }
    let percent = rows.iter().any(|&(_, r)| r > 2.0);
    let mut rows: Vec<(f64, f64)> = rows.into_iter().map(|(w, r)| (w * wl_scale, if percent { r / 100.0 } else { r })).collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut wl: Vec<f64> = Vec::with_capacity(rows.len());
    let mut refl: Vec<f64> = Vec::with_capacity(rows.len());
    let mut i = 0;
    while i < rows.len() {
        let mut j = i;
        while j < rows.len() && rows[j].0 == rows[i].0 {
            j += 1;
        }
        wl.push(rows[i].0);
        refl.push(rows[i..j].iter().map(|r| r.1).sum::<f64>() / (j - i) as f64);
        i = j;
    }
    let curve = SpectralCurve::new(wl, refl)?;
    Ok((name.unwrap_or_else(|| fallback_name.to_string()), tags, curve))
}

/// Two-column `nm reflectance` text. Values use the shortest representation
/// that reads back to the same `f64`.
pub fn format_reflectance(curve: &SpectralCurve) -> String {
    let mut s = String::new();
    for (w, r) in curve.wavelengths().iter().zip(curve.reflectance()) {
        let _ = writeln!(s, "{w:?} {r:?}");
    }
    s
}

pub fn format_library_file(record: &MaterialRecord) -> String {
    let mut s = format!("Name: {}\n", record.name);
    if !record.class_tags.is_empty() {
        s.push_str(&format!("Class: {}\n", record.class_tags.join(", ")));
    }
    s.push_str(&format_reflectance(&record.curve));
    s
}

/// A library resampled onto one band set, ready for matching.
#[derive(Clone, Debug)]
pub struct ResampledLibrary {
    bands: BandSet,
    ids: Vec<MaterialId>,
    vectors: Vec<BandVector>,
}

impl ResampledLibrary {
    pub fn new(library: &MaterialLibrary, bands: &BandSet) -> Result<Self, SpectralError> {
        if library.is_empty() {
            return Err(SpectralError::EmptyLibrary);
        }
        let mut ids = Vec::with_capacity(library.len());
        let mut vectors = Vec::with_capacity(library.len());
        for r in library.records() {
            let v = resample_to_bands(&r.curve, bands).map_err(|e| SpectralError::Library(format!("material {} ({}): {e}", r.id, r.name)))?;
            ids.push(r.id);
            vectors.push(v);
        }
        Ok(Self { bands: bands.clone(), ids, vectors })
    }

    pub fn bands(&self) -> &BandSet {
        &self.bands
    }

    pub fn vector(&self, id: MaterialId) -> Option<&BandVector> {
        self.ids.iter().position(|&i| i == id).map(|p| &self.vectors[p])
    }

    pub fn entries(&self) -> impl Iterator<Item = (MaterialId, &BandVector)> {
        self.ids.iter().copied().zip(self.vectors.iter())
    }

    /// Record with the smallest spectral angle to `x`; ties go to the lowest
    /// id.
    pub fn best_match(&self, x: &BandVector) -> Result<(MaterialId, f64), SpectralError> {
        let mut best: Option<(MaterialId, f64)> = None;
        for (id, v) in self.entries() {
            let angle = match spectral_angle_slices(x.values(), v.values()) {
                Ok(a) => a,
                // A library spectrum that is zero in every band matches
                // nothing.
                Err(SpectralError::ZeroVector) if v.norm() == 0.0 => continue,
                Err(e) => return Err(e),
            };
            best = match best {
                Some((bid, ba)) if ba < angle || (ba == angle && bid < id) => Some((bid, ba)),
                _ => Some((id, angle)),
            };
        }
        best.ok_or(SpectralError::EmptyLibrary)
    }
}

pub fn match_material(x: &BandVector, library: &MaterialLibrary, bands: &BandSet) -> Result<(MaterialId, f64), SpectralError> {
    ResampledLibrary::new(library, bands)?.best_match(x)
}
