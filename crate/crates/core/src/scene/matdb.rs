//! Material database: one reflectance file per material plus an index file
//! (`materials.mat`) whose order matches the mixture-map bands.
//!
//! Index file lines are tab-separated `index name reflectance-file tags`,
//! with tags comma-joined or `-` when there are none. Lines starting with
//! `#` are comments.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::spectral::library::{format_reflectance, parse_spectrum};
use crate::spectral::{MaterialId, MaterialLibrary, SpectralCurve};

use super::SceneError;

pub const INDEX_FILE: &str = "materials.mat";

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialEntry {
    pub name: String,
    pub tags: Vec<String>,
    pub curve: SpectralCurve,
}

/// Entries in index order; the position of an entry is its index.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MaterialDatabase {
    pub entries: Vec<MaterialEntry>,
}

impl MaterialDatabase {
    /// One entry per palette slot, in palette order.
    pub fn from_palette(palette: &[MaterialId], library: &MaterialLibrary) -> Result<Self, SceneError> {
        let entries = palette
            .iter()
            .map(|&id| {
                library
                    .get(id)
                    .map(|r| MaterialEntry { name: r.name.clone(), tags: r.class_tags.clone(), curve: r.curve.clone() })
                    .ok_or_else(|| SceneError::InvalidParameter(format!("palette references unknown material {id}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name == name)
    }

    /// Reflectance file names, made unique by appending the index where
    /// sanitised names collide.
    pub fn file_names(&self) -> Vec<String> {
        let stems: Vec<String> = self.entries.iter().map(|e| sanitize(&e.name)).collect();
        let mut seen = BTreeSet::new();
        stems
            .iter()
            .enumerate()
            .map(|(i, stem)| {
                let dup = stems.iter().filter(|s| *s == stem).count() > 1;
                let mut name = if dup { format!("{stem}_{i}") } else { stem.clone() };
                while !seen.insert(name.clone()) {
                    name = format!("{name}_{i}");
                }
                format!("{name}.txt")
            })
            .collect()
    }
}

fn sanitize(name: &str) -> String {
    let s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c.to_ascii_lowercase() } else { '_' }).collect();
    if s.is_empty() {
        "material".into()
    } else {
        s
    }
}

fn clean_field(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

pub fn format_index_file(db: &MaterialDatabase) -> String {
    let mut s = String::from("# index\tname\treflectance\ttags\n");
    for (i, (e, file)) in db.entries.iter().zip(db.file_names()).enumerate() {
        let tags =
            if e.tags.is_empty() { "-".to_string() } else { e.tags.iter().map(|t| clean_field(t).replace(',', " ")).collect::<Vec<_>>().join(",") };
        let _ = writeln!(s, "{i}\t{}\t{file}\t{tags}", clean_field(&e.name));
    }
    s
}

/// Writes the reflectance files and the index file into `out_dir` and
/// returns the index file path.
pub fn write_material_database(db: &MaterialDatabase, out_dir: &Path) -> Result<PathBuf, SceneError> {
    std::fs::create_dir_all(out_dir)?;
    for (e, file) in db.entries.iter().zip(db.file_names()) {
        std::fs::write(out_dir.join(file), format_reflectance(&e.curve))?;
    }
    let path = out_dir.join(INDEX_FILE);
    std::fs::write(&path, format_index_file(db))?;
    Ok(path)
}

/// Parsed index file line: `(index, name, reflectance file, tags)`.
pub type IndexLine = (usize, String, String, Vec<String>);

pub fn parse_index_file(text: &str) -> Result<Vec<IndexLine>, SceneError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(SceneError::Parse(format!("material index line {}: expected 4 fields", n + 1)));
        }
        let index: usize = fields[0].parse().map_err(|_| SceneError::Parse(format!("material index line {}: bad index", n + 1)))?;
        if index != out.len() {
            return Err(SceneError::Parse(format!("material index line {}: index {index} where {} was expected", n + 1, out.len())));
        }
        let tags = if fields[3] == "-" { vec![] } else { fields[3].split(',').map(str::to_string).collect() };
        out.push((index, fields[1].to_string(), fields[2].to_string(), tags));
    }
    Ok(out)
}

pub fn read_material_database(index_path: &Path) -> Result<MaterialDatabase, SceneError> {
    let dir = index_path.parent().unwrap_or(Path::new("."));
    let lines = parse_index_file(&std::fs::read_to_string(index_path)?)?;
    let mut entries = Vec::with_capacity(lines.len());
    for (_, name, file, tags) in lines {
        let text = std::fs::read_to_string(dir.join(&file))?;
        let (_, _, curve) = parse_spectrum(&text, &name).map_err(|e| SceneError::Parse(format!("{file}: {e}")))?;
        entries.push(MaterialEntry { name, tags, curve });
    }
    Ok(MaterialDatabase { entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(name: &str, level: f64) -> MaterialEntry {
        let wl: Vec<f64> = (0..20).map(|i| 400.0 + 25.0 * i as f64).collect();
        let refl = wl.iter().map(|w| level + 1e-4 * (w - 400.0) / 3.0).collect();
        MaterialEntry { name: name.into(), tags: vec!["road".into()], curve: SpectralCurve::new(wl, refl).unwrap() }
    }

    #[test]
    fn two_materials_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let db = MaterialDatabase { entries: vec![entry("Asphalt", 0.08), entry("Grass, dry", 0.3)] };
        let idx = write_material_database(&db, dir.path()).unwrap();
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 3);
        let back = read_material_database(&idx).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in back.entries.iter().zip(&db.entries) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.tags, b.tags);
            for (x, y) in a.curve.reflectance().iter().zip(b.curve.reflectance()) {
                assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn duplicate_names_get_index_suffix() {
        let db = MaterialDatabase { entries: vec![entry("Brick", 0.2), entry("brick", 0.25), entry("Soil", 0.1)] };
        assert_eq!(db.file_names(), vec!["brick_0.txt", "brick_1.txt", "soil.txt"]);
    }

    #[test]
    fn dense_indices_for_many_materials() {
        let db = MaterialDatabase { entries: (0..38).map(|i| entry(&format!("m{i}"), 0.01 * i as f64)).collect() };
        let lines = parse_index_file(&format_index_file(&db)).unwrap();
        assert_eq!(lines.len(), 38);
        assert!(lines.iter().enumerate().all(|(i, l)| l.0 == i));
    }
}
