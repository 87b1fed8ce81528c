//! Scene manifest: a JSON file listing every artifact of a scene with paths
//! relative to the manifest's directory.
//!
//! Layout written by [`assemble_scene`]:
//!
//! ```text
//! manifest.json
//! meshes/terrain.obj
//! meshes/building_000.obj ...
//! meshes/decals_<material index>.obj ...
//! materials/materials.mat + one reflectance file per material
//! instances/<list name>.txt ...
//! ```
//!
//! Material and mixture maps are produced by an earlier step and are only
//! referenced.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::geo::envi::EnviHeader;
use crate::geo::LvcsOrigin;
use crate::mesh::Mesh;
use crate::placement::{AssetCatalog, PlacementRecord};

use super::decals::DecalMesh;
use super::instances::{read_instance_list, write_instance_list};
use super::matdb::{parse_index_file, write_material_database, MaterialDatabase};
use super::obj::{read_obj, write_obj};
use super::SceneError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "scenesmith-scene/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Material,
    Mixture,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeshKind {
    Terrain,
    Building,
    Decal,
}

/// ENVI raster written elsewhere; `path` is the header, relative to the
/// manifest directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapReference {
    pub name: String,
    pub kind: MapKind,
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshEntry {
    pub name: String,
    pub kind: MeshKind,
    pub path: String,
    /// Material database index, or `None` when the surface takes its
    /// materials from the maps.
    pub material: Option<usize>,
    pub vertices: usize,
    pub triangles: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialDatabaseEntry {
    pub path: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssetReference {
    pub id: String,
    /// Model file in the external asset library.
    pub model: String,
    pub variants: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub name: String,
    pub path: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneManifest {
    pub format: String,
    pub origin: LvcsOrigin,
    /// Band intervals in nanometers.
    pub bands: Vec<[f64; 2]>,
    pub material_database: MaterialDatabaseEntry,
    pub meshes: Vec<MeshEntry>,
    pub maps: Vec<MapReference>,
    pub assets: Vec<AssetReference>,
    pub instances: Vec<InstanceEntry>,
}

/// Everything needed to write a scene.
#[derive(Clone, Debug)]
pub struct SceneBundle {
    pub origin: LvcsOrigin,
    pub bands: Vec<(f64, f64)>,
    pub terrain: Mesh,
    /// Building meshes with an optional material database index each.
    pub buildings: Vec<(Mesh, Option<usize>)>,
    pub decals: Vec<DecalMesh>,
    /// Instance lists by name.
    pub instances: BTreeMap<String, Vec<PlacementRecord>>,
    pub assets: AssetCatalog,
    pub material_db: MaterialDatabase,
    pub maps: Vec<MapReference>,
}

fn rel(path: &Path) -> String {
    path.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect::<Vec<_>>().join("/")
}

/// Writes all scene files under `out_dir`, then the manifest, and validates
/// the result. Re-running with the same bundle rewrites identical bytes.
pub fn assemble_scene(bundle: &SceneBundle, out_dir: &Path) -> Result<SceneManifest, SceneError> {
    let n = bundle.material_db.len();
    for (i, (_, m)) in bundle.buildings.iter().enumerate() {
        if m.is_some_and(|m| m >= n) {
            return Err(SceneError::InvalidParameter(format!("building {i} material outside the database")));
        }
    }
    std::fs::create_dir_all(out_dir.join("meshes"))?;
    std::fs::create_dir_all(out_dir.join("instances"))?;
    let mut meshes = Vec::new();
    let mut put = |name: String, kind: MeshKind, mesh: &Mesh, material: Option<usize>| -> Result<(), SceneError> {
        let path = PathBuf::from("meshes").join(format!("{name}.obj"));
        write_obj(mesh, &out_dir.join(&path)).map_err(|e| match e {
            SceneError::InvalidMesh { reason, .. } => SceneError::InvalidMesh { name: name.clone(), reason },
            e => e,
        })?;
        meshes.push(MeshEntry { name, kind, path: rel(&path), material, vertices: mesh.vertex_count(), triangles: mesh.triangle_count() });
        Ok(())
    };
    put("terrain".into(), MeshKind::Terrain, &bundle.terrain, None)?;
    for (i, (mesh, material)) in bundle.buildings.iter().enumerate() {
        put(format!("building_{i:03}"), MeshKind::Building, mesh, *material)?;
    }
    let mut by_material: BTreeMap<usize, Mesh> = BTreeMap::new();
    for d in &bundle.decals {
        if d.material >= n {
            return Err(SceneError::InvalidParameter(format!("decal for edge {} has material {} outside the database", d.edge, d.material)));
        }
        by_material.entry(d.material).or_default().append(&d.mesh);
    }
    for (material, mesh) in &by_material {
        put(format!("decals_{material}"), MeshKind::Decal, mesh, Some(*material))?;
    }

    let mat_path = write_material_database(&bundle.material_db, &out_dir.join("materials"))?;
    let mut instances = Vec::new();
    for (name, records) in &bundle.instances {
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(SceneError::InvalidParameter(format!("instance list name `{name}`")));
        }
        let path = PathBuf::from("instances").join(format!("{name}.txt"));
        write_instance_list(records, &out_dir.join(&path))?;
        instances.push(InstanceEntry { name: name.clone(), path: rel(&path), count: records.len() });
    }
    let manifest = SceneManifest {
        format: MANIFEST_FORMAT.into(),
        origin: bundle.origin,
        bands: bundle.bands.iter().map(|&(lo, hi)| [lo, hi]).collect(),
        material_database: MaterialDatabaseEntry { path: rel(mat_path.strip_prefix(out_dir).unwrap_or(&mat_path)), count: n },
        meshes,
        maps: bundle.maps.clone(),
        assets: bundle.assets.entries.iter().map(|(id, e)| AssetReference { id: id.clone(), model: e.mesh.clone(), variants: e.variants }).collect(),
        instances,
    };
    let path = out_dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| SceneError::Parse(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text)?;
    validate_manifest(&path)
}

/// Loads a manifest and checks every reference: files exist, material
/// indices are inside the database, meshes parse with UVs in `[0, 1]`,
/// mixture bands match the database order, and every instance names a
/// listed asset and variant. All problems are reported together.
pub fn validate_manifest(path: &Path) -> Result<SceneManifest, SceneError> {
    let manifest: SceneManifest =
        serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| SceneError::Parse(format!("{}: {e}", path.display())))?;
    let root = path.parent().unwrap_or(Path::new("."));
    let mut problems = Vec::new();
    if manifest.format != MANIFEST_FORMAT {
        problems.push(format!("unknown format `{}`", manifest.format));
    }
    let n = manifest.material_database.count;
    let mut names: Option<Vec<String>> = None;
    let db_path = root.join(&manifest.material_database.path);
    match std::fs::read_to_string(&db_path) {
        Err(_) => problems.push(format!("missing material database {}", manifest.material_database.path)),
        Ok(text) => match parse_index_file(&text) {
            Err(e) => problems.push(e.to_string()),
            Ok(lines) => {
                if lines.len() != n {
                    problems.push(format!("material database lists {} entries, manifest says {n}", lines.len()));
                }
                let dir = db_path.parent().unwrap_or(root);
                for (_, _, file, _) in &lines {
                    if !dir.join(file).is_file() {
                        problems.push(format!("missing reflectance file {file}"));
                    }
                }
                names = Some(lines.into_iter().map(|l| l.1).collect());
            }
        },
    }
    for m in &manifest.meshes {
        if let Some(i) = m.material.filter(|&i| i >= n) {
            problems.push(format!("mesh {} uses material {i} outside the database", m.name));
        }
        match read_obj(&root.join(&m.path)) {
            Err(SceneError::Io(_)) => problems.push(format!("missing mesh {}", m.path)),
            Err(e) => problems.push(format!("mesh {}: {e}", m.path)),
            Ok(mesh) => {
                if let Err(reason) = mesh.validate() {
                    problems.push(format!("mesh {}: {reason}", m.path));
                }
                if mesh.vertex_count() != m.vertices || mesh.triangle_count() != m.triangles {
                    problems.push(format!("mesh {} does not match its recorded size", m.path));
                }
            }
        }
    }
    for map in &manifest.maps {
        let hdr = root.join(&map.path);
        let header = std::fs::read_to_string(&hdr).ok().and_then(|t| EnviHeader::parse(&t).ok());
        let Some(header) = header else {
            problems.push(format!("missing or unreadable map {}", map.path));
            continue;
        };
        if !crate::geo::envi::data_path_for(&hdr).is_file() {
            problems.push(format!("missing data file for map {}", map.path));
        }
        if map.kind == MapKind::Mixture {
            if header.bands != n {
                problems.push(format!("mixture map {} has {} bands for {n} materials", map.path, header.bands));
            } else if let (Some(bn), Some(names)) = (&header.band_names, &names) {
                if bn != names {
                    problems.push(format!("mixture map {} band order differs from the material database", map.path));
                }
            }
        }
    }
    let assets: BTreeMap<&str, usize> = manifest.assets.iter().map(|a| (a.id.as_str(), a.variants)).collect();
    for list in &manifest.instances {
        match read_instance_list(&root.join(&list.path)) {
            Err(SceneError::Io(_)) => problems.push(format!("missing instance list {}", list.path)),
            Err(e) => problems.push(format!("instance list {}: {e}", list.path)),
            Ok(records) => {
                if records.len() != list.count {
                    problems.push(format!("instance list {} has {} lines, manifest says {}", list.path, records.len(), list.count));
                }
                let mut unknown = BTreeSet::new();
                for r in &records {
                    match assets.get(r.asset_id.as_str()) {
                        None => {
                            unknown.insert(r.asset_id.clone());
                        }
                        Some(&v) if r.material_variant >= v => {
                            problems.push(format!("{}: {} variant {} out of range", list.path, r.asset_id, r.material_variant));
                        }
                        _ => {}
                    }
                }
                for id in unknown {
                    problems.push(format!("{}: unknown asset `{id}`", list.path));
                }
            }
        }
    }
    if problems.is_empty() {
        Ok(manifest)
    } else {
        Err(SceneError::Validation(problems))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Point3;
    use crate::placement::AssetEntry;
    use crate::scene::matdb::MaterialEntry;
    use crate::spectral::SpectralCurve;

    fn bundle() -> SceneBundle {
        let terrain = Mesh {
            vertices: vec![Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 1.0, 0.0)],
            uvs: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
        };
        let curve = SpectralCurve::new(vec![400.0, 900.0], vec![0.1, 0.2]).unwrap();
        SceneBundle {
            origin: LvcsOrigin::new(43.0, -77.0, 150.0).unwrap(),
            bands: vec![(400.0, 450.0)],
            terrain,
            buildings: vec![],
            decals: vec![],
            instances: BTreeMap::new(),
            assets: AssetCatalog::default(),
            material_db: MaterialDatabase { entries: vec![MaterialEntry { name: "soil".into(), tags: vec![], curve }] },
            maps: vec![],
        }
    }

    #[test]
    fn terrain_only_scene() {
        let dir = tempfile::tempdir().unwrap();
        let m = assemble_scene(&bundle(), dir.path()).unwrap();
        assert_eq!(m.meshes.len(), 1);
        assert!(m.instances.is_empty());
        let first = std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap();
        assemble_scene(&bundle(), dir.path()).unwrap();
        assert_eq!(first, std::fs::read(dir.path().join(MANIFEST_FILE)).unwrap());
    }

    #[test]
    fn deleted_mesh_is_named() {
        let dir = tempfile::tempdir().unwrap();
        assemble_scene(&bundle(), dir.path()).unwrap();
        std::fs::remove_file(dir.path().join("meshes/terrain.obj")).unwrap();
        match validate_manifest(&dir.path().join(MANIFEST_FILE)) {
            Err(SceneError::Validation(p)) => assert!(p.iter().any(|s| s.contains("meshes/terrain.obj")), "{p:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_asset_fails_validation() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = bundle();
        b.assets = AssetCatalog::new([("oak".to_string(), AssetEntry { mesh: "oak.obj".into(), variants: 1, footprint_radius: 2.0 })]).unwrap();
        let rec =
            |id: &str| PlacementRecord { asset_id: id.into(), position: Point3::new(0.0, 0.0, 0.0), heading: 0.0, scale: 1.0, material_variant: 0 };
        b.instances.insert("trees".into(), vec![rec("oak")]);
        assert!(assemble_scene(&b, dir.path()).is_ok());
        b.instances.insert("cars".into(), vec![rec("sedan")]);
        assert!(matches!(assemble_scene(&b, dir.path()), Err(SceneError::Validation(_))));
    }
}
