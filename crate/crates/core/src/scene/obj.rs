//! Wavefront OBJ text with `v`, `vt` and `f` records.
//!
//! Coordinates are printed with the shortest representation that reads back
//! to the same `f64`, so a write/read cycle is exact. Meshes with texture
//! coordinates write one `vt` per vertex and `f a/a b/b c/c` faces; meshes
//! without write plain `f a b c` faces. Normals are not written.

use std::fmt::Write as _;
use std::path::Path;

use crate::geo::Point3;
use crate::mesh::Mesh;

use super::SceneError;

pub fn format_obj(mesh: &Mesh) -> Result<String, SceneError> {
    mesh.validate().map_err(|reason| SceneError::InvalidMesh { name: "obj".into(), reason })?;
    let mut s = String::with_capacity(mesh.vertex_count() * 48 + mesh.triangle_count() * 24);
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for uv in &mesh.uvs {
        let _ = writeln!(s, "vt {:?} {:?}", uv[0], uv[1]);
    }
    for t in &mesh.triangles {
        let (a, b, c) = (t[0] + 1, t[1] + 1, t[2] + 1);
        if mesh.has_uvs() {
            let _ = writeln!(s, "f {a}/{a} {b}/{b} {c}/{c}");
        } else {
            let _ = writeln!(s, "f {a} {b} {c}");
        }
    }
    Ok(s)
}

pub fn write_obj(mesh: &Mesh, path: &Path) -> Result<(), SceneError> {
    let text = format_obj(mesh)?;
    std::fs::write(path, text)?;
    Ok(())
}

fn parse_index(tok: &str, count: usize, line: usize) -> Result<usize, SceneError> {
    let i: i64 = tok.parse().map_err(|_| SceneError::Parse(format!("line {line}: bad index `{tok}`")))?;
    let resolved = if i < 0 { count as i64 + i } else { i - 1 };
    if resolved < 0 || resolved as usize >= count {
        return Err(SceneError::Parse(format!("line {line}: index {i} out of range")));
    }
    Ok(resolved as usize)
}

/// Reads triangle and polygon faces (fanned into triangles). When every
/// face vertex carries a texture index equal to its position index the UVs
/// are kept per vertex; other layouts drop the UVs.
pub fn parse_obj(text: &str) -> Result<Mesh, SceneError> {
    let mut mesh = Mesh::default();
    let mut uvs: Vec<[f64; 2]> = Vec::new();
    let mut uv_aligned = true;
    let num = |tok: Option<&str>, line: usize| -> Result<f64, SceneError> {
        tok.and_then(|t| t.parse().ok()).ok_or_else(|| SceneError::Parse(format!("line {line}: expected a number")))
    };
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("v") => {
                let x = num(it.next(), line)?;
                let y = num(it.next(), line)?;
                let z = num(it.next(), line)?;
                mesh.vertices.push(Point3::new(x, y, z));
            }
            Some("vt") => {
                let u = num(it.next(), line)?;
                let v = num(it.next(), line)?;
                uvs.push([u, v]);
            }
            Some("f") => {
                let mut corners = Vec::new();
                for tok in it {
                    let mut parts = tok.split('/');
                    let vi = parse_index(parts.next().unwrap_or(""), mesh.vertices.len(), line)?;
                    match parts.next().filter(|s| !s.is_empty()) {
                        Some(t) => uv_aligned &= parse_index(t, uvs.len(), line)? == vi,
                        None => uv_aligned = false,
                    }
                    corners.push(vi);
                }
                if corners.len() < 3 {
                    return Err(SceneError::Parse(format!("line {line}: face needs at least three vertices")));
                }
                for k in 1..corners.len() - 1 {
                    mesh.triangles.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if uv_aligned && uvs.len() == mesh.vertices.len() && !mesh.triangles.is_empty() {
        mesh.uvs = uvs;
    }
    Ok(mesh)
}

pub fn read_obj(path: &Path) -> Result<Mesh, SceneError> {
    parse_obj(&std::fs::read_to_string(path)?)
}
