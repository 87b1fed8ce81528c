//! Indexed triangle meshes in the local frame.

use serde::{Deserialize, Serialize};

use crate::geo::Point3;

/// Triangle mesh with optional per-vertex texture coordinates. When `uvs`
/// is non-empty it has one entry per vertex. Triangles wind
/// counter-clockwise seen from outside.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<Point3>,
    pub uvs: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
}

impl Mesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn has_uvs(&self) -> bool {
        !self.uvs.is_empty()
    }

    /// Unnormalised normal (twice the area vector) of triangle `t`.
    pub fn area_vector(&self, t: usize) -> Point3 {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (b - a).cross(&(c - a))
    }

    pub fn normal(&self, t: usize) -> Option<Point3> {
        self.area_vector(t).normalized()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangle_count()).map(|t| 0.5 * self.area_vector(t).norm()).sum()
    }

    /// Checks index bounds, UV count and range, and finite coordinates.
    pub fn validate(&self) -> Result<(), String> {
        if self.has_uvs() && self.uvs.len() != self.vertices.len() {
            return Err(format!("{} uvs for {} vertices", self.uvs.len(), self.vertices.len()));
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.is_finite()) {
            return Err(format!("vertex {i} is not finite"));
        }
        if let Some(i) = self.uvs.iter().position(|uv| uv.iter().any(|c| !(0.0..=1.0).contains(c))) {
            return Err(format!("uv {i} outside [0, 1]"));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= self.vertices.len()) {
                return Err(format!("triangle {t} references a missing vertex"));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(format!("triangle {t} is degenerate"));
            }
        }
        Ok(())
    }

    /// Appends `other`, offsetting its indices. UVs are kept only when both
    /// meshes carry them (or this mesh is empty).
    pub fn append(&mut self, other: &Mesh) {
        let base = self.vertices.len();
        let keep_uvs = (self.vertices.is_empty() || self.has_uvs()) && other.has_uvs();
        if !keep_uvs {
            self.uvs.clear();
        } else {
            self.uvs.extend_from_slice(&other.uvs);
        }
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles.extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }

    /// Number of triangles incident to each undirected edge.
    pub fn edge_use(&self) -> std::collections::BTreeMap<(usize, usize), usize> {
        let mut m = std::collections::BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *m.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        m
    }
}
