//! Wavefront OBJ input and output (positions and faces only).

use std::fmt::Write as _;

use crate::error::ObjError;
use crate::geometry::Vec3;
use crate::mesh::TriMesh;

/// Parses `v` and `f` records. Texture/normal indices, materials, groups and
/// other records are ignored; polygons are fan-triangulated.
pub fn parse_obj(id: &str, text: &str) -> Result<TriMesh<f64>, ObjError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: String| ObjError::Parse { line, message };
        let mut parts = raw.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = parts.next().ok_or_else(|| err("vertex needs 3 coordinates".into()))?;
                    *slot = tok.parse().map_err(|_| err(format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(Vec3::from(c));
            }
            Some("f") => {
                let idx = parts
                    .map(|tok| {
                        let first = tok.split('/').next().unwrap_or("");
                        let i: i64 = first.parse().map_err(|_| err(format!("bad face index {tok:?}")))?;
                        let resolved = if i < 0 { vertices.len() as i64 + i } else { i - 1 };
                        if resolved < 0 || resolved >= vertices.len() as i64 {
                            return Err(err(format!("face index {i} out of range")));
                        }
                        Ok(resolved as u32)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                if idx.len() < 3 {
                    return Err(err("face needs at least 3 vertices".into()));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(TriMesh::new(id, vertices, triangles)?)
}

pub fn write_obj(mesh: &TriMesh<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "o {}", mesh.id);
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for [a, b, c] in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    out
}

pub fn read_obj_file(path: &std::path::Path) -> Result<TriMesh<f64>, ObjError> {
    let text = std::fs::read_to_string(path)?;
    let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    parse_obj(id, &text)
}
