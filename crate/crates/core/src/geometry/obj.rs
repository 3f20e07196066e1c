//! Wavefront OBJ subset: `v x y z` and triangular `f a b c` records with
//! 1-based indices. Face tokens may carry `/vt/vn` suffixes, which are
//! dropped. Every other record type is skipped.

use std::fmt::Write as _;
use std::path::Path;

use super::{GeometryError, TriMesh, Vec3};

fn obj_err(line: usize, message: impl Into<String>) -> GeometryError {
    GeometryError::Obj {
        line,
        message: message.into(),
    }
}

pub fn parse_obj(text: &str) -> Result<TriMesh, GeometryError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut face_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<&str> = tokens.collect();
                if coords.len() != 3 && coords.len() != 4 {
                    return Err(obj_err(
                        line_no,
                        format!("vertex needs 3 coordinates, got {}", coords.len()),
                    ));
                }
                let mut xyz = [0.0; 3];
                for (slot, tok) in xyz.iter_mut().zip(&coords) {
                    *slot = tok
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| obj_err(line_no, format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(Vec3::from(xyz));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(obj_err(
                        line_no,
                        format!("face must be a triangle, got {} vertices", refs.len()),
                    ));
                }
                let mut tri = [0usize; 3];
                for (slot, tok) in tri.iter_mut().zip(&refs) {
                    let head = tok.split('/').next().unwrap_or("");
                    let idx: usize = head
                        .parse()
                        .map_err(|_| obj_err(line_no, format!("bad vertex index {tok:?}")))?;
                    if idx == 0 {
                        return Err(obj_err(line_no, "vertex indices are 1-based"));
                    }
                    *slot = idx - 1;
                }
                triangles.push(tri);
                face_lines.push(line_no);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, triangles).map_err(|e| match e {
        GeometryError::IndexOutOfRange { triangle, index, count } => obj_err(
            face_lines[triangle],
            format!("vertex index {} out of range ({count} vertices)", index + 1),
        ),
        GeometryError::DegenerateTriangle(t) => obj_err(face_lines[t], "degenerate triangle"),
        other => other,
    })
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriMesh, GeometryError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| GeometryError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_obj(&text)
}

/// Serializes `v`/`f` records; `parse_obj(write_obj(m))` reproduces `m`.
pub fn write_obj(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for [a, b, c] in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    out
}
