//! Procedural meshes: planes, boxes, icospheres and open cylinders.
//!
//! Boxes use separate vertices per face so their interpolated normals stay
//! exactly perpendicular to each face.

use std::collections::HashMap;
use std::f64::consts::TAU;

use super::{TriMesh, Vec3};

fn build(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> TriMesh {
    TriMesh::new(vertices, triangles).expect("procedural mesh is valid")
}

/// Square of half-width `half` in the plane `z = center.z`, facing +z.
pub fn plane(center: Vec3, half: f64) -> TriMesh {
    grid_plane(center, half, 1)
}

/// Square plane split into `n × n` quads (`2n²` triangles), facing +z.
pub fn grid_plane(center: Vec3, half: f64, n: usize) -> TriMesh {
    assert!(n > 0 && half > 0.0);
    let step = 2.0 * half / n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(center + Vec3::new(-half + i as f64 * step, -half + j as f64 * step, 0.0));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    for j in 0..n {
        for i in 0..n {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    build(vertices, triangles)
}

/// Axis-aligned box with outward-facing triangles.
pub fn box_mesh(min: Vec3, max: Vec3) -> TriMesh {
    let c = |x: bool, y: bool, z: bool| {
        Vec3::new(
            if x { max.x } else { min.x },
            if y { max.y } else { min.y },
            if z { max.z } else { min.z },
        )
    };
    // each face listed counter-clockwise seen from outside
    let faces = [
        [
            c(false, false, true),
            c(true, false, true),
            c(true, true, true),
            c(false, true, true),
        ],
        [
            c(false, false, false),
            c(false, true, false),
            c(true, true, false),
            c(true, false, false),
        ],
        [
            c(true, false, false),
            c(true, true, false),
            c(true, true, true),
            c(true, false, true),
        ],
        [
            c(false, false, false),
            c(false, false, true),
            c(false, true, true),
            c(false, true, false),
        ],
        [
            c(false, true, false),
            c(false, true, true),
            c(true, true, true),
            c(true, true, false),
        ],
        [
            c(false, false, false),
            c(true, false, false),
            c(true, false, true),
            c(false, false, true),
        ],
    ];
    let mut vertices = Vec::with_capacity(24);
    let mut triangles = Vec::with_capacity(12);
    for quad in faces {
        let base = vertices.len();
        vertices.extend_from_slice(&quad);
        triangles.push([base, base + 1, base + 2]);
        triangles.push([base, base + 2, base + 3]);
    }
    build(vertices, triangles)
}

/// Cube of side 1 centered at the origin (12 triangles).
pub fn unit_cube() -> TriMesh {
    box_mesh(Vec3::repeat(-0.5), Vec3::repeat(0.5))
}

/// Geodesic sphere: icosahedron subdivided `subdivisions` times
/// (`20·4^subdivisions` triangles).
pub fn icosphere(center: Vec3, radius: f64, subdivisions: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let vertices = vertices.into_iter().map(|v| center + v * radius).collect();
    build(vertices, faces)
}

/// Open cylinder (side wall only) with axis along z, outward normals.
pub fn cylinder(center: Vec3, radius: f64, height: f64, segments: usize, rings: usize) -> TriMesh {
    assert!(segments >= 3 && rings >= 1);
    let mut vertices = Vec::with_capacity(segments * (rings + 1));
    for r in 0..=rings {
        let z = -height / 2.0 + height * r as f64 / rings as f64;
        for s in 0..segments {
            let a = TAU * s as f64 / segments as f64;
            vertices.push(center + Vec3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let idx = |s: usize, r: usize| r * segments + s % segments;
    let mut triangles = Vec::with_capacity(2 * segments * rings);
    for r in 0..rings {
        for s in 0..segments {
            triangles.push([idx(s, r), idx(s + 1, r), idx(s + 1, r + 1)]);
            triangles.push([idx(s, r), idx(s + 1, r + 1), idx(s, r + 1)]);
        }
    }
    build(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_counts() {
        assert_eq!(unit_cube().triangle_count(), 12);
        assert_eq!(icosphere(Vec3::zeros(), 1.0, 3).triangle_count(), 1280);
        assert_eq!(grid_plane(Vec3::zeros(), 1.0, 4).triangle_count(), 32);
        assert_eq!(cylinder(Vec3::zeros(), 1.0, 1.0, 16, 2).triangle_count(), 64);
    }

    #[test]
    fn outward_orientation() {
        let b = box_mesh(Vec3::new(-1.0, -2.0, -3.0), Vec3::new(1.0, 2.0, 3.0));
        let c = b.bounds().center();
        for t in 0..b.triangle_count() {
            let [p, _, _] = b.corners(t);
            assert!(b.face_normal(t).dot(&(p - c)) > 0.0, "triangle {t}");
        }
        let s = icosphere(Vec3::zeros(), 1.0, 1);
        for t in 0..s.triangle_count() {
            let [p, _, _] = s.corners(t);
            assert!(s.face_normal(t).dot(&p) > 0.0);
        }
        let cyl = cylinder(Vec3::zeros(), 1.0, 1.0, 12, 1);
        for t in 0..cyl.triangle_count() {
            let [p, _, _] = cyl.corners(t);
            assert!(cyl.face_normal(t).dot(&Vec3::new(p.x, p.y, 0.0)) > 0.0);
        }
        let p = plane(Vec3::zeros(), 1.0);
        assert!((p.face_normal(0) - Vec3::z()).norm() < 1e-15);
    }
}
