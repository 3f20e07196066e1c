use super::bvh::Bvh;
use super::{GeometryError, Vec3};

/// Result of a closest-point query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestHit {
    pub point: Vec3,
    pub triangle: usize,
    pub distance: f64,
}

/// Result of a ray cast.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub point: Vec3,
    pub triangle: usize,
    pub t: f64,
}

/// Indexed triangle mesh with area-weighted vertex normals and a BVH.
#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    bvh: Bvh,
}

const MIN_TRIANGLE_AREA: f64 = 1e-12;

impl TriMesh {
    /// Validates the mesh and builds its acceleration structure.
    ///
    /// A mesh with no triangles is accepted; queries on it fail with
    /// [`GeometryError::EmptyMesh`].
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        if let Some(i) = vertices
            .iter()
            .position(|v| !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()))
        {
            return Err(GeometryError::NonFiniteVertex(i));
        }
        let mut normals = vec![Vec3::zeros(); vertices.len()];
        for (ti, tri) in triangles.iter().enumerate() {
            for &index in tri {
                if index >= vertices.len() {
                    return Err(GeometryError::IndexOutOfRange {
                        triangle: ti,
                        index,
                        count: vertices.len(),
                    });
                }
            }
            let [a, b, c] = tri.map(|i| vertices[i]);
            // |cross| is twice the area, so summing it weights by area.
            let cross = (b - a).cross(&(c - a));
            if 0.5 * cross.norm() <= MIN_TRIANGLE_AREA {
                return Err(GeometryError::DegenerateTriangle(ti));
            }
            for &index in tri {
                normals[index] += cross;
            }
        }
        for n in normals.iter_mut() {
            if let Some(u) = n.try_normalize(0.0) {
                *n = u;
            }
        }
        let bvh = Bvh::build(&vertices, &triangles);
        Ok(Self {
            vertices,
            triangles,
            normals,
            bvh,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, triangle: usize) -> [Vec3; 3] {
        self.triangles[triangle].map(|i| self.vertices[i])
    }

    pub fn face_normal(&self, triangle: usize) -> Vec3 {
        let [a, b, c] = self.corners(triangle);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn bounds(&self) -> super::Aabb {
        self.bvh.root_bounds()
    }

    /// Closest point on the mesh surface to `q`.
    ///
    /// Ties on distance resolve to the lowest triangle index, so the result is
    /// identical to [`TriMesh::closest_point_exhaustive`].
    pub fn closest_point(&self, q: &Vec3) -> Result<ClosestHit, GeometryError> {
        if self.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        let (point, triangle, d2) = self.bvh.closest(q, |t| {
            let [a, b, c] = self.corners(t);
            let p = closest_point_on_triangle(q, &a, &b, &c);
            (p, (q - p).norm_squared())
        });
        Ok(ClosestHit {
            point,
            triangle,
            distance: d2.sqrt(),
        })
    }

    /// Closest point on each triangle lying within `radius` of `q`, in
    /// ascending triangle order.
    pub fn closest_within(&self, q: &Vec3, radius: f64) -> Vec<ClosestHit> {
        self.bvh
            .candidates_within(q, radius)
            .into_iter()
            .filter_map(|t| {
                let [a, b, c] = self.corners(t);
                let p = closest_point_on_triangle(q, &a, &b, &c);
                let distance = (q - p).norm();
                (distance <= radius).then_some(ClosestHit {
                    point: p,
                    triangle: t,
                    distance,
                })
            })
            .collect()
    }

    /// Linear scan over every triangle; reference for the BVH path.
    pub fn closest_point_exhaustive(&self, q: &Vec3) -> Result<ClosestHit, GeometryError> {
        let mut best: Option<(Vec3, usize, f64)> = None;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.corners(t);
            let p = closest_point_on_triangle(q, &a, &b, &c);
            let d2 = (q - p).norm_squared();
            if best.is_none_or(|(_, _, bd)| d2 < bd) {
                best = Some((p, t, d2));
            }
        }
        let (point, triangle, d2) = best.ok_or(GeometryError::EmptyMesh)?;
        Ok(ClosestHit {
            point,
            triangle,
            distance: d2.sqrt(),
        })
    }

    /// First intersection of the ray `origin + t·dir`, `t ≥ 0`.
    ///
    /// `dir` must be unit length within 1e-9.
    pub fn ray_cast(&self, origin: &Vec3, dir: &Vec3) -> Result<Option<RayHit>, GeometryError> {
        check_unit(dir)?;
        if self.is_empty() {
            return Ok(None);
        }
        let hit = self.bvh.ray(origin, dir, |t| {
            let [a, b, c] = self.corners(t);
            ray_triangle(origin, dir, &a, &b, &c)
        });
        Ok(hit.map(|(triangle, t)| RayHit {
            point: origin + dir * t,
            triangle,
            t,
        }))
    }

    /// Linear-scan counterpart of [`TriMesh::ray_cast`].
    pub fn ray_cast_exhaustive(&self, origin: &Vec3, dir: &Vec3) -> Result<Option<RayHit>, GeometryError> {
        check_unit(dir)?;
        let mut best: Option<(usize, f64)> = None;
        for tri in 0..self.triangles.len() {
            let [a, b, c] = self.corners(tri);
            if let Some(t) = ray_triangle(origin, dir, &a, &b, &c) {
                if best.is_none_or(|(_, bt)| t < bt) {
                    best = Some((tri, t));
                }
            }
        }
        Ok(best.map(|(triangle, t)| RayHit {
            point: origin + dir * t,
            triangle,
            t,
        }))
    }

    /// Barycentric weights of `p` (assumed on or near the triangle's plane).
    pub fn barycentric(&self, triangle: usize, p: &Vec3) -> [f64; 3] {
        let [a, b, c] = self.corners(triangle);
        barycentric(p, &a, &b, &c)
    }

    /// Unit normal at `p`, interpolated from the triangle's vertex normals.
    pub fn interpolated_normal(&self, triangle: usize, p: &Vec3) -> Vec3 {
        let [u, v, w] = self.barycentric(triangle, p);
        let [i, j, k] = self.triangles[triangle];
        let n = self.normals[i] * u + self.normals[j] * v + self.normals[k] * w;
        n.try_normalize(1e-12).unwrap_or_else(|| self.face_normal(triangle))
    }
}

fn check_unit(dir: &Vec3) -> Result<(), GeometryError> {
    if (dir.norm() - 1.0).abs() > 1e-9 {
        return Err(GeometryError::InvalidArgument("ray direction must be unit length"));
    }
    Ok(())
}

pub(crate) fn barycentric(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> [f64; 3] {
    let v0 = b - a;
    let v1 = c - a;
    let v2 = p - a;
    let d00 = v0.dot(&v0);
    let d01 = v0.dot(&v1);
    let d11 = v1.dot(&v1);
    let d20 = v2.dot(&v0);
    let d21 = v2.dot(&v1);
    let denom = d00 * d11 - d01 * d01;
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    [1.0 - v - w, v, w]
}

/// Closest point on triangle `abc` to `p`, by Voronoi-region classification.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Möller–Trumbore ray/triangle test; returns the ray parameter `t ≥ 0`.
pub fn ray_triangle(origin: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() <= 1e-12 * e1.norm() * e2.norm() {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&qvec) * inv;
    (t >= 0.0).then_some(t)
}
