//! Rigid transforms, triangle meshes and the proximity queries built on them.
//!
//! Everything here is immutable once constructed; a [`TriMesh`] can be shared
//! across threads and queried concurrently.

mod bvh;
mod mesh;
mod obj;
mod patch;
pub mod shapes;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub use mesh::{closest_point_on_triangle, ray_triangle, ClosestHit, RayHit, TriMesh};
pub use obj::{load_obj, parse_obj, write_obj};
pub use patch::{fit_circle, sagitta, Curvature, SurfacePatch};

/// Position or direction in meters.
pub type Vec3 = Vector3<f64>;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("triangle {triangle} references vertex {index}, mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        count: usize,
    },
    #[error("triangle {0} is degenerate (area below 1e-12 m^2)")]
    DegenerateTriangle(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteVertex(usize),
    #[error("invalid triangle {0} for this query")]
    InvalidTriangle(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),
    #[error("obj line {line}: {message}")]
    Obj { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

/// Rigid transform: rotation followed by translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vec3::zeros(),
        }
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        Self { rotation, translation }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self::new(UnitQuaternion::identity(), translation)
    }

    /// Builds a pose whose z axis is `normal` and x axis is `tangent`.
    ///
    /// `tangent` is re-orthogonalized against `normal`; returns `None` when the
    /// two are (nearly) parallel.
    pub fn from_frame(origin: Vec3, tangent: Vec3, normal: Vec3) -> Option<Self> {
        let z = normal.try_normalize(1e-12)?;
        let x = (tangent - z * tangent.dot(&z)).try_normalize(1e-9)?;
        let y = z.cross(&x);
        let m = Matrix3::from_columns(&[x, y, z]);
        let rot = Rotation3::from_matrix_unchecked(m);
        Some(Self::new(UnitQuaternion::from_rotation_matrix(&rot), origin))
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn transform_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn inverse(&self) -> Self {
        let rinv = self.rotation.inverse();
        Self::new(rinv, -(rinv * self.translation))
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    /// Rotation angle (rad) and translation distance (m) between two poses.
    pub fn error_to(&self, other: &Pose) -> (f64, f64) {
        let dr = other.rotation * self.rotation.inverse();
        (dr.angle(), (other.translation - self.translation).norm())
    }

    pub fn is_normalized(&self) -> bool {
        (self.rotation.as_ref().norm() - 1.0).abs() <= 1e-9
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

/// Wire/config form of a pose: quaternion `[w, x, y, z]` and position.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRecord {
    pub quat: [f64; 4],
    pub pos: [f64; 3],
}

impl From<&Pose> for PoseRecord {
    fn from(p: &Pose) -> Self {
        let q = p.rotation.as_ref();
        Self {
            quat: [q.w, q.i, q.j, q.k],
            pos: [p.translation.x, p.translation.y, p.translation.z],
        }
    }
}

impl PoseRecord {
    /// Converts without renormalizing, so values survive a round trip
    /// bit-for-bit. Fails when the quaternion is not unit within 1e-9.
    pub fn to_pose(&self) -> Option<Pose> {
        let [w, x, y, z] = self.quat;
        let q = nalgebra::Quaternion::new(w, x, y, z);
        if !(q.norm() - 1.0).abs().le(&1e-9) || self.pos.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(Pose::new(UnitQuaternion::new_unchecked(q), Vec3::from(self.pos)))
    }
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn new(a: Vec3, b: Vec3) -> Self {
        Self {
            min: a.inf(&b),
            max: a.sup(&b),
        }
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&mut self, other: &Aabb) {
        self.min = self.min.inf(&other.min);
        self.max = self.max.sup(&other.max);
    }

    pub fn padded(&self, pad: f64) -> Self {
        Self {
            min: self.min.add_scalar(-pad),
            max: self.max.add_scalar(pad),
        }
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let v = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d2 += v * v;
        }
        d2
    }

    /// Entry parameter of the ray into the box, if it enters within `[0, t_max]`.
    pub fn ray_entry(&self, origin: &Vec3, dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t_near = 0.0_f64;
        let mut t_far = t_max;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let t1 = (self.min[i] - origin[i]) * inv;
            let t2 = (self.max[i] - origin[i]) * inv;
            t_near = t_near.max(t1.min(t2));
            t_far = t_far.min(t1.max(t2));
            if t_near > t_far {
                return None;
            }
        }
        Some(t_near)
    }
}

/// Any unit vector orthogonal to `n`.
pub fn any_orthogonal(n: &Vec3) -> Vec3 {
    let axis = if n.x.abs() <= n.y.abs() && n.x.abs() <= n.z.abs() {
        Vec3::x()
    } else if n.y.abs() <= n.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    (axis - n * axis.dot(n)).normalize()
}
