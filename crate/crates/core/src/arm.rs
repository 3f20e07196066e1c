//! Six-joint serial arm described by standard Denavit–Hartenberg rows:
//! forward kinematics, geometric Jacobian and damped-least-squares IK.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix6, UnitQuaternion, Vector6};
use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Vec3};

#[derive(Debug, Clone, thiserror::Error, PartialEq)]
pub enum KinematicsError {
    #[error("target unreachable (best error {position_error:.3e} m, {rotation_error:.3e} rad)")]
    Unreachable { position_error: f64, rotation_error: f64 },
    #[error("no convergence after {iterations} iterations (error {position_error:.3e} m, {rotation_error:.3e} rad)")]
    NoConvergence {
        iterations: usize,
        position_error: f64,
        rotation_error: f64,
    },
    #[error("solution lies outside joint limits")]
    LimitViolation { q: JointVector },
    #[error("invalid kinematic parameters: {0}")]
    InvalidParameters(String),
}

/// One DH row: `Rz(θ + theta_offset) · Tz(d) · Tx(a) · Rx(alpha)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DhRow {
    pub a: f64,
    pub d: f64,
    pub alpha: f64,
    #[serde(default)]
    pub theta_offset: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DhTable {
    pub rows: [DhRow; 6],
}

impl Default for DhTable {
    fn default() -> Self {
        Self::ur3()
    }
}

impl DhTable {
    /// Published UR3 (CB-series) parameters.
    pub fn ur3() -> Self {
        let a = [0.0, -0.24365, -0.21325, 0.0, 0.0, 0.0];
        let d = [0.1519, 0.0, 0.0, 0.11235, 0.08535, 0.0819];
        let alpha = [FRAC_PI_2, 0.0, 0.0, FRAC_PI_2, -FRAC_PI_2, 0.0];
        let rows = std::array::from_fn(|i| DhRow {
            a: a[i],
            d: d[i],
            alpha: alpha[i],
            theta_offset: 0.0,
        });
        Self { rows }
    }

    pub fn validate(&self) -> Result<(), KinematicsError> {
        for (i, r) in self.rows.iter().enumerate() {
            if ![r.a, r.d, r.alpha, r.theta_offset].iter().all(|v| v.is_finite()) {
                return Err(KinematicsError::InvalidParameters(format!(
                    "dh row {i} has a non-finite entry"
                )));
            }
        }
        Ok(())
    }

    /// Transform of link `i` for joint angle `q`.
    pub fn link(&self, i: usize, q: f64) -> Pose {
        let r = &self.rows[i];
        let theta = q + r.theta_offset;
        let (s, c) = theta.sin_cos();
        let rotation = UnitQuaternion::from_axis_angle(&Vec3::z_axis(), theta)
            * UnitQuaternion::from_axis_angle(&Vec3::x_axis(), r.alpha);
        Pose::new(rotation, Vec3::new(r.a * c, r.a * s, r.d))
    }

    /// Upper bound on the distance from the shoulder point `(0, 0, d1)` to the
    /// flange.
    pub fn reach_bound(&self) -> f64 {
        self.rows[0].a.abs() + self.rows[1..].iter().map(|r| r.a.abs() + r.d.abs()).sum::<f64>()
    }

    pub fn shoulder(&self) -> Vec3 {
        Vec3::new(0.0, 0.0, self.rows[0].d)
    }
}

/// Joint angles in radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector(pub [f64; 6]);

impl JointVector {
    pub fn zeros() -> Self {
        Self([0.0; 6])
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        Vector6::from_row_slice(&self.0)
    }

    pub fn from_vector(v: &Vector6<f64>) -> Self {
        Self(std::array::from_fn(|i| v[i]))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &JointVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn lerp(&self, other: &JointVector, s: f64) -> JointVector {
        Self(std::array::from_fn(|i| self.0[i] + (other.0[i] - self.0[i]) * s))
    }
}

impl std::ops::Index<usize> for JointVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl std::ops::IndexMut<usize> for JointVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JointLimits {
    pub min: [f64; 6],
    pub max: [f64; 6],
    pub max_velocity: [f64; 6],
    pub max_acceleration: [f64; 6],
}

impl Default for JointLimits {
    fn default() -> Self {
        Self {
            min: [-TAU; 6],
            max: [TAU; 6],
            max_velocity: [PI; 6],
            max_acceleration: [TAU; 6],
        }
    }
}

impl JointLimits {
    pub fn validate(&self) -> Result<(), KinematicsError> {
        for i in 0..6 {
            if !(self.min[i] < self.max[i]) {
                return Err(KinematicsError::InvalidParameters(format!(
                    "joint {i}: min must be below max"
                )));
            }
            if !(self.max_velocity[i] > 0.0 && self.max_acceleration[i] > 0.0) {
                return Err(KinematicsError::InvalidParameters(format!(
                    "joint {i}: velocity and acceleration limits must be positive"
                )));
            }
        }
        Ok(())
    }

    pub fn contains(&self, q: &JointVector) -> bool {
        (0..6).all(|i| q[i] >= self.min[i] && q[i] <= self.max[i])
    }

    /// Shifts each joint by whole turns to land inside the limits when
    /// possible; joints that cannot be brought inside are left unchanged.
    pub fn wrap_into(&self, q: &JointVector) -> JointVector {
        let mut out = *q;
        for i in 0..6 {
            let v = q[i];
            if v >= self.min[i] && v <= self.max[i] {
                continue;
            }
            let k = ((self.min[i] - v) / TAU).ceil();
            let shifted = v + k * TAU;
            if shifted <= self.max[i] {
                out[i] = shifted;
            }
        }
        out
    }
}

/// Frames of every joint axis plus the flange: `frames[0]` is the base,
/// `frames[6]` the flange.
pub fn link_frames(dh: &DhTable, q: &JointVector) -> [Pose; 7] {
    let mut frames = [Pose::identity(); 7];
    for i in 0..6 {
        frames[i + 1] = frames[i].compose(&dh.link(i, q[i]));
    }
    frames
}

/// Flange pose in the base frame.
pub fn forward_kinematics(dh: &DhTable, q: &JointVector) -> Pose {
    (0..6).fold(Pose::identity(), |acc, i| acc.compose(&dh.link(i, q[i])))
}

/// Geometric Jacobian: rows 0..3 linear velocity (m/rad), rows 3..6 angular
/// velocity (rad/rad), both in the base frame.
pub fn jacobian(dh: &DhTable, q: &JointVector) -> Matrix6<f64> {
    let frames = link_frames(dh, q);
    let tip = frames[6].translation;
    let mut j = Matrix6::zeros();
    for (i, frame) in frames[..6].iter().enumerate() {
        let z = frame.transform_vector(&Vec3::z());
        let lin = z.cross(&(tip - frame.translation));
        j.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        j.fixed_view_mut::<3, 1>(3, i).copy_from(&z);
    }
    j
}

/// Yoshikawa manipulability `sqrt(det(J Jᵀ))`.
pub fn manipulability(dh: &DhTable, q: &JointVector) -> f64 {
    let j = jacobian(dh, q);
    (j * j.transpose()).determinant().max(0.0).sqrt()
}

/// Error (m) above which the full damping applies.
const DAMPING_FADE: f64 = 0.01;
/// Converts rotation error (rad) to an equivalent length for damping.
const ERROR_LENGTH_SCALE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IkConfig {
    pub damping: f64,
    pub max_iterations: usize,
    pub position_tolerance: f64,
    pub rotation_tolerance: f64,
}

impl Default for IkConfig {
    fn default() -> Self {
        Self {
            damping: 0.01,
            max_iterations: 200,
            position_tolerance: 1e-7,
            rotation_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IkSolution {
    pub q: JointVector,
    pub iterations: usize,
    pub position_error: f64,
    pub rotation_error: f64,
}

/// Pose error as a 6-vector `[Δp; ω]` taking `current` to `target`.
fn pose_error(current: &Pose, target: &Pose) -> Vector6<f64> {
    let dp = target.translation - current.translation;
    let w = (target.rotation * current.rotation.inverse()).scaled_axis();
    Vector6::new(dp.x, dp.y, dp.z, w.x, w.y, w.z)
}

/// Damped least-squares IK seeded from `seed`.
///
/// Iterates `Δq = Jᵀ (J Jᵀ + λ² I)⁻¹ e` until the pose error is within the
/// configured tolerance. `λ` is the configured damping while the error exceeds
/// 1 cm and shrinks in proportion to the error below that. Converged joints
/// are wrapped by whole turns into `limits` when possible.
pub fn inverse_kinematics(
    dh: &DhTable,
    target: &Pose,
    seed: &JointVector,
    limits: &JointLimits,
    cfg: &IkConfig,
) -> Result<IkSolution, KinematicsError> {
    let beyond_reach = (target.translation - dh.shoulder()).norm() > dh.reach_bound();
    let lambda2 = cfg.damping * cfg.damping;
    let mut q = seed.to_vector();
    let mut best = (f64::INFINITY, f64::INFINITY);
    for iteration in 0..=cfg.max_iterations {
        let qv = JointVector::from_vector(&q);
        let err = pose_error(&forward_kinematics(dh, &qv), target);
        let pos_err = err.fixed_rows::<3>(0).norm();
        let rot_err = err.fixed_rows::<3>(3).norm();
        if pos_err + rot_err < best.0 + best.1 {
            best = (pos_err, rot_err);
        }
        if pos_err < cfg.position_tolerance && rot_err < cfg.rotation_tolerance {
            if beyond_reach {
                break;
            }
            let wrapped = limits.wrap_into(&qv);
            if !limits.contains(&wrapped) {
                return Err(KinematicsError::LimitViolation { q: wrapped });
            }
            return Ok(IkSolution {
                q: wrapped,
                iterations: iteration,
                position_error: pos_err,
                rotation_error: rot_err,
            });
        }
        if iteration == cfg.max_iterations {
            break;
        }
        let j = jacobian(dh, &qv);
        // full damping far from the target, fading out near it so
        // ill-conditioned (near-singular) targets still converge
        let fade = ((pos_err + rot_err * ERROR_LENGTH_SCALE) / DAMPING_FADE).min(1.0);
        let jjt = j * j.transpose() + Matrix6::identity() * (lambda2 * fade * fade);
        let Some(y) = jjt.cholesky().map(|c| c.solve(&err)) else {
            break;
        };
        q += j.transpose() * y;
    }
    if beyond_reach {
        Err(KinematicsError::Unreachable {
            position_error: best.0,
            rotation_error: best.1,
        })
    } else {
        Err(KinematicsError::NoConvergence {
            iterations: cfg.max_iterations,
            position_error: best.0,
            rotation_error: best.1,
        })
    }
}

/// Summary of an FK → IK round trip over random configurations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkCheck {
    pub samples: usize,
    pub failures: usize,
    /// Largest residual among solutions the solver returned.
    pub max_position_error: f64,
    pub max_rotation_error: f64,
}

/// Draws `samples` joint vectors uniformly in `±π`, solves IK for their FK
/// pose from a seed perturbed by up to `±seed_spread` per joint, and counts
/// solutions whose pose residual misses 1e-6 m / 1e-5 rad.
pub fn ik_round_trip(
    dh: &DhTable,
    limits: &JointLimits,
    cfg: &IkConfig,
    samples: usize,
    seed_spread: f64,
    rng_seed: u64,
) -> IkCheck {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rng_seed);
    let mut check = IkCheck {
        samples,
        failures: 0,
        max_position_error: 0.0,
        max_rotation_error: 0.0,
    };
    for _ in 0..samples {
        let q = JointVector(std::array::from_fn(|_| rng.random_range(-PI..PI)));
        let target = forward_kinematics(dh, &q);
        let seed = JointVector(std::array::from_fn(|i| {
            q[i] + rng.random_range(-seed_spread..=seed_spread)
        }));
        match inverse_kinematics(dh, &target, &seed, limits, cfg) {
            Ok(sol) => {
                let (p, r) = forward_kinematics(dh, &sol.q).error_to(&target);
                check.max_position_error = check.max_position_error.max(p);
                check.max_rotation_error = check.max_rotation_error.max(r);
                if !(p < 1e-6 && r < 1e-5) {
                    check.failures += 1;
                }
            }
            Err(_) => check.failures += 1,
        }
    }
    check
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_rotation_negates_xy() {
        let dh = DhTable::ur3();
        let q0 = JointVector([0.0, -1.0, 1.2, -0.3, 0.7, 0.2]);
        let mut q1 = q0;
        q1[0] += PI;
        let a = forward_kinematics(&dh, &q0).translation;
        let b = forward_kinematics(&dh, &q1).translation;
        assert!((a.x + b.x).abs() < 1e-12 && (a.y + b.y).abs() < 1e-12);
        assert!((a.z - b.z).abs() < 1e-12);
    }

    #[test]
    fn base_axis_column() {
        let j = jacobian(&DhTable::ur3(), &JointVector::zeros());
        assert_eq!(j.fixed_view::<3, 1>(3, 0).into_owned(), Vec3::z());
    }

    #[test]
    fn stretched_pose_is_singular() {
        assert!(manipulability(&DhTable::ur3(), &JointVector::zeros()) < 1e-6);
        let q = JointVector([0.3, -1.2, 1.4, -0.5, 1.1, 0.0]);
        assert!(manipulability(&DhTable::ur3(), &q) > 1e-4);
    }

    #[test]
    fn fixed_point_needs_no_iteration() {
        let dh = DhTable::ur3();
        let seed = JointVector([0.2, -1.0, 1.3, -0.4, 1.2, 0.5]);
        let sol = inverse_kinematics(
            &dh,
            &forward_kinematics(&dh, &seed),
            &seed,
            &JointLimits::default(),
            &IkConfig::default(),
        )
        .unwrap();
        assert_eq!(sol.q, seed);
        assert!(sol.iterations <= 1);
    }

    #[test]
    fn far_target_unreachable() {
        let dh = DhTable::ur3();
        let target = Pose::from_translation(Vec3::new(0.9, 0.0, 0.0));
        let err = inverse_kinematics(
            &dh,
            &target,
            &JointVector::zeros(),
            &JointLimits::default(),
            &IkConfig::default(),
        )
        .unwrap_err();
        match err {
            KinematicsError::Unreachable { position_error, .. } => {
                assert!(position_error > 0.1)
            }
            other => panic!("expected Unreachable, got {other:?}"),
        }
    }

    #[test]
    fn limit_violation_reported() {
        let dh = DhTable::ur3();
        let q = JointVector([0.2, -1.0, 1.3, -0.4, 1.2, 0.5]);
        let limits = JointLimits {
            max: [0.1, TAU, TAU, TAU, TAU, TAU],
            min: [-0.1, -TAU, -TAU, -TAU, -TAU, -TAU],
            ..JointLimits::default()
        };
        let err = inverse_kinematics(&dh, &forward_kinematics(&dh, &q), &q, &limits, &IkConfig::default()).unwrap_err();
        assert!(matches!(err, KinematicsError::LimitViolation { .. }));
    }

    #[test]
    fn wrap_into_limits() {
        let limits = JointLimits {
            min: [-PI; 6],
            max: [PI; 6],
            ..JointLimits::default()
        };
        let q = JointVector([4.0, -4.0, 0.5, 7.0, -7.0, 0.0]);
        let w = limits.wrap_into(&q);
        assert!(limits.contains(&w));
        assert!((w[0] - (4.0 - TAU)).abs() < 1e-15);
        assert_eq!(w[2], 0.5);
    }

    #[test]
    fn limits_validation() {
        let mut l = JointLimits::default();
        assert!(l.validate().is_ok());
        l.max_velocity[3] = 0.0;
        assert!(l.validate().is_err());
    }
}
