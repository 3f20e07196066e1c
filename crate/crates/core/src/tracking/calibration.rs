//! Rigid point-pair registration (Kabsch, no scale).

use nalgebra::{Matrix3, Rotation3, SymmetricEigen, UnitQuaternion};

use super::{HandFrame, TrackingError};
use crate::geometry::{Pose, Vec3};

/// Maps tracker-frame coordinates into the robot base frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibrationTransform {
    pub pose: Pose,
    pub rms_residual: f64,
}

impl CalibrationTransform {
    pub fn identity() -> Self {
        Self {
            pose: Pose::identity(),
            rms_residual: 0.0,
        }
    }

    pub fn from_pose(pose: Pose) -> Self {
        Self {
            pose,
            rms_residual: 0.0,
        }
    }

    /// Robot-to-tracker transform. The residual is carried over unchanged.
    pub fn inverse(&self) -> Self {
        Self {
            pose: self.pose.inverse(),
            rms_residual: self.rms_residual,
        }
    }
}

/// Least-squares rigid transform taking each `tracker` point onto its `robot`
/// partner.
pub fn estimate_calibration(pairs: &[(Vec3, Vec3)]) -> Result<CalibrationTransform, TrackingError> {
    if pairs.len() < 3 {
        return Err(TrackingError::DegenerateConfiguration("fewer than 3 point pairs"));
    }
    if pairs
        .iter()
        .any(|(a, b)| a.iter().chain(b.iter()).any(|v| !v.is_finite()))
    {
        return Err(TrackingError::DegenerateConfiguration("non-finite point"));
    }
    let n = pairs.len() as f64;
    let ct = pairs.iter().fold(Vec3::zeros(), |acc, (t, _)| acc + t) / n;
    let cr = pairs.iter().fold(Vec3::zeros(), |acc, (_, r)| acc + r) / n;

    let mut spread = Matrix3::zeros();
    let mut h = Matrix3::zeros();
    for (t, r) in pairs {
        let dt = t - ct;
        spread += dt * dt.transpose();
        h += dt * (r - cr).transpose();
    }

    // Second-largest principal spread vanishes for collinear (or coincident) sets.
    let mut eig = SymmetricEigen::new(spread).eigenvalues;
    eig.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if !(eig[1] > 1e-12 * (1.0 + eig[0])) {
        return Err(TrackingError::DegenerateConfiguration("points are collinear"));
    }

    let svd = h.svd(true, true);
    let (u, v_t) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let fix = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d));
    let r = v * fix * u.transpose();
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let translation = cr - rotation * ct;
    let pose = Pose::new(rotation, translation);

    let sse: f64 = pairs
        .iter()
        .map(|(t, r)| (pose.transform_point(t) - r).norm_squared())
        .sum();
    Ok(CalibrationTransform {
        pose,
        rms_residual: (sse / n).sqrt(),
    })
}

/// Maps every position of `frame` through `cal.pose`.
pub fn apply_calibration(cal: &CalibrationTransform, frame: &HandFrame) -> HandFrame {
    frame.map_positions(|p| cal.pose.transform_point(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetra() -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ]
    }

    #[test]
    fn identity_pairs() {
        let pairs: Vec<_> = tetra().into_iter().map(|p| (p, p)).collect();
        let cal = estimate_calibration(&pairs).unwrap();
        assert!(cal.rms_residual < 1e-12);
        let (ang, dist) = cal.pose.error_to(&Pose::identity());
        assert!(ang < 1e-12 && dist < 1e-12);
    }

    #[test]
    fn pure_translation() {
        let t = Vec3::new(1.0, 2.0, 3.0);
        let pairs: Vec<_> = tetra().into_iter().map(|p| (p, p + t)).collect();
        let cal = estimate_calibration(&pairs).unwrap();
        assert!((cal.pose.translation - t).norm() < 1e-12);
        assert!(cal.pose.rotation.angle() < 1e-12);
    }

    #[test]
    fn degenerate_sets() {
        let line: Vec<_> = (0..5)
            .map(|i| {
                let p = Vec3::new(i as f64, 2.0 * i as f64, 0.0);
                (p, p)
            })
            .collect();
        assert!(estimate_calibration(&line).is_err());
        assert!(estimate_calibration(&line[..2]).is_err());
    }

    #[test]
    fn planar_set_is_not_reflected() {
        let pts = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
        ];
        let rot = UnitQuaternion::from_euler_angles(0.4, -0.2, 1.3);
        let pairs: Vec<_> = pts.iter().map(|p| (*p, rot * p)).collect();
        let cal = estimate_calibration(&pairs).unwrap();
        assert!(cal.pose.rotation.angle_to(&rot) < 1e-9);
    }
}
