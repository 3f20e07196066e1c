//! Local surface patches: interpolated normal plus a 1D curvature estimate
//! along a tangent direction.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use super::{any_orthogonal, GeometryError, TriMesh, Vec3};

/// Curvature of the surface along the patch tangent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Curvature {
    Flat,
    /// Circle center lies behind the surface (inside the object).
    Convex {
        radius: f64,
    },
    /// Circle center lies in front of the surface.
    Concave {
        radius: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePatch {
    pub point: Vec3,
    pub normal: Vec3,
    pub tangent: Vec3,
    pub curvature: Curvature,
}

impl SurfacePatch {
    pub fn flat(point: Vec3, normal: Vec3, tangent: Vec3) -> Self {
        Self {
            point,
            normal,
            tangent,
            curvature: Curvature::Flat,
        }
    }

    pub fn is_flat(&self) -> bool {
        matches!(self.curvature, Curvature::Flat)
    }

    /// Radius of the osculating circle, `None` when flat.
    pub fn curvature_radius(&self) -> Option<f64> {
        match self.curvature {
            Curvature::Flat => None,
            Curvature::Convex { radius } | Curvature::Concave { radius } => Some(radius),
        }
    }

    /// Signed curvature along the tangent; positive for convex.
    pub fn signed_curvature(&self) -> f64 {
        match self.curvature {
            Curvature::Flat => 0.0,
            Curvature::Convex { radius } => 1.0 / radius,
            Curvature::Concave { radius } => -1.0 / radius,
        }
    }

    /// Height of the osculating circle above the tangent line at offset `u`
    /// along the tangent (negative means below, toward the object).
    pub fn profile_height(&self, u: f64) -> f64 {
        match self.curvature {
            Curvature::Flat => 0.0,
            Curvature::Convex { radius } => -sagitta(radius, u),
            Curvature::Concave { radius } => sagitta(radius, u),
        }
    }
}

/// Depth of a circular arc of radius `r` at lateral offset `u` from its apex;
/// clamps to `r` when `|u| > r`.
pub fn sagitta(r: f64, u: f64) -> f64 {
    r - (r * r - u * u).max(0.0).sqrt()
}

const SAMPLE_OFFSETS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
const TANGENT_CANDIDATES: usize = 8;

impl TriMesh {
    /// Patch at `point` on `triangle`, sampling along the tangent direction of
    /// greatest curvature among evenly spaced candidates.
    pub fn local_patch(
        &self,
        point: &Vec3,
        triangle: usize,
        sample_radius: f64,
    ) -> Result<SurfacePatch, GeometryError> {
        let normal = self.checked_normal(point, triangle, sample_radius)?;
        let t0 = any_orthogonal(&normal);
        let t1 = normal.cross(&t0);
        let mut best: Option<SurfacePatch> = None;
        for k in 0..TANGENT_CANDIDATES {
            let a = PI * k as f64 / TANGENT_CANDIDATES as f64;
            let tangent = t0 * a.cos() + t1 * a.sin();
            let patch = self.sample_patch(point, normal, tangent, sample_radius)?;
            let better = match &best {
                None => true,
                Some(b) => patch.signed_curvature().abs() > b.signed_curvature().abs(),
            };
            if better {
                best = Some(patch);
            }
        }
        Ok(best.expect("at least one candidate"))
    }

    /// Patch sampled along a caller-chosen tangent (projected into the
    /// tangent plane).
    pub fn local_patch_along(
        &self,
        point: &Vec3,
        triangle: usize,
        sample_radius: f64,
        tangent_hint: &Vec3,
    ) -> Result<SurfacePatch, GeometryError> {
        let normal = self.checked_normal(point, triangle, sample_radius)?;
        let tangent = (tangent_hint - normal * tangent_hint.dot(&normal))
            .try_normalize(1e-9)
            .ok_or(GeometryError::InvalidArgument("tangent hint parallel to normal"))?;
        self.sample_patch(point, normal, tangent, sample_radius)
    }

    fn checked_normal(&self, point: &Vec3, triangle: usize, sample_radius: f64) -> Result<Vec3, GeometryError> {
        if triangle >= self.triangle_count() {
            return Err(GeometryError::InvalidTriangle(triangle));
        }
        if !(sample_radius > 0.0) {
            return Err(GeometryError::InvalidArgument("sample radius must be positive"));
        }
        let [a, b, c] = self.corners(triangle);
        let on = super::closest_point_on_triangle(point, &a, &b, &c);
        let scale = (b - a).norm().max((c - a).norm());
        if (on - point).norm() > 1e-6 * scale.max(1.0) {
            return Err(GeometryError::InvalidTriangle(triangle));
        }
        Ok(self.interpolated_normal(triangle, point))
    }

    fn sample_patch(
        &self,
        point: &Vec3,
        normal: Vec3,
        tangent: Vec3,
        sample_radius: f64,
    ) -> Result<SurfacePatch, GeometryError> {
        let mut samples = [(0.0, 0.0); 5];
        for (slot, s) in samples.iter_mut().zip(SAMPLE_OFFSETS) {
            let probe = point + tangent * (s * sample_radius);
            let hit = self.closest_point(&probe)?;
            let d = hit.point - point;
            *slot = (d.dot(&tangent), d.dot(&normal));
        }
        let curvature = classify(&samples, sample_radius);
        Ok(SurfacePatch {
            point: *point,
            normal,
            tangent,
            curvature,
        })
    }
}

fn classify(samples: &[(f64, f64)], sample_radius: f64) -> Curvature {
    // flat when the samples sit on a straight line to within a nanometer
    let n = samples.len() as f64;
    let mu = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mw = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let suu: f64 = samples.iter().map(|s| (s.0 - mu).powi(2)).sum();
    let suw: f64 = samples.iter().map(|s| (s.0 - mu) * (s.1 - mw)).sum();
    let slope = if suu > 0.0 { suw / suu } else { 0.0 };
    let max_residual = samples
        .iter()
        .map(|s| ((s.1 - mw) - slope * (s.0 - mu)).abs() / (1.0 + slope * slope).sqrt())
        .fold(0.0, f64::max);
    if max_residual <= 1e-9 * (1.0 + sample_radius) {
        return Curvature::Flat;
    }
    match fit_circle(samples) {
        Some((center, radius)) if radius.is_finite() => {
            if center.1 < 0.0 {
                Curvature::Convex { radius }
            } else {
                Curvature::Concave { radius }
            }
        }
        _ => Curvature::Flat,
    }
}

/// Algebraic least-squares circle through 2D points; returns
/// `((cx, cy), radius)` or `None` when the system is singular.
pub fn fit_circle(points: &[(f64, f64)]) -> Option<((f64, f64), f64)> {
    // x² + y² + D x + E y + F = 0
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for &(x, y) in points {
        let row = Vector3::new(x, y, 1.0);
        let rhs = -(x * x + y * y);
        ata += row * row.transpose();
        atb += row * rhs;
    }
    let sol = ata.lu().solve(&atb)?;
    let (d, e, f) = (sol[0], sol[1], sol[2]);
    let cx = -d / 2.0;
    let cy = -e / 2.0;
    let r2 = cx * cx + cy * cy - f;
    (r2 > 0.0).then(|| ((cx, cy), r2.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    #[test]
    fn circle_fit_exact_points() {
        let pts: Vec<_> = (0..5)
            .map(|k| {
                let a = 0.3 * k as f64;
                (1.0 + 2.0 * a.cos(), -3.0 + 2.0 * a.sin())
            })
            .collect();
        let ((cx, cy), r) = fit_circle(&pts).unwrap();
        assert!((cx - 1.0).abs() < 1e-9 && (cy + 3.0).abs() < 1e-9 && (r - 2.0).abs() < 1e-9);
    }

    #[test]
    fn plane_patch_is_flat() {
        let mesh = shapes::grid_plane(Vec3::zeros(), 0.5, 4);
        let p = Vec3::new(0.1, -0.2, 0.0);
        let hit = mesh.closest_point(&p).unwrap();
        let patch = mesh.local_patch(&hit.point, hit.triangle, 0.03).unwrap();
        assert!(patch.is_flat());
        assert!((patch.normal - Vec3::z()).norm() < 1e-12);
        assert!(patch.tangent.dot(&patch.normal).abs() < 1e-9);
    }

    #[test]
    fn wrong_triangle_rejected() {
        let mesh = shapes::grid_plane(Vec3::zeros(), 0.5, 4);
        let err = mesh.local_patch(&Vec3::new(0.4, 0.4, 0.0), 0, 0.03).unwrap_err();
        assert_eq!(err, GeometryError::InvalidTriangle(0));
        assert!(mesh.local_patch(&Vec3::zeros(), 999, 0.03).is_err());
    }

    #[test]
    fn sagitta_values() {
        assert_eq!(sagitta(0.2, 0.0), 0.0);
        assert!((sagitta(0.2, 0.03) - (0.2 - (0.04f64 - 0.0009).sqrt())).abs() < 1e-15);
        assert_eq!(sagitta(0.01, 0.03), 0.01);
    }
}
