//! Three-point shape display: a planar five-bar positions the center contact
//! point and one symmetric actuator raises or lowers the two flank points.
//!
//! Display frame: x is lateral (the linkage plane's horizontal axis), z points
//! out of the display toward the user, y is normal to the linkage plane. The
//! actuated base joints sit at `(∓w_b/2, 0)` in the x–z plane.

use std::f64::consts::FRAC_PI_3;
use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::geometry::{sagitta, Curvature, SurfacePatch, Vec3};

/// Point in the linkage plane: `(x, z)` of the display frame.
pub type PlanePoint = Vector2<f64>;

/// Elbow determinant below which the distal links count as folded.
const DEGENERACY_EPS: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LinkageError {
    #[error("degenerate linkage configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("target ({x:.4}, {z:.4}) lies outside the linkage workspace")]
    OutOfWorkspace { x: f64, z: f64 },
    #[error("invalid linkage geometry: {0}")]
    InvalidGeometry(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkageGeometry {
    /// Proximal (actuated) link length, m.
    pub l_a: f64,
    /// Distal link length, m.
    pub l_b: f64,
    /// Distance between the two base joints, m.
    pub w_b: f64,
    /// Lateral offset of each flank contact from the center, m.
    pub w_f: f64,
    /// Flank actuator travel, ± m.
    pub s_flank_max: f64,
}

impl Default for LinkageGeometry {
    fn default() -> Self {
        Self {
            l_a: 0.1,
            l_b: 0.1,
            w_b: 0.08,
            w_f: 0.03,
            s_flank_max: 0.02,
        }
    }
}

impl LinkageGeometry {
    pub fn validate(&self) -> Result<(), LinkageError> {
        let all = [self.l_a, self.l_b, self.w_b, self.w_f, self.s_flank_max];
        if !all.iter().all(|v| v.is_finite() && *v > 0.0) {
            return Err(LinkageError::InvalidGeometry("all lengths must be positive"));
        }
        if !(self.l_a + self.l_b > self.w_b / 2.0) {
            return Err(LinkageError::InvalidGeometry("empty workspace"));
        }
        Ok(())
    }

    pub fn base_left(&self) -> PlanePoint {
        PlanePoint::new(-self.w_b / 2.0, 0.0)
    }

    pub fn base_right(&self) -> PlanePoint {
        PlanePoint::new(self.w_b / 2.0, 0.0)
    }

    /// Symmetric rest configuration with both proximal links 60° off the
    /// base line, flanks level.
    pub fn home_state(&self) -> LinkageState {
        LinkageState {
            theta_left: PI - FRAC_PI_3,
            theta_right: FRAC_PI_3,
            s_flank: 0.0,
        }
    }

    /// Center contact point of [`Self::home_state`] in the display frame.
    pub fn home_center(&self) -> Vec3 {
        linkage_fk(self, &self.home_state())
            .expect("home configuration of a valid geometry")
            .p_center
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct LinkageState {
    pub theta_left: f64,
    pub theta_right: f64,
    /// Flank displacement toward the display base (positive lowers both
    /// flanks, producing a convex profile), m.
    pub s_flank: f64,
}

impl From<[f64; 3]> for LinkageState {
    fn from(a: [f64; 3]) -> Self {
        Self {
            theta_left: a[0],
            theta_right: a[1],
            s_flank: a[2],
        }
    }
}

impl From<LinkageState> for [f64; 3] {
    fn from(s: LinkageState) -> Self {
        [s.theta_left, s.theta_right, s.s_flank]
    }
}

impl LinkageState {
    pub fn to_array(&self) -> [f64; 3] {
        (*self).into()
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &LinkageState) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// The three contact points in the display frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactTriple {
    pub p_left: Vec3,
    pub p_center: Vec3,
    pub p_right: Vec3,
}

impl ContactTriple {
    /// Center at `center` with flanks `w_f` to either side, lowered by `s_flank`.
    pub fn around(center: Vec3, w_f: f64, s_flank: f64) -> Self {
        let drop = Vec3::new(0.0, 0.0, s_flank);
        Self {
            p_left: center - Vec3::new(w_f, 0.0, 0.0) - drop,
            p_center: center,
            p_right: center + Vec3::new(w_f, 0.0, 0.0) - drop,
        }
    }

    /// Height of the quadratic through the three points at lateral offset
    /// `u` from the center, relative to the center.
    pub fn membrane_height(&self, u: f64) -> f64 {
        let (ul, wl) = (self.p_left.x - self.p_center.x, self.p_left.z - self.p_center.z);
        let (ur, wr) = (self.p_right.x - self.p_center.x, self.p_right.z - self.p_center.z);
        // Lagrange form through (ul, wl), (0, 0), (ur, wr)
        wl * u * (u - ur) / (ul * (ul - ur)) + wr * u * (u - ul) / (ur * (ur - ul))
    }
}

fn plane_to_display(p: &PlanePoint) -> Vec3 {
    Vec3::new(p.x, 0.0, p.y)
}

fn cross2(a: &PlanePoint, b: &PlanePoint) -> f64 {
    a.x * b.y - a.y * b.x
}

fn elbows(geom: &LinkageGeometry, state: &LinkageState) -> (PlanePoint, PlanePoint) {
    let el = geom.base_left() + PlanePoint::new(state.theta_left.cos(), state.theta_left.sin()) * geom.l_a;
    let er = geom.base_right() + PlanePoint::new(state.theta_right.cos(), state.theta_right.sin()) * geom.l_a;
    (el, er)
}

/// Intersections of circles `(c0, r0)` and `(c1, r1)`; the first lies to the
/// left of the direction `c0 → c1`.
fn circle_intersections(c0: &PlanePoint, r0: f64, c1: &PlanePoint, r1: f64) -> Option<(PlanePoint, PlanePoint)> {
    let d_vec = c1 - c0;
    let d = d_vec.norm();
    if !(d > 0.0) || d > r0 + r1 || d < (r0 - r1).abs() {
        return None;
    }
    let a = (r0 * r0 - r1 * r1 + d * d) / (2.0 * d);
    let h = (r0 * r0 - a * a).max(0.0).sqrt();
    let ex = d_vec / d;
    let ey = PlanePoint::new(-ex.y, ex.x);
    let mid = c0 + ex * a;
    Some((mid + ey * h, mid - ey * h))
}

/// Center point of the linkage in the plane; the distal circles' intersection
/// farther from the base line is taken.
pub fn linkage_center(geom: &LinkageGeometry, state: &LinkageState) -> Result<PlanePoint, LinkageError> {
    let (el, er) = elbows(geom, state);
    let (p, _) = circle_intersections(&el, geom.l_b, &er, geom.l_b)
        .ok_or(LinkageError::DegenerateConfiguration("distal links cannot meet"))?;
    if cross2(&(p - el), &(p - er)).abs() <= DEGENERACY_EPS {
        return Err(LinkageError::DegenerateConfiguration("distal links are folded"));
    }
    Ok(p)
}

pub fn linkage_fk(geom: &LinkageGeometry, state: &LinkageState) -> Result<ContactTriple, LinkageError> {
    if !state.is_finite() {
        return Err(LinkageError::DegenerateConfiguration("non-finite state"));
    }
    let p = linkage_center(geom, state)?;
    Ok(ContactTriple::around(plane_to_display(&p), geom.w_f, state.s_flank))
}

/// Elbow of one leg: intersection of the proximal circle about `base` and the
/// distal circle about `target`, on the requested side of `base → target`.
fn leg_angle(geom: &LinkageGeometry, base: &PlanePoint, target: &PlanePoint, left_side: bool) -> Option<f64> {
    let (a, b) = circle_intersections(base, geom.l_a, target, geom.l_b)?;
    let e = if left_side { a } else { b };
    let v = e - base;
    Some(v.y.atan2(v.x))
}

/// Base angles placing the center point at `target`. Elbows are placed
/// outward (away from the symmetry axis) whenever that assembly reproduces
/// the target; the flank displacement is left at zero.
pub fn linkage_ik(geom: &LinkageGeometry, target: &PlanePoint) -> Result<LinkageState, LinkageError> {
    let out_of_ws = LinkageError::OutOfWorkspace {
        x: target.x,
        z: target.y,
    };
    if !target.iter().all(|v| v.is_finite()) {
        return Err(out_of_ws);
    }
    let (bl, br) = (geom.base_left(), geom.base_right());
    // left leg elbow-out is left of base→target, right leg elbow-out is right of it
    for (left_out, right_out) in [(true, true), (true, false), (false, true), (false, false)] {
        let (Some(tl), Some(tr)) = (
            leg_angle(geom, &bl, target, left_out),
            leg_angle(geom, &br, target, !right_out),
        ) else {
            return Err(out_of_ws);
        };
        let state = LinkageState {
            theta_left: tl,
            theta_right: tr,
            s_flank: 0.0,
        };
        if let Ok(p) = linkage_center(geom, &state) {
            if (p - target).norm() <= 1e-9 {
                return Ok(state);
            }
        }
    }
    Err(out_of_ws)
}

/// Result of matching the display to a surface patch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShapeFit {
    pub state: LinkageState,
    pub triple: ContactTriple,
    /// Set when the required flank displacement exceeded the actuator travel
    /// (or is geometrically impossible) and was clamped.
    pub out_of_range: bool,
}

/// Flank displacement matching the patch curvature across `±w_f`: positive
/// for convex, negative for concave.
pub fn required_flank(patch: &SurfacePatch, w_f: f64) -> Option<f64> {
    match patch.curvature {
        Curvature::Flat => Some(0.0),
        Curvature::Convex { radius } if radius >= w_f => Some(sagitta(radius, w_f)),
        Curvature::Concave { radius } if radius >= w_f => Some(-sagitta(radius, w_f)),
        _ => None,
    }
}

/// Linkage setting that centers the display at its home point and bends the
/// flanks onto the patch's osculating circle.
pub fn fit_shape(patch: &SurfacePatch, geom: &LinkageGeometry) -> ShapeFit {
    let home = geom.home_state();
    let lim = geom.s_flank_max;
    let (s_flank, out_of_range) = match required_flank(patch, geom.w_f) {
        Some(s) if s.abs() <= lim => (s, false),
        Some(s) => (s.clamp(-lim, lim), true),
        None => (patch.signed_curvature().signum() * lim, true),
    };
    let state = LinkageState { s_flank, ..home };
    ShapeFit {
        state,
        triple: ContactTriple::around(geom.home_center(), geom.w_f, s_flank),
        out_of_range,
    }
}

const MEMBRANE_SAMPLES: usize = 2001;

/// Largest gap between the quadratic membrane through `triple` and the
/// patch's osculating circle over the flank span. Both curves are anchored
/// at the center point; the display x axis is taken along the patch tangent.
pub fn membrane_error(triple: &ContactTriple, patch: &SurfacePatch) -> f64 {
    let ul = triple.p_left.x - triple.p_center.x;
    let ur = triple.p_right.x - triple.p_center.x;
    (0..MEMBRANE_SAMPLES)
        .map(|k| {
            let u = ul + (ur - ul) * k as f64 / (MEMBRANE_SAMPLES - 1) as f64;
            (triple.membrane_height(u) - patch.profile_height(u)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch(curvature: Curvature) -> SurfacePatch {
        SurfacePatch {
            point: Vec3::zeros(),
            normal: Vec3::z(),
            tangent: Vec3::x(),
            curvature,
        }
    }

    #[test]
    fn home_center_is_on_axis() {
        let g = LinkageGeometry::default();
        let c = g.home_center();
        assert!(c.x.abs() < 1e-15);
        let expected = 0.1 * (PI / 3.0).sin() + (0.01f64 - 0.09f64.powi(2)).sqrt();
        assert!((c.z - expected).abs() < 1e-12);
    }

    #[test]
    fn folded_links_are_degenerate() {
        let g = LinkageGeometry::default();
        let s = LinkageState {
            theta_left: PI,
            theta_right: 0.0,
            s_flank: 0.0,
        };
        assert!(matches!(
            linkage_fk(&g, &s),
            Err(LinkageError::DegenerateConfiguration(_))
        ));
    }

    #[test]
    fn ik_inverts_home() {
        let g = LinkageGeometry::default();
        let c = g.home_center();
        let s = linkage_ik(&g, &PlanePoint::new(c.x, c.z)).unwrap();
        assert!((s.theta_left - (PI - s.theta_right)).abs() < 1e-9);
        assert!((s.theta_right - FRAC_PI_3).abs() < 1e-9);
        let far = PlanePoint::new(g.base_right().x + g.l_a + g.l_b + g.w_b, 0.0);
        assert!(matches!(linkage_ik(&g, &far), Err(LinkageError::OutOfWorkspace { .. })));
    }

    #[test]
    fn flat_fit_has_zero_error() {
        let g = LinkageGeometry::default();
        let f = fit_shape(&patch(Curvature::Flat), &g);
        assert_eq!(f.state.s_flank, 0.0);
        assert!(!f.out_of_range);
        assert_eq!(membrane_error(&f.triple, &patch(Curvature::Flat)), 0.0);
    }

    #[test]
    fn tight_curvature_is_flagged() {
        let g = LinkageGeometry::default();
        let f = fit_shape(&patch(Curvature::Convex { radius: 0.01 }), &g);
        assert!(f.out_of_range);
        assert_eq!(f.state.s_flank, g.s_flank_max);
        let f = fit_shape(&patch(Curvature::Concave { radius: 0.01 }), &g);
        assert_eq!(f.state.s_flank, -g.s_flank_max);
    }

    #[test]
    fn concave_raises_flanks() {
        let g = LinkageGeometry::default();
        let p = patch(Curvature::Concave { radius: 0.2 });
        let f = fit_shape(&p, &g);
        assert!(f.state.s_flank < 0.0);
        assert!(f.triple.p_left.z > f.triple.p_center.z);
        assert!(membrane_error(&f.triple, &p) < 1e-3);
    }
}
