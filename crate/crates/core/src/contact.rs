//! Approach detection, contact-point prediction and hysteretic contact events.

use serde::{Deserialize, Serialize};

use crate::geometry::{GeometryError, TriMesh, Vec3};
use crate::tracking::{HandFrame, FINGERTIPS};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ContactError {
    #[error("hysteresis needs 0 < d_on < d_off (got d_on={d_on}, d_off={d_off})")]
    InvalidHysteresis { d_on: f64, d_off: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactConfig {
    /// Radius of the approach field around the mesh, m.
    pub d_approach: f64,
    /// Speeds below this (m/s) are treated as stationary.
    pub v_min: f64,
    pub d_on: f64,
    pub d_off: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        Self {
            d_approach: 0.15,
            v_min: 0.02,
            d_on: 0.005,
            d_off: 0.010,
        }
    }
}

impl ContactConfig {
    pub fn validate(&self) -> Result<(), ContactError> {
        check_hysteresis(self.d_on, self.d_off)?;
        if !(self.d_approach > self.d_off) || !(self.v_min >= 0.0) {
            return Err(ContactError::Geometry(GeometryError::InvalidArgument(
                "d_approach must exceed d_off and v_min must be non-negative",
            )));
        }
        Ok(())
    }
}

fn check_hysteresis(d_on: f64, d_off: f64) -> Result<(), ContactError> {
    if d_on > 0.0 && d_off > d_on && d_off.is_finite() {
        Ok(())
    } else {
        Err(ContactError::InvalidHysteresis { d_on, d_off })
    }
}

/// Where and when a fingertip is expected to meet the surface.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContactTarget {
    pub point: Vec3,
    /// Outward unit normal at `point`.
    pub normal: Vec3,
    /// Time to contact in seconds; infinite when the fingertip is not
    /// heading into the surface.
    pub eta: f64,
    pub fingertip_index: usize,
    pub triangle: usize,
}

impl ContactTarget {
    pub fn is_predicted(&self) -> bool {
        self.eta.is_finite()
    }
}

/// Fingertip closest to the mesh, if it lies inside the approach field.
/// Ties go to the lower fingertip index.
pub fn detect_approach(
    frame: &HandFrame,
    mesh: &TriMesh,
    d_approach: f64,
) -> Result<Option<(usize, f64)>, GeometryError> {
    if !frame.valid {
        return Ok(None);
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, tip) in frame.fingertips.iter().enumerate() {
        let d = mesh.closest_point(tip)?.distance;
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    Ok(best.filter(|&(_, d)| d < d_approach))
}

/// Casts the fingertip's motion onto the mesh. Slow or missing rays fall back
/// to the closest surface point with an infinite `eta`.
pub fn predict_contact(
    mesh: &TriMesh,
    fingertip_index: usize,
    position: &Vec3,
    velocity: &Vec3,
    v_min: f64,
) -> Result<ContactTarget, GeometryError> {
    if mesh.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    let speed = velocity.norm();
    if speed > v_min && speed.is_finite() {
        let dir = velocity / speed;
        if let Some(hit) = mesh.ray_cast(position, &dir)? {
            return Ok(ContactTarget {
                point: hit.point,
                normal: mesh.interpolated_normal(hit.triangle, &hit.point),
                eta: hit.t / speed,
                fingertip_index,
                triangle: hit.triangle,
            });
        }
    }
    let c = mesh.closest_point(position)?;
    Ok(ContactTarget {
        point: c.point,
        normal: mesh.interpolated_normal(c.triangle, &c.point),
        eta: f64::INFINITY,
        fingertip_index,
        triangle: c.triangle,
    })
}

/// Finite-difference velocity of one fingertip between two frames.
pub fn fingertip_velocity(prev: &HandFrame, cur: &HandFrame, index: usize) -> Vec3 {
    let dt = cur.timestamp - prev.timestamp;
    if !(dt > 0.0) || !prev.valid || !cur.valid || index >= FINGERTIPS {
        return Vec3::zeros();
    }
    (cur.fingertips[index] - prev.fingertips[index]) / dt
}

/// One touch: onset time and, once the finger has lifted, offset time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub onset: f64,
    pub offset: Option<f64>,
}

impl ContactEvent {
    pub fn duration(&self) -> Option<f64> {
        self.offset.map(|o| o - self.onset)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContactEdge {
    Onset,
    Offset,
}

/// Streaming two-threshold contact detector.
#[derive(Clone, Debug, PartialEq)]
pub struct ContactDetector {
    d_on: f64,
    d_off: f64,
    in_contact: bool,
    events: Vec<ContactEvent>,
}

impl ContactDetector {
    pub fn new(d_on: f64, d_off: f64) -> Result<Self, ContactError> {
        check_hysteresis(d_on, d_off)?;
        Ok(Self {
            d_on,
            d_off,
            in_contact: false,
            events: Vec::new(),
        })
    }

    pub fn in_contact(&self) -> bool {
        self.in_contact
    }

    pub fn events(&self) -> &[ContactEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<ContactEvent> {
        self.events
    }

    /// Feeds one distance sample; NaN samples are ignored.
    pub fn update(&mut self, t: f64, distance: f64) -> Option<ContactEdge> {
        if !self.in_contact && distance < self.d_on {
            self.in_contact = true;
            self.events.push(ContactEvent { onset: t, offset: None });
            Some(ContactEdge::Onset)
        } else if self.in_contact && distance > self.d_off {
            self.in_contact = false;
            if let Some(last) = self.events.last_mut() {
                last.offset = Some(t);
            }
            Some(ContactEdge::Offset)
        } else {
            None
        }
    }
}

/// Onset/offset pairs from a timestamped distance stream.
pub fn contact_events(samples: &[(f64, f64)], d_on: f64, d_off: f64) -> Result<Vec<ContactEvent>, ContactError> {
    let mut det = ContactDetector::new(d_on, d_off)?;
    for &(t, d) in samples {
        det.update(t, d);
    }
    Ok(det.into_events())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApproachMode {
    Far,
    Approaching,
    InContact,
}

/// Coarse proximity state. Moves at most one step per update so it only ever
/// visits adjacent modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproachState {
    pub mode: ApproachMode,
    pub distance: f64,
    /// Extra distance beyond `d_approach` needed to fall back to `Far`.
    pub band: f64,
}

impl ApproachState {
    pub fn new(band: f64) -> Self {
        Self {
            mode: ApproachMode::Far,
            distance: f64::INFINITY,
            band: band.max(0.0),
        }
    }

    pub fn update(&mut self, distance: f64, cfg: &ContactConfig) -> ApproachMode {
        self.distance = distance.max(0.0);
        let d = self.distance;
        self.mode = match self.mode {
            ApproachMode::Far if d < cfg.d_approach => ApproachMode::Approaching,
            ApproachMode::Approaching if d < cfg.d_on => ApproachMode::InContact,
            ApproachMode::Approaching if d > cfg.d_approach + self.band => ApproachMode::Far,
            ApproachMode::InContact if d > cfg.d_off => ApproachMode::Approaching,
            m => m,
        };
        self.mode
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::shapes;

    fn floor() -> TriMesh {
        shapes::plane(Vec3::zeros(), 1.0)
    }

    #[test]
    fn predicts_plane_hit() {
        let t = predict_contact(&floor(), 1, &Vec3::new(0.0, 0.0, 0.1), &Vec3::new(0.0, 0.0, -0.5), 0.02).unwrap();
        assert!(t.point.norm() < 1e-15);
        assert!((t.normal - Vec3::z()).norm() < 1e-12);
        assert!((t.eta - 0.2).abs() < 1e-12);
        assert_eq!(t.fingertip_index, 1);
    }

    #[test]
    fn parallel_motion_falls_back() {
        let t = predict_contact(&floor(), 0, &Vec3::new(0.0, 0.0, 0.1), &Vec3::x(), 0.02).unwrap();
        assert!(t.point.norm() < 1e-15);
        assert!(t.eta.is_infinite());
        let slow = predict_contact(
            &floor(),
            0,
            &Vec3::new(0.2, 0.0, 0.1),
            &Vec3::new(0.0, 0.0, -0.01),
            0.02,
        )
        .unwrap();
        assert!(!slow.is_predicted());
        assert!((slow.point - Vec3::new(0.2, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn empty_mesh_is_error() {
        let empty = TriMesh::new(vec![], vec![]).unwrap();
        assert_eq!(
            predict_contact(&empty, 0, &Vec3::zeros(), &Vec3::zeros(), 0.02).unwrap_err(),
            GeometryError::EmptyMesh
        );
    }

    #[test]
    fn approach_picks_nearest_tip() {
        let mut f = HandFrame::single_point(0.0, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(detect_approach(&f, &floor(), 0.15).unwrap(), None);
        f.fingertips = [Vec3::new(0.0, 0.0, 0.3); FINGERTIPS];
        f.fingertips[1] = Vec3::new(0.0, 0.0, 0.10);
        let (i, d) = detect_approach(&f, &floor(), 0.15).unwrap().unwrap();
        assert_eq!(i, 1);
        assert!((d - 0.10).abs() < 1e-15);
        assert_eq!(detect_approach(&HandFrame::invalid(0.0), &floor(), 0.15).unwrap(), None);
    }

    #[test]
    fn events_pair_up() {
        let stream = [
            (0.0, 0.05),
            (0.1, 0.004),
            (0.2, 0.008),
            (0.3, 0.002),
            (0.4, 0.02),
            (0.5, 0.001),
        ];
        let ev = contact_events(&stream, 0.005, 0.010).unwrap();
        assert_eq!(
            ev,
            vec![
                ContactEvent {
                    onset: 0.1,
                    offset: Some(0.4)
                },
                ContactEvent {
                    onset: 0.5,
                    offset: None
                },
            ]
        );
        assert!(contact_events(&stream, 0.01, 0.01).is_err());
        assert!(contact_events(&[(0.0, 1.0)], 0.005, 0.01).unwrap().is_empty());
    }

    #[test]
    fn approach_mode_steps_one_at_a_time() {
        let cfg = ContactConfig::default();
        let mut s = ApproachState::new(0.01);
        assert_eq!(s.update(0.001, &cfg), ApproachMode::Approaching);
        assert_eq!(s.update(0.001, &cfg), ApproachMode::InContact);
        assert_eq!(s.update(1.0, &cfg), ApproachMode::Approaching);
        assert_eq!(s.update(0.155, &cfg), ApproachMode::Approaching);
        assert_eq!(s.update(0.2, &cfg), ApproachMode::Far);
    }
}
