//! Latest-wins digital twin of the plant.

use super::{Payload, TwinMessage};
use crate::arm::{forward_kinematics, DhTable, JointVector};
use crate::geometry::Pose;
use crate::shape_display::LinkageState;

/// Staleness above which the twin is flagged as out of sync, s.
pub const DESYNC_THRESHOLD: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwinState {
    pub last_seq: Option<u64>,
    pub joints: JointVector,
    pub linkage: LinkageState,
    /// Send time of the newest applied update.
    pub last_update_t: Option<f64>,
    /// Age of the newest applied update, s.
    pub staleness: f64,
    pub desync: bool,
}

impl TwinState {
    pub fn new(joints: JointVector, linkage: LinkageState) -> Self {
        Self {
            last_seq: None,
            joints,
            linkage,
            last_update_t: None,
            staleness: 0.0,
            desync: false,
        }
    }

    /// Applies a received message at time `now`. Only state updates newer
    /// than the last applied one change the twin; returns whether it did.
    pub fn apply(&mut self, msg: &TwinMessage, now: f64) -> bool {
        let Payload::StateUpdate { q, linkage } = &msg.payload else {
            return false;
        };
        if self.last_seq.is_some_and(|s| msg.seq <= s) {
            return false;
        }
        self.last_seq = Some(msg.seq);
        self.joints = *q;
        self.linkage = *linkage;
        self.last_update_t = Some(msg.t);
        self.age(now);
        true
    }

    /// Recomputes staleness and the desync flag for the current time.
    pub fn age(&mut self, now: f64) {
        if let Some(t) = self.last_update_t {
            self.staleness = (now - t).max(0.0);
            self.desync = self.staleness > DESYNC_THRESHOLD;
        }
    }
}

/// Distance between the flange positions implied by the twin and the plant.
pub fn desync_metric(twin: &TwinState, plant: &JointVector, dh: &DhTable) -> f64 {
    tcp_desync(dh, &Pose::identity(), &twin.joints, plant)
}

/// Distance between the tool points (flange composed with `tool`) of two
/// joint vectors.
pub fn tcp_desync(dh: &DhTable, tool: &Pose, a: &JointVector, b: &JointVector) -> f64 {
    let pa = forward_kinematics(dh, a).compose(tool).translation;
    let pb = forward_kinematics(dh, b).compose(tool).translation;
    (pa - pb).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn update(seq: u64, t: f64, v: f64) -> TwinMessage {
        TwinMessage::new(
            seq,
            t,
            Payload::StateUpdate {
                q: JointVector([v; 6]),
                linkage: LinkageState::default(),
            },
        )
    }

    #[test]
    fn latest_wins() {
        let mut s = TwinState::new(JointVector::zeros(), LinkageState::default());
        assert!(s.apply(&update(4, 0.0, 0.4), 0.01));
        assert!(s.apply(&update(5, 0.01, 0.5), 0.02));
        let before = s;
        assert!(!s.apply(&update(3, 0.0, 0.3), 0.03));
        assert_eq!(s, before);
        assert_eq!(s.joints, JointVector([0.5; 6]));
    }

    #[test]
    fn staleness_sets_flag() {
        let mut s = TwinState::new(JointVector::zeros(), LinkageState::default());
        s.apply(&update(0, 1.0, 0.0), 1.05);
        assert!((s.staleness - 0.05).abs() < 1e-12);
        assert!(!s.desync);
        s.age(1.3);
        assert!(s.desync);
    }

    #[test]
    fn identical_joints_have_no_desync() {
        let s = TwinState::new(JointVector([0.2; 6]), LinkageState::default());
        assert_eq!(desync_metric(&s, &JointVector([0.2; 6]), &DhTable::ur3()), 0.0);
    }
}
