//! Simulated arm and display actuators: each coordinate follows its command
//! through a first-order lag.

use crate::arm::JointVector;
use crate::shape_display::LinkageState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantState {
    pub joints: JointVector,
    /// rad/s, averaged over the last step.
    pub velocities: JointVector,
    pub linkage: LinkageState,
    pub clock: f64,
}

impl PlantState {
    pub fn at_rest(joints: JointVector, linkage: LinkageState) -> Self {
        Self {
            joints,
            velocities: JointVector::zeros(),
            linkage,
            clock: 0.0,
        }
    }
}

/// Fraction of the remaining error removed in one step of length `dt`.
pub fn lag_gain(dt: f64, tau: f64) -> f64 {
    if tau <= 0.0 {
        1.0
    } else {
        -(-dt / tau).exp_m1()
    }
}

/// Advances the plant by `dt` toward the commanded joints and linkage.
pub fn plant_step(
    state: &PlantState,
    q_cmd: &JointVector,
    linkage_cmd: &LinkageState,
    dt: f64,
    tau: f64,
) -> PlantState {
    assert!(dt > 0.0 && tau >= 0.0, "plant_step needs dt > 0 and tau >= 0");
    let k = lag_gain(dt, tau);
    let step = |x: f64, target: f64| if k == 1.0 { target } else { x + (target - x) * k };
    let joints = JointVector(std::array::from_fn(|i| step(state.joints[i], q_cmd[i])));
    let velocities = JointVector(std::array::from_fn(|i| (joints[i] - state.joints[i]) / dt));
    let cur = state.linkage.to_array();
    let cmd = linkage_cmd.to_array();
    let linkage = LinkageState::from(std::array::from_fn::<f64, 3, _>(|i| step(cur[i], cmd[i])));
    PlantState {
        joints,
        velocities,
        linkage,
        clock: state.clock + dt,
    }
}
