//! Synchronized joint-space trapezoidal moves.
//!
//! All joints travel the straight line `q(s) = start + s·(goal − start)`,
//! `s ∈ [0, 1]`, so a single scalar trapezoid in `s` drives every joint and
//! the slowest joint sets the pace.

use crate::arm::{inverse_kinematics, DhTable, IkConfig, JointLimits, JointVector, KinematicsError};
use crate::geometry::Pose;

/// Scalar trapezoidal (or triangular) velocity profile from 0 to `distance`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trapezoid {
    pub distance: f64,
    pub accel: f64,
    pub peak_velocity: f64,
    pub t_accel: f64,
    pub t_cruise: f64,
}

impl Trapezoid {
    pub fn new(distance: f64, v_max: f64, a_max: f64) -> Self {
        let distance = distance.abs();
        if distance == 0.0 {
            return Self {
                distance,
                accel: a_max,
                peak_velocity: 0.0,
                t_accel: 0.0,
                t_cruise: 0.0,
            };
        }
        let (peak_velocity, t_accel, t_cruise) = if v_max * v_max / a_max >= distance {
            let v = (distance * a_max).sqrt();
            (v, v / a_max, 0.0)
        } else {
            let ta = v_max / a_max;
            (v_max, ta, (distance - v_max * ta) / v_max)
        };
        Self {
            distance,
            accel: a_max,
            peak_velocity,
            t_accel,
            t_cruise,
        }
    }

    pub fn duration(&self) -> f64 {
        2.0 * self.t_accel + self.t_cruise
    }

    pub fn is_triangular(&self) -> bool {
        self.t_cruise == 0.0
    }

    pub fn position(&self, t: f64) -> f64 {
        let (ta, tc, a, v) = (self.t_accel, self.t_cruise, self.accel, self.peak_velocity);
        if t <= 0.0 {
            0.0
        } else if t < ta {
            0.5 * a * t * t
        } else if t < ta + tc {
            0.5 * a * ta * ta + v * (t - ta)
        } else if t < self.duration() {
            let r = self.duration() - t;
            self.distance - 0.5 * a * r * r
        } else {
            self.distance
        }
    }

    pub fn velocity(&self, t: f64) -> f64 {
        let (ta, tc) = (self.t_accel, self.t_cruise);
        if t <= 0.0 || t >= self.duration() {
            0.0
        } else if t < ta {
            self.accel * t
        } else if t < ta + tc {
            self.peak_velocity
        } else {
            self.accel * (self.duration() - t)
        }
    }
}

/// Path-parameter velocity and acceleration bounds for a straight joint move.
fn path_limits(delta: &[f64; 6], limits: &JointLimits) -> (f64, f64) {
    let mut v = f64::INFINITY;
    let mut a = f64::INFINITY;
    for (i, d) in delta.iter().enumerate() {
        let d = d.abs();
        if d > 0.0 {
            v = v.min(limits.max_velocity[i] / d);
            a = a.min(limits.max_acceleration[i] / d);
        }
    }
    (v, a)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MotionProfile {
    pub start: JointVector,
    pub goal: JointVector,
    /// Trapezoid over the path parameter `s ∈ [0, 1]`.
    pub path: Trapezoid,
}

impl MotionProfile {
    pub fn new(start: JointVector, goal: JointVector, limits: &JointLimits) -> Self {
        let delta: [f64; 6] = std::array::from_fn(|i| goal[i] - start[i]);
        let path = if delta.iter().all(|d| *d == 0.0) {
            Trapezoid::new(0.0, 1.0, 1.0)
        } else {
            let (v, a) = path_limits(&delta, limits);
            Trapezoid::new(1.0, v, a)
        };
        Self { start, goal, path }
    }

    pub fn duration(&self) -> f64 {
        self.path.duration()
    }

    pub fn sample(&self, t: f64) -> JointVector {
        if self.path.distance == 0.0 {
            return self.goal;
        }
        if t >= self.duration() {
            return self.goal;
        }
        self.start.lerp(&self.goal, self.path.position(t))
    }

    pub fn joint_velocity(&self, t: f64) -> JointVector {
        let sd = self.path.velocity(t);
        JointVector(std::array::from_fn(|i| (self.goal[i] - self.start[i]) * sd))
    }
}

/// Profile from `current` to the IK solution for flange pose `goal`.
pub fn plan_to_pose(
    current: &JointVector,
    goal: &Pose,
    limits: &JointLimits,
    dh: &DhTable,
    ik: &IkConfig,
) -> Result<MotionProfile, KinematicsError> {
    let sol = inverse_kinematics(dh, goal, current, limits, ik)?;
    Ok(MotionProfile::new(*current, sol.q, limits))
}

/// Online execution of a straight joint move. The path speed obeys the same
/// bounds as [`MotionProfile`] but is recomputed each tick, so an externally
/// imposed slowdown (safety scaling) keeps the arm on the line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathFollower {
    pub start: JointVector,
    pub goal: JointVector,
    s: f64,
    s_dot: f64,
    s_vmax: f64,
    s_amax: f64,
}

impl PathFollower {
    /// Starts at `start`, keeping the component of `joint_velocity` that
    /// points along the new line.
    pub fn new(start: JointVector, goal: JointVector, limits: &JointLimits, joint_velocity: &JointVector) -> Self {
        let delta: [f64; 6] = std::array::from_fn(|i| goal[i] - start[i]);
        let (s_vmax, s_amax) = path_limits(&delta, limits);
        let norm2: f64 = delta.iter().map(|d| d * d).sum();
        let s_dot = if norm2 > 0.0 {
            let along: f64 = (0..6).map(|i| joint_velocity[i] * delta[i]).sum::<f64>() / norm2;
            along.clamp(0.0, s_vmax)
        } else {
            0.0
        };
        Self {
            start,
            goal,
            s: if norm2 > 0.0 { 0.0 } else { 1.0 },
            s_dot,
            s_vmax,
            s_amax,
        }
    }

    pub fn progress(&self) -> f64 {
        self.s
    }

    pub fn is_done(&self) -> bool {
        self.s >= 1.0
    }

    pub fn at(&self, s: f64) -> JointVector {
        if s >= 1.0 {
            self.goal
        } else {
            self.start.lerp(&self.goal, s)
        }
    }

    /// Path parameter proposed for the next tick.
    pub fn propose(&self, dt: f64) -> f64 {
        if self.is_done() {
            return 1.0;
        }
        let remaining = 1.0 - self.s;
        let braking = (2.0 * self.s_amax * remaining).sqrt();
        let sd = (self.s_dot + self.s_amax * dt).min(self.s_vmax).min(braking);
        let next = self.s + sd * dt;
        if next >= 1.0 || remaining < 1e-12 {
            1.0
        } else {
            next
        }
    }

    /// Records the path parameter actually executed.
    pub fn commit(&mut self, s: f64, dt: f64) {
        let s = s.clamp(self.s, 1.0);
        self.s_dot = (s - self.s) / dt;
        self.s = s;
    }
}
