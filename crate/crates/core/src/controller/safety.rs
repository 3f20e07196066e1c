//! Per-tick command limiting: joint speed, TCP speed (reduced near the hand)
//! and the workspace box.

use serde::{Deserialize, Serialize};

use crate::arm::{forward_kinematics, DhTable, JointLimits, JointVector};
use crate::geometry::{Aabb, Pose, Vec3};

/// Relative slack when testing a command against a limit, so a command that
/// was scaled onto a limit passes unchanged when checked again.
const SLACK: f64 = 1e-9;
const BISECTION_STEPS: usize = 48;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SafetyConfig {
    /// m/s
    pub max_tcp_speed: f64,
    /// m/s, applies while the TCP is within `near_hand_distance` of the hand.
    pub near_hand_speed: f64,
    pub near_hand_distance: f64,
    pub workspace: Aabb,
}

impl Default for SafetyConfig {
    fn default() -> Self {
        Self {
            max_tcp_speed: 0.5,
            near_hand_speed: 0.25,
            near_hand_distance: 0.2,
            workspace: Aabb::new(Vec3::new(-0.5, -0.05, -0.1), Vec3::new(0.5, 0.6, 0.6)),
        }
    }
}

impl SafetyConfig {
    pub fn validate(&self) -> Result<(), &'static str> {
        if !(self.max_tcp_speed > 0.0 && self.near_hand_speed > 0.0 && self.near_hand_distance >= 0.0) {
            return Err("safety speeds must be positive");
        }
        if self.workspace.is_empty() || (0..3).any(|i| !(self.workspace.max[i] > self.workspace.min[i])) {
            return Err("workspace box is empty");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, Clone, Copy, PartialEq)]
pub enum SafetyStop {
    #[error("tool is outside the workspace and the command does not bring it back")]
    OutsideWorkspace,
    #[error("non-finite command")]
    NonFinite,
}

/// Everything `safety_check` needs besides the command itself.
#[derive(Clone, Copy, Debug)]
pub struct SafetyContext<'a> {
    pub cfg: &'a SafetyConfig,
    pub limits: &'a JointLimits,
    pub dh: &'a DhTable,
    /// Flange-to-TCP transform.
    pub tool: &'a Pose,
    pub dt: f64,
}

impl SafetyContext<'_> {
    pub fn tcp(&self, q: &JointVector) -> Vec3 {
        forward_kinematics(self.dh, q).compose(self.tool).translation
    }

    fn speed_cap(&self, a: &Vec3, b: &Vec3, hand: Option<&Vec3>) -> f64 {
        let near = hand.is_some_and(|h| {
            (a - h).norm() < self.cfg.near_hand_distance || (b - h).norm() < self.cfg.near_hand_distance
        });
        if near {
            self.cfg.near_hand_speed.min(self.cfg.max_tcp_speed)
        } else {
            self.cfg.max_tcp_speed
        }
    }

    fn admissible(&self, prev: &JointVector, p0: &Vec3, box0: f64, q: &JointVector, hand: Option<&Vec3>) -> bool {
        for i in 0..6 {
            if (q[i] - prev[i]).abs() > self.limits.max_velocity[i] * self.dt * (1.0 + SLACK) + 1e-12 {
                return false;
            }
        }
        let p = self.tcp(q);
        let cap = self.speed_cap(p0, &p, hand);
        if (p - p0).norm() > cap * self.dt * (1.0 + SLACK) + 1e-15 {
            return false;
        }
        let d = self.cfg.workspace.distance_squared(&p);
        d == 0.0 || d < box0
    }
}

/// Largest step from `prev` toward `cmd` (same joint-space direction) that
/// respects every limit. Fails only when the tool is already outside the
/// workspace and `cmd` does not reduce the violation.
pub fn safety_check(
    prev: &JointVector,
    cmd: &JointVector,
    hand: Option<&Vec3>,
    ctx: &SafetyContext,
) -> Result<JointVector, SafetyStop> {
    if !cmd.is_finite() || !prev.is_finite() {
        return Err(SafetyStop::NonFinite);
    }
    let p0 = ctx.tcp(prev);
    let box0 = ctx.cfg.workspace.distance_squared(&p0);
    if ctx.admissible(prev, &p0, box0, cmd, hand) {
        return Ok(*cmd);
    }
    if box0 > 0.0 && ctx.cfg.workspace.distance_squared(&ctx.tcp(cmd)) >= box0 {
        return Err(SafetyStop::OutsideWorkspace);
    }
    let mut k = 1.0_f64;
    for i in 0..6 {
        let d = (cmd[i] - prev[i]).abs();
        if d > 0.0 {
            k = k.min(ctx.limits.max_velocity[i] * ctx.dt / d);
        }
    }
    let p1 = ctx.tcp(cmd);
    let dist = (p1 - p0).norm();
    if dist > 0.0 {
        k = k.min(ctx.speed_cap(&p0, &p1, hand) * ctx.dt / dist);
    }
    let scaled = prev.lerp(cmd, k);
    if ctx.admissible(prev, &p0, box0, &scaled, hand) {
        return Ok(scaled);
    }
    // nonlinear TCP path or the box: bisect for the largest admissible step
    let (mut lo, mut hi) = (0.0, k);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if ctx.admissible(prev, &p0, box0, &prev.lerp(cmd, mid), hand) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if lo > 0.0 { prev.lerp(cmd, lo) } else { *prev })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx<'a>(cfg: &'a SafetyConfig, limits: &'a JointLimits, dh: &'a DhTable, tool: &'a Pose) -> SafetyContext<'a> {
        SafetyContext {
            cfg,
            limits,
            dh,
            tool,
            dt: 0.008,
        }
    }

    #[test]
    fn slow_command_is_unchanged() {
        let (cfg, limits, dh, tool) = (
            SafetyConfig::default(),
            JointLimits::default(),
            DhTable::ur3(),
            Pose::identity(),
        );
        let c = ctx(&cfg, &limits, &dh, &tool);
        let prev = JointVector([1.57, -1.2, 1.5, -1.9, -1.57, 0.0]);
        let mut cmd = prev;
        cmd[0] += 0.001;
        assert_eq!(safety_check(&prev, &cmd, None, &c).unwrap(), cmd);
    }

    #[test]
    fn scaling_is_idempotent() {
        let cfg = SafetyConfig {
            workspace: Aabb::new(Vec3::repeat(-2.0), Vec3::repeat(2.0)),
            ..SafetyConfig::default()
        };
        let (limits, dh, tool) = (JointLimits::default(), DhTable::ur3(), Pose::identity());
        let c = ctx(&cfg, &limits, &dh, &tool);
        let prev = JointVector([1.57, -1.2, 1.5, -1.9, -1.57, 0.0]);
        let mut cmd = prev;
        cmd[1] += 0.05;
        cmd[2] -= 0.03;
        let once = safety_check(&prev, &cmd, None, &c).unwrap();
        assert_ne!(once, cmd);
        assert_eq!(safety_check(&prev, &once, None, &c).unwrap(), once);
        let speed = (c.tcp(&once) - c.tcp(&prev)).norm() / c.dt;
        assert!(speed <= 0.5 * (1.0 + 1e-9));
    }
}
