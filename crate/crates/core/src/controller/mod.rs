//! Encounter controller: watches the (smoothed, calibrated) hand, predicts
//! where it will touch the virtual surface and drives the arm and display so
//! the physical membrane is already there.
//!
//! Mode graph: `Idle → Approaching → Holding → Retracting → Idle`, plus
//! `Approaching → Retracting` when the hand withdraws and any mode to
//! `Retracting` on an IK failure or a safety stop.

mod profile;
mod safety;

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use crate::arm::{
    forward_kinematics, inverse_kinematics, DhTable, IkConfig, JointLimits, JointVector, KinematicsError,
};
use crate::contact::{
    detect_approach, predict_contact, ContactConfig, ContactDetector, ContactEdge, ContactError, ContactTarget,
};
use crate::geometry::{any_orthogonal, GeometryError, Pose, PoseRecord, TriMesh, Vec3};
use crate::shape_display::{fit_shape, LinkageGeometry, LinkageState, ShapeFit};
use crate::tracking::HandFrame;

pub use profile::{plan_to_pose, MotionProfile, PathFollower, Trapezoid};
pub use safety::{safety_check, SafetyConfig, SafetyContext, SafetyStop};

/// Joint positions sent to the arm for one tick.
pub type JointCommand = JointVector;

/// A surface is "facing" the finger when its normal is within 60° of the
/// reversed pointing direction.
const FACING_COS: f64 = 0.5;
/// Flank points farther than this from the mesh count as unsupported, m.
const SUPPORT_TOL: f64 = 1e-4;
const SUPPORT_STEPS: usize = 40;
/// Rotation rate cap of the holding servo, rad/s.
const HOLD_ROTATION_RATE: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Idle,
    Approaching,
    Holding,
    Retracting,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Idle => "Idle",
            Mode::Approaching => "Approaching",
            Mode::Holding => "Holding",
            Mode::Retracting => "Retracting",
        }
    }

    /// Whether `self → next` is an edge of the mode graph (staying put is
    /// always allowed).
    pub fn can_transition_to(&self, next: Mode) -> bool {
        use Mode::*;
        *self == next
            || next == Retracting
            || matches!(
                (self, next),
                (Idle, Approaching) | (Approaching, Holding) | (Retracting, Idle)
            )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    /// Hz
    pub tick_rate: f64,
    pub contact: ContactConfig,
    pub safety: SafetyConfig,
    /// TCP pose the arm starts from.
    pub ready_pose: PoseRecord,
    /// TCP pose the arm withdraws to.
    pub retract_pose: PoseRecord,
    /// IK seed used to resolve the ready and retract poses.
    pub joint_seed: JointVector,
    /// Target movement (m) that triggers a new approach plan.
    pub replan_threshold: f64,
    /// TCP-to-target distance (m) counted as arrived.
    pub arrival_tolerance: f64,
    /// TCP speed cap of the holding servo, m/s.
    pub hold_speed: f64,
    /// Preferred display x axis, projected onto each contact's tangent plane.
    pub tangent_hint: [f64; 3],
    /// Distance from the tracked fingertip point to the skin surface, m.
    pub fingertip_radius: f64,
    /// Extra search radius (m) when looking for a surface facing the finger.
    pub facing_slack: f64,
    /// Predicted hits meeting the surface at a shallower angle than this
    /// (sine of the angle) fall back to the closest point.
    pub min_approach_sine: f64,
    /// Sampling radius of the curvature estimate, m.
    pub patch_radius: f64,
    /// Time span of the fingertip velocity estimate, s.
    pub velocity_window: f64,
}

const WORKSPACE_CENTER: [f64; 3] = [0.0, 0.25, 0.4];

impl Default for ControllerConfig {
    fn default() -> Self {
        let [cx, cy, cz] = WORKSPACE_CENTER;
        Self {
            tick_rate: 125.0,
            contact: ContactConfig::default(),
            safety: SafetyConfig::default(),
            ready_pose: PoseRecord {
                quat: [1.0, 0.0, 0.0, 0.0],
                pos: [cx, cy, cz - 0.005],
            },
            retract_pose: PoseRecord {
                quat: [1.0, 0.0, 0.0, 0.0],
                pos: [cx, cy, cz - 0.1],
            },
            joint_seed: JointVector([FRAC_PI_2, -1.2, 1.5, -1.9, -FRAC_PI_2, 0.0]),
            replan_threshold: 0.005,
            arrival_tolerance: 0.002,
            hold_speed: 0.25,
            tangent_hint: [1.0, 0.0, 0.0],
            fingertip_radius: 0.005,
            facing_slack: 0.01,
            min_approach_sine: 0.5,
            patch_radius: 0.03,
            velocity_window: 0.3,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let bad = |m: &'static str| Err(ControllerError::Config(m.to_string()));
        if !(self.tick_rate > 0.0 && self.tick_rate.is_finite()) {
            return bad("tick_rate must be positive");
        }
        self.contact
            .validate()
            .map_err(|e| ControllerError::Config(e.to_string()))?;
        self.safety
            .validate()
            .map_err(|e| ControllerError::Config(e.to_string()))?;
        let positive = [
            self.replan_threshold,
            self.arrival_tolerance,
            self.hold_speed,
            self.patch_radius,
            self.velocity_window,
        ];
        if !positive.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return bad("thresholds, speeds and radii must be positive");
        }
        if !(self.fingertip_radius >= 0.0 && self.facing_slack >= 0.0) {
            return bad("fingertip_radius and facing_slack must be non-negative");
        }
        if !(0.0..=1.0).contains(&self.min_approach_sine) {
            return bad("min_approach_sine must lie in [0, 1]");
        }
        if Vec3::from(self.tangent_hint).norm() < 1e-9 {
            return bad("tangent_hint must be non-zero");
        }
        if self.ready_pose.to_pose().is_none() || self.retract_pose.to_pose().is_none() {
            return bad("ready and retract poses need unit quaternions");
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ControllerError {
    #[error("tick length {dt} s is more than 50% off the nominal period")]
    InvalidDt { dt: f64 },
    #[error("controller configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl From<ContactError> for ControllerError {
    fn from(e: ContactError) -> Self {
        match e {
            ContactError::Geometry(g) => ControllerError::Geometry(g),
            other => ControllerError::Config(other.to_string()),
        }
    }
}

/// Recoverable problems: the controller retracts and reports them.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerFault {
    IkFailure(KinematicsError),
    SafetyStop(SafetyStop),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerState {
    pub mode: Mode,
    /// Last commanded joints.
    pub joints: JointVector,
    pub linkage: LinkageState,
    pub target: Option<ContactTarget>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TickOutput {
    pub t: f64,
    pub mode: Mode,
    pub command: JointCommand,
    pub linkage: LinkageState,
    pub target: Option<ContactTarget>,
    pub fault: Option<ControllerFault>,
    /// Hand point the command was speed-limited against.
    pub hand: Option<Vec3>,
}

/// Where the display should be for one contact target.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Goal {
    tcp: Pose,
    fit: ShapeFit,
    target: ContactTarget,
}

pub struct Controller {
    cfg: ControllerConfig,
    dh: DhTable,
    limits: JointLimits,
    geom: LinkageGeometry,
    ik: IkConfig,
    tool: Pose,
    ready_joints: JointVector,
    retract_joints: JointVector,
    state: ControllerState,
    clock: f64,
    detector: ContactDetector,
    /// Recent distinct samples spanning at least the velocity window.
    history: VecDeque<HandFrame>,
    last_frame: Option<HandFrame>,
    joint_velocity: JointVector,
    follower: Option<PathFollower>,
    planned_goal: Option<Goal>,
}

fn ik_fault(e: KinematicsError) -> ControllerFault {
    ControllerFault::IkFailure(e)
}

impl Controller {
    pub fn new(
        cfg: ControllerConfig,
        dh: DhTable,
        limits: JointLimits,
        geom: LinkageGeometry,
    ) -> Result<Self, ControllerError> {
        cfg.validate()?;
        dh.validate().map_err(|e| ControllerError::Config(e.to_string()))?;
        limits.validate().map_err(|e| ControllerError::Config(e.to_string()))?;
        geom.validate().map_err(|e| ControllerError::Config(e.to_string()))?;
        let tool = Pose::from_translation(geom.home_center());
        let ik = IkConfig::default();
        let solve = |pose: &PoseRecord, seed: &JointVector, what: &str| {
            let flange = pose.to_pose().expect("validated").compose(&tool.inverse());
            inverse_kinematics(&dh, &flange, seed, &limits, &ik)
                .map(|s| s.q)
                .map_err(|e| ControllerError::Config(format!("{what} pose: {e}")))
        };
        let ready_joints = solve(&cfg.ready_pose, &cfg.joint_seed, "ready")?;
        let retract_joints = solve(&cfg.retract_pose, &ready_joints, "retract")?;
        let detector = ContactDetector::new(cfg.contact.d_on, cfg.contact.d_off)?;
        Ok(Self {
            state: ControllerState {
                mode: Mode::Idle,
                joints: ready_joints,
                linkage: geom.home_state(),
                target: None,
            },
            cfg,
            dh,
            limits,
            geom,
            ik,
            tool,
            ready_joints,
            retract_joints,
            clock: 0.0,
            detector,
            history: VecDeque::new(),
            last_frame: None,
            joint_velocity: JointVector::zeros(),
            follower: None,
            planned_goal: None,
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    /// Flange-to-TCP transform (TCP = center contact point at home).
    pub fn tool(&self) -> &Pose {
        &self.tool
    }

    pub fn ready_joints(&self) -> JointVector {
        self.ready_joints
    }

    pub fn retract_joints(&self) -> JointVector {
        self.retract_joints
    }

    pub fn dh(&self) -> &DhTable {
        &self.dh
    }

    pub fn limits(&self) -> &JointLimits {
        &self.limits
    }

    pub fn tcp_pose(&self, q: &JointVector) -> Pose {
        forward_kinematics(&self.dh, q).compose(&self.tool)
    }

    pub fn safety_context(&self, dt: f64) -> SafetyContext<'_> {
        SafetyContext {
            cfg: &self.cfg.safety,
            limits: &self.limits,
            dh: &self.dh,
            tool: &self.tool,
            dt,
        }
    }

    fn tangent_for(&self, normal: &Vec3) -> Vec3 {
        let hint = Vec3::from(self.cfg.tangent_hint);
        let project = |h: Vec3| (h - normal * h.dot(normal)).try_normalize(1e-6);
        project(hint)
            .or_else(|| project(normal.cross(&hint)))
            .unwrap_or_else(|| any_orthogonal(normal))
    }

    /// Predicted contact for fingertip `idx`, or its surface projection when
    /// `predict` is false. Grazing predictions and surfaces the finger does
    /// not face are replaced by the nearest facing surface point.
    fn resolve_target(
        &self,
        mesh: &TriMesh,
        frame: &HandFrame,
        idx: usize,
        velocity: &Vec3,
        predict: bool,
    ) -> Result<ContactTarget, GeometryError> {
        let tip = frame.fingertips[idx];
        let v = if predict { *velocity } else { Vec3::zeros() };
        let mut target = predict_contact(mesh, idx, &tip, &v, self.cfg.contact.v_min)?;
        if target.is_predicted() {
            let speed = velocity.norm();
            let sine = -velocity.dot(&target.normal) / speed;
            if sine < self.cfg.min_approach_sine {
                target = predict_contact(mesh, idx, &tip, &Vec3::zeros(), self.cfg.contact.v_min)?;
            } else if self.cfg.fingertip_radius > 0.0 {
                // the pad touches before the tracked point reaches the surface
                let r = self.cfg.fingertip_radius;
                let touch = target.point - velocity * (r / (sine * speed)) - target.normal * r;
                let h = mesh.closest_point(&touch)?;
                target.point = h.point;
                target.triangle = h.triangle;
                target.normal = mesh.interpolated_normal(h.triangle, &h.point);
            }
        }
        let Some(pointing) = (tip - frame.palm).try_normalize(1e-9) else {
            return Ok(target);
        };
        if target.normal.dot(&pointing) <= -FACING_COS {
            return Ok(target);
        }
        let d0 = mesh.closest_point(&tip)?.distance;
        let best = mesh
            .closest_within(&tip, d0 + self.cfg.facing_slack)
            .into_iter()
            .map(|h| (mesh.interpolated_normal(h.triangle, &h.point).dot(&pointing), h))
            .filter(|(c, _)| *c <= -FACING_COS)
            .min_by(|a, b| {
                a.0.total_cmp(&b.0)
                    .then(a.1.distance.total_cmp(&b.1.distance))
                    .then(a.1.triangle.cmp(&b.1.triangle))
            });
        if let Some((_, h)) = best {
            target = ContactTarget {
                point: h.point,
                normal: mesh.interpolated_normal(h.triangle, &h.point),
                eta: f64::INFINITY,
                fingertip_index: idx,
                triangle: h.triangle,
            };
        }
        Ok(target)
    }

    fn flank_unsupported(
        &self,
        mesh: &TriMesh,
        center: &Vec3,
        t: &Vec3,
        n: &Vec3,
        s: f64,
        side: f64,
    ) -> Result<bool, GeometryError> {
        let flank = center + t * (side * self.geom.w_f) - n * s;
        Ok(mesh.closest_point(&flank)?.distance > SUPPORT_TOL)
    }

    /// Slides the display center along the tangent, away from any edge, until
    /// both flank points rest on the surface.
    fn support_clamp(
        &self,
        mesh: &TriMesh,
        point: Vec3,
        triangle: usize,
        t: &Vec3,
        n: &Vec3,
        s: f64,
    ) -> Result<(Vec3, usize), GeometryError> {
        let (mut center, mut tri) = (point, triangle);
        let span = 2.0 * self.geom.w_f;
        for side in [1.0, -1.0] {
            if !self.flank_unsupported(mesh, &center, t, n, s, side)? {
                continue;
            }
            let base = center;
            let shifted = |delta: f64| mesh.closest_point(&(base - t * (side * delta)));
            let far = shifted(span)?;
            if self.flank_unsupported(mesh, &far.point, t, n, s, side)? {
                continue;
            }
            let (mut lo, mut hi) = (0.0, span);
            for _ in 0..SUPPORT_STEPS {
                let mid = 0.5 * (lo + hi);
                if self.flank_unsupported(mesh, &shifted(mid)?.point, t, n, s, side)? {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let h = shifted(hi)?;
            center = h.point;
            tri = h.triangle;
        }
        Ok((center, tri))
    }

    fn goal_for(&self, mesh: &TriMesh, target: &ContactTarget) -> Result<Goal, GeometryError> {
        let r = self.cfg.patch_radius;
        let t = self.tangent_for(&target.normal);
        let patch = mesh.local_patch_along(&target.point, target.triangle, r, &t)?;
        let s = fit_shape(&patch, &self.geom).state.s_flank;
        let (center, tri) = self.support_clamp(mesh, target.point, target.triangle, &t, &patch.normal, s)?;
        let patch = if center == target.point {
            patch
        } else {
            let t = self.tangent_for(&mesh.interpolated_normal(tri, &center));
            mesh.local_patch_along(&center, tri, r, &t)?
        };
        let fit = fit_shape(&patch, &self.geom);
        let tcp =
            Pose::from_frame(center, patch.tangent, patch.normal).expect("patch tangent is orthogonal to its normal");
        Ok(Goal {
            tcp,
            fit,
            target: ContactTarget {
                point: center,
                normal: patch.normal,
                triangle: tri,
                ..*target
            },
        })
    }

    fn start_retract(&mut self) {
        self.follower = Some(PathFollower::new(
            self.state.joints,
            self.retract_joints,
            &self.limits,
            &self.joint_velocity,
        ));
        self.planned_goal = None;
        self.state.target = None;
        self.state.mode = Mode::Retracting;
    }

    fn plan_approach(&mut self, goal: Goal) -> Result<(), ControllerFault> {
        let flange = goal.tcp.compose(&self.tool.inverse());
        let sol =
            inverse_kinematics(&self.dh, &flange, &self.state.joints, &self.limits, &self.ik).map_err(ik_fault)?;
        self.follower = Some(PathFollower::new(
            self.state.joints,
            sol.q,
            &self.limits,
            &self.joint_velocity,
        ));
        self.planned_goal = Some(goal);
        Ok(())
    }

    fn goal_moved(&self, goal: &Goal) -> bool {
        self.planned_goal.is_none_or(|g| {
            let (ang, dist) = g.tcp.error_to(&goal.tcp);
            dist > self.cfg.replan_threshold || ang * self.geom.w_f > self.cfg.replan_threshold
        })
    }

    /// One Cartesian servo step toward `goal`, capped in speed.
    fn servo_toward(&self, goal: &Pose, dt: f64) -> Result<JointVector, ControllerFault> {
        let cur = self.tcp_pose(&self.state.joints);
        let dp = goal.translation - cur.translation;
        let (ang, dist) = cur.error_to(goal);
        let mut frac: f64 = 1.0;
        if dist > 0.0 {
            frac = frac.min(self.cfg.hold_speed * dt / dist);
        }
        if ang > 0.0 {
            frac = frac.min(HOLD_ROTATION_RATE * dt / ang);
        }
        let rotation = cur
            .rotation
            .try_slerp(&goal.rotation, frac, 1e-12)
            .unwrap_or(goal.rotation);
        let step = Pose::new(
            UnitQuaternion::new_normalize(*rotation.quaternion()),
            cur.translation + dp * frac,
        );
        let flange = step.compose(&self.tool.inverse());
        inverse_kinematics(&self.dh, &flange, &self.state.joints, &self.limits, &self.ik)
            .map(|s| s.q)
            .map_err(ik_fault)
    }

    /// Updates the velocity estimate when a new tracker sample arrives.
    fn observe(&mut self, frame: Option<&HandFrame>) {
        match frame {
            None => {
                self.history.clear();
                self.last_frame = None;
            }
            Some(f) => {
                if self.last_frame.is_none_or(|l| l.timestamp != f.timestamp) {
                    self.last_frame = Some(*f);
                    self.history.push_back(*f);
                    let window = self.cfg.velocity_window;
                    while self.history.len() > 2 && f.timestamp - self.history[1].timestamp >= window {
                        self.history.pop_front();
                    }
                }
            }
        }
    }

    /// Least-squares slope of fingertip `idx` over the velocity window.
    fn fitted_velocity(&self, idx: usize) -> Vec3 {
        let n = self.history.len();
        if n < 2 {
            return Vec3::zeros();
        }
        let t_mean = self.history.iter().map(|f| f.timestamp).sum::<f64>() / n as f64;
        let p_mean = self.history.iter().map(|f| f.fingertips[idx]).sum::<Vec3>() / n as f64;
        let (mut num, mut den) = (Vec3::zeros(), 0.0);
        for f in &self.history {
            let dt = f.timestamp - t_mean;
            num += (f.fingertips[idx] - p_mean) * dt;
            den += dt * dt;
        }
        num / den
    }

    fn hand_point_near(&self, q: &JointVector) -> Option<Vec3> {
        let f = self.last_frame?;
        let tcp = self.tcp_pose(q).translation;
        f.fingertips
            .iter()
            .chain(std::iter::once(&f.palm))
            .min_by(|a, b| (*a - tcp).norm().total_cmp(&(*b - tcp).norm()))
            .copied()
    }

    /// Advances one control period. `frame` is the latest smoothed, calibrated
    /// hand sample (the same sample may be passed on consecutive ticks).
    pub fn tick(&mut self, frame: Option<&HandFrame>, mesh: &TriMesh, dt: f64) -> Result<TickOutput, ControllerError> {
        let nominal = 1.0 / self.cfg.tick_rate;
        if !((dt - nominal).abs() <= 0.5 * nominal) {
            return Err(ControllerError::InvalidDt { dt });
        }
        self.clock += dt;
        let frame = frame.filter(|f| f.valid && f.is_finite());
        self.observe(frame);
        let approach = match frame {
            Some(f) => detect_approach(f, mesh, self.cfg.contact.d_approach)?,
            None => None,
        };
        let skin = approach.map_or(f64::INFINITY, |(_, d)| d - self.cfg.fingertip_radius);
        let edge = self.detector.update(self.clock, skin);
        let velocity = approach.map_or(Vec3::zeros(), |(i, _)| self.fitted_velocity(i));

        let prev = self.state.joints;
        let entered = self.state.mode;
        let mut fault = None;
        let mut proposal = prev;
        let mut linkage = self.geom.home_state();

        if self.state.mode == Mode::Approaching
            && self.detector.in_contact()
            && self.planned_goal.is_some_and(|g| {
                (self.tcp_pose(&prev).translation - g.tcp.translation).norm() < self.cfg.arrival_tolerance
            })
        {
            self.state.mode = Mode::Holding;
            self.follower = None;
        }

        match (self.state.mode, approach, frame) {
            (Mode::Idle, Some((idx, _)), Some(f)) => {
                let target = self.resolve_target(mesh, f, idx, &velocity, true)?;
                let goal = self.goal_for(mesh, &target)?;
                match self.plan_approach(goal) {
                    Ok(()) => {
                        self.state.mode = Mode::Approaching;
                        self.state.target = Some(goal.target);
                    }
                    Err(e) => {
                        fault = Some(e);
                        self.start_retract();
                    }
                }
            }
            (Mode::Approaching, Some((idx, _)), Some(f)) => {
                let target = self.resolve_target(mesh, f, idx, &velocity, true)?;
                let goal = self.goal_for(mesh, &target)?;
                if self.goal_moved(&goal) {
                    if let Err(e) = self.plan_approach(goal) {
                        fault = Some(e);
                        self.start_retract();
                    }
                }
                if self.state.mode == Mode::Approaching {
                    self.state.target = self.planned_goal.map(|g| g.target);
                }
            }
            (Mode::Approaching, _, _) => self.start_retract(),
            (Mode::Holding, Some((idx, _)), Some(f)) if edge != Some(ContactEdge::Offset) => {
                let target = self.resolve_target(mesh, f, idx, &velocity, false)?;
                let goal = self.goal_for(mesh, &target)?;
                match self.servo_toward(&goal.tcp, dt) {
                    Ok(q) => {
                        proposal = q;
                        self.planned_goal = Some(goal);
                        self.state.target = Some(goal.target);
                    }
                    Err(e) => {
                        fault = Some(e);
                        self.start_retract();
                    }
                }
            }
            (Mode::Holding, _, _) => self.start_retract(),
            _ => {}
        }

        let mut committed_s = None;
        if matches!(self.state.mode, Mode::Approaching | Mode::Retracting) {
            if let Some(fol) = &self.follower {
                let s = fol.propose(dt);
                proposal = fol.at(s);
                committed_s = Some(s);
            }
        }

        let hand = self.hand_point_near(&prev);
        let command = match safety_check(&prev, &proposal, hand.as_ref(), &self.safety_context(dt)) {
            Ok(c) => c,
            Err(stop) => {
                fault = Some(ControllerFault::SafetyStop(stop));
                if self.state.mode != Mode::Retracting {
                    self.start_retract();
                }
                committed_s = None;
                prev
            }
        };
        if let (Some(s_prop), Some(fol)) = (committed_s, self.follower.as_mut()) {
            // recover the executed path parameter from the (possibly scaled) command
            let s0 = fol.progress();
            let full = fol.at(s_prop).max_abs_diff(&prev);
            let done = command.max_abs_diff(&prev);
            let s_exec = if full > 0.0 {
                s0 + (s_prop - s0) * (done / full).min(1.0)
            } else {
                s_prop
            };
            fol.commit(if command == fol.at(s_prop) { s_prop } else { s_exec }, dt);
        }
        // a retract started this tick reports Retracting at least once
        if entered == Mode::Retracting
            && self.state.mode == Mode::Retracting
            && self.follower.as_ref().is_some_and(|f| f.is_done())
        {
            self.state.mode = Mode::Idle;
            self.follower = None;
            self.state.target = None;
        }
        if matches!(self.state.mode, Mode::Approaching | Mode::Holding) {
            if let Some(g) = &self.planned_goal {
                linkage = g.fit.state;
            }
        }

        self.joint_velocity = JointVector(std::array::from_fn(|i| (command[i] - prev[i]) / dt));
        self.state.joints = command;
        self.state.linkage = linkage;
        Ok(TickOutput {
            t: self.clock,
            mode: self.state.mode,
            command,
            linkage,
            target: self.state.target,
            fault,
            hand,
        })
    }
}
