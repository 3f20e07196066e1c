//! Closed-loop replay on a simulated clock.
//!
//! Per tick, in order: tracker frames due by now are noised, smoothed and
//! calibrated; the visual proximity detector and the controller run; the
//! command travels to the plant over the command link; the plant steps and
//! publishes its state back over the state link to the twin; metrics are
//! sampled.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::scenario::{HandSource, RenderMode, Scenario, TransportKind};
use super::HarnessError;
use crate::arm::{forward_kinematics, inverse_kinematics, IkConfig, JointVector};
use crate::contact::{detect_approach, ContactDetector, ContactEdge, ContactEvent};
use crate::controller::{Controller, ControllerFault, Mode};
use crate::geometry::{Pose, PoseRecord, TriMesh, Vec3};
use crate::plant::{plant_step, PlantState};
use crate::shape_display::{linkage_fk, ContactTriple, LinkageState};
use crate::tracking::{apply_calibration, CalibrationTransform, FilterState, HandFrame, TrackerNoise, INDEX_FINGER};
use crate::twin::{tcp_desync, Payload, SeqCounter, SimTransport, SocketLink, Transport, TwinMessage, TwinState};

/// Tracker samples older than this are treated as a lost hand, s.
const FRAME_TIMEOUT: f64 = 0.1;
/// Finger positions farther than this behind the membrane do not touch it, m.
const MAX_PENETRATION: f64 = 0.02;
const FAULT_IK: u32 = 1;

/// One line of the command log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub t: f64,
    pub mode: Mode,
    pub q: JointVector,
    pub linkage: LinkageState,
    pub target: Option<[f64; 3]>,
    pub fault: Option<String>,
    /// Hand point used by the near-hand speed limit.
    pub hand: Option<[f64; 3]>,
}

/// One message received by the twin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwinLogRecord {
    /// Receive time, s.
    pub t: f64,
    pub seq: u64,
    pub kind: String,
    /// Send time, s.
    pub sent: f64,
    pub applied: bool,
    pub staleness: f64,
}

/// Optional per-tick trace of the physical scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub mode: Mode,
    /// Display center of the plant (robot frame).
    pub center: [f64; 3],
    /// Contact point the controller is aiming for.
    pub target: Option<[f64; 3]>,
    /// Noise-free index fingertip (robot frame).
    pub tip: Option<[f64; 3]>,
    /// Skin-to-membrane gap, absent when the finger is off the membrane.
    pub gap: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub mean_tick_s: f64,
    pub max_tick_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mode: RenderMode,
    pub seed: u64,
    pub ticks: usize,
    pub tick_rate: f64,
    /// Events of the active render mode.
    pub contact_events: Vec<ContactEvent>,
    /// Physical display contact, stamped when the controller side learns of it.
    pub haptic_events: Vec<ContactEvent>,
    /// Tracked fingertip proximity.
    pub visual_events: Vec<ContactEvent>,
    pub final_mode: Mode,
    pub max_desync_m: f64,
    pub mean_desync_m: f64,
    pub max_staleness_s: f64,
    pub desync_ticks: usize,
    pub commands_sent: usize,
    pub updates_applied: usize,
    pub controller_faults: usize,
    pub plant_faults: usize,
    /// Wall-clock compute per tick; only recorded on request since it is not
    /// reproducible.
    pub timing: Option<Timing>,
}

impl Metrics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReplayOptions {
    pub trace: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplayOutput {
    pub commands: Vec<CommandRecord>,
    pub twin_log: Vec<TwinLogRecord>,
    pub metrics: Metrics,
    pub trace: Vec<TraceRecord>,
}

impl ReplayOutput {
    /// Writes `commands.ndjson`, `twin.ndjson`, `metrics.json` (and
    /// `trace.ndjson` when traced) into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir).map_err(io)?;
        write_ndjson(&dir.join("commands.ndjson"), &self.commands)?;
        write_ndjson(&dir.join("twin.ndjson"), &self.twin_log)?;
        if !self.trace.is_empty() {
            write_ndjson(&dir.join("trace.ndjson"), &self.trace)?;
        }
        std::fs::write(dir.join("metrics.json"), self.metrics.to_json()).map_err(io)
    }
}

fn io(e: std::io::Error) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

pub fn write_ndjson<T: Serialize>(path: &Path, records: &[T]) -> Result<(), HarnessError> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(io)
}

fn arr(v: &Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

/// Skin-to-membrane gap for a fingertip at `tip` over a display whose frame
/// is `display` and whose contact points are `triple`. Infinite when the
/// finger is outside the membrane strip.
pub fn membrane_gap(tip: &Vec3, display: &Pose, triple: &ContactTriple, half_width: f64, fingertip_radius: f64) -> f64 {
    let p = display.inverse().transform_point(tip) - triple.p_center;
    let reach = (triple.p_right.x - triple.p_center.x).min(triple.p_center.x - triple.p_left.x);
    if p.x.abs() > reach || p.y.abs() > half_width {
        return f64::INFINITY;
    }
    let gap = p.z - triple.membrane_height(p.x) - fingertip_radius;
    if gap < -MAX_PENETRATION - fingertip_radius {
        f64::INFINITY
    } else {
        gap
    }
}

/// Turns detector edges into events stamped at the times they are observed.
#[derive(Default)]
struct EventLog {
    events: Vec<ContactEvent>,
}

impl EventLog {
    fn push(&mut self, edge: ContactEdge, t: f64) {
        match edge {
            ContactEdge::Onset => self.events.push(ContactEvent { onset: t, offset: None }),
            ContactEdge::Offset => {
                if let Some(e) = self.events.last_mut() {
                    e.offset = Some(t);
                }
            }
        }
    }
}

fn transport(kind: TransportKind, cfg: crate::twin::LinkConfig) -> Result<Box<dyn Transport>, HarnessError> {
    let err = |e: crate::twin::TwinError| HarnessError::Runtime(e.to_string());
    Ok(match kind {
        TransportKind::Sim => Box::new(SimTransport::new(cfg).map_err(err)?),
        TransportKind::Tcp => Box::new(SocketLink::loopback(cfg).map_err(err)?),
    })
}

/// Runs `scenario` with its mesh and hand stream already resolved.
pub fn simulate(
    scenario: &Scenario,
    mesh: &TriMesh,
    hand: &HandSource,
    opts: ReplayOptions,
) -> Result<ReplayOutput, HarnessError> {
    scenario.validate()?;
    let rt = |e: &dyn std::fmt::Display| HarnessError::Runtime(e.to_string());
    let mut controller = Controller::new(
        scenario.controller.clone(),
        scenario.dh,
        scenario.joint_limits,
        scenario.linkage,
    )
    .map_err(|e| HarnessError::Config(e.to_string()))?;
    let dh = scenario.dh;
    let tool = *controller.tool();
    let geom = scenario.linkage;
    let cfg = controller.config().clone();
    let dt = 1.0 / cfg.tick_rate;
    let ticks = (scenario.duration * cfg.tick_rate).round() as usize;
    let radius = cfg.fingertip_radius;

    let calibration = CalibrationTransform::from_pose(scenario.calibration.to_pose().expect("validated"));
    let frames = hand.frames(scenario.tracker_rate, scenario.duration);
    let mut next_frame = 0;
    let mut noise = TrackerNoise::new(scenario.noise_sigma, scenario.seed);
    let mut filter = FilterState::new(scenario.filter).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut latest: Option<HandFrame> = None;

    let mut link = scenario.link;
    link.seed = link.seed.wrapping_add(scenario.seed.wrapping_mul(2));
    let mut cmd_link = transport(scenario.transport, link)?;
    link.seed = link.seed.wrapping_add(1);
    let mut state_link = transport(scenario.transport, link)?;
    let mut vr_seq = SeqCounter::default();
    let mut plant_seq = SeqCounter::default();

    let ready = controller.ready_joints();
    let mut plant = PlantState::at_rest(ready, geom.home_state());
    let mut plant_target = (ready, geom.home_state());
    let mut plant_pose: Option<PoseRecord> = None;
    let mut plant_last_seq: Option<u64> = None;
    let ik = IkConfig::default();
    let mut twin = TwinState::new(ready, geom.home_state());

    let mut visual =
        ContactDetector::new(cfg.contact.d_on, cfg.contact.d_off).map_err(|e| HarnessError::Config(e.to_string()))?;
    let mut haptic = visual.clone();
    let mut pending: Vec<(f64, ContactEdge)> = Vec::new();
    let mut haptic_log = EventLog::default();

    let mut commands = Vec::with_capacity(ticks);
    let mut twin_log = Vec::new();
    let mut trace = Vec::new();
    let (mut max_desync, mut sum_desync, mut max_stale, mut desync_ticks) = (0.0_f64, 0.0, 0.0_f64, 0);
    let (mut controller_faults, mut plant_faults, mut applied) = (0, 0, 0);
    let (mut compute_sum, mut compute_max) = (0.0, 0.0_f64);

    for k in 1..=ticks {
        let now = k as f64 * dt;
        let started = scenario.record_timing.then(Instant::now);

        while let Some(raw) = frames.get(next_frame).filter(|f| f.timestamp <= now) {
            let noisy = noise.apply(raw);
            let smooth = filter.filter_step(&noisy).map_err(|e| rt(&e))?;
            latest = Some(apply_calibration(&calibration, &smooth));
            next_frame += 1;
        }
        let current = latest.filter(|f| f.valid && now - f.timestamp <= FRAME_TIMEOUT);

        let seen = match &current {
            Some(f) => detect_approach(f, mesh, cfg.contact.d_approach)
                .map_err(|e| rt(&e))?
                .map_or(f64::INFINITY, |(_, d)| d - radius),
            None => f64::INFINITY,
        };
        visual.update(now, seen);

        let out = controller.tick(current.as_ref(), mesh, dt).map_err(|e| rt(&e))?;
        if out.fault.is_some() {
            controller_faults += 1;
        }
        let flange = forward_kinematics(&dh, &out.command);
        let cmd = TwinMessage::new(
            vr_seq.next_seq(),
            now,
            Payload::TargetCommand {
                pose: PoseRecord::from(&flange),
                linkage: out.linkage,
            },
        );
        cmd_link.send(now, &cmd).map_err(|e| rt(&e))?;
        commands.push(CommandRecord {
            t: now,
            mode: out.mode,
            q: out.command,
            linkage: out.linkage,
            target: out.target.map(|g| arr(&g.point)),
            fault: out.fault.as_ref().map(|f| match f {
                ControllerFault::IkFailure(e) => format!("ik: {e}"),
                ControllerFault::SafetyStop(e) => format!("safety: {e}"),
            }),
            hand: out.hand.map(|h| arr(&h)),
        });

        // plant side: newest command wins
        let newest = cmd_link
            .poll(now)
            .map_err(|e| rt(&e))?
            .into_iter()
            .filter(|m| plant_last_seq.is_none_or(|s| m.seq > s))
            .max_by_key(|m| m.seq);
        if let Some(TwinMessage {
            seq,
            payload: Payload::TargetCommand { pose, linkage },
            ..
        }) = newest
        {
            plant_last_seq = Some(seq);
            if plant_pose != Some(pose) {
                let solved = pose
                    .to_pose()
                    .ok_or_else(|| "non-unit pose quaternion".to_string())
                    .and_then(|p| {
                        inverse_kinematics(&dh, &p, &plant_target.0, &scenario.joint_limits, &ik)
                            .map_err(|e| e.to_string())
                    });
                match solved {
                    Ok(sol) => {
                        plant_target.0 = sol.q;
                        plant_pose = Some(pose);
                    }
                    Err(text) => {
                        plant_faults += 1;
                        let fault =
                            TwinMessage::new(plant_seq.next_seq(), now, Payload::Fault { code: FAULT_IK, text });
                        state_link.send(now, &fault).map_err(|e| rt(&e))?;
                    }
                }
            }
            plant_target.1 = linkage;
        }
        plant = plant_step(&plant, &plant_target.0, &plant_target.1, dt, scenario.plant.tau);

        let display = forward_kinematics(&dh, &plant.joints);
        let triple = linkage_fk(&geom, &plant.linkage).map_err(|e| rt(&e))?;
        let true_tip = hand
            .true_tip(now, INDEX_FINGER)
            .map(|p| calibration.pose.transform_point(&p));
        let gap = match &true_tip {
            Some(tip) => membrane_gap(tip, &display, &triple, scenario.membrane.half_width, radius),
            None => f64::INFINITY,
        };
        if let Some(edge) = haptic.update(now, gap) {
            pending.push((now, edge));
        }

        let update = TwinMessage::new(
            plant_seq.next_seq(),
            now,
            Payload::StateUpdate {
                q: plant.joints,
                linkage: plant.linkage,
            },
        );
        state_link.send(now, &update).map_err(|e| rt(&e))?;
        for msg in state_link.poll(now).map_err(|e| rt(&e))? {
            let ok = twin.apply(&msg, now);
            if ok {
                applied += 1;
                let known = pending.iter().take_while(|(t, _)| *t <= msg.t).count();
                for (_, edge) in pending.drain(..known) {
                    haptic_log.push(edge, now);
                }
            }
            twin_log.push(TwinLogRecord {
                t: now,
                seq: msg.seq,
                kind: msg.payload.kind().to_string(),
                sent: msg.t,
                applied: ok,
                staleness: twin.staleness,
            });
        }
        twin.age(now);

        let desync = tcp_desync(&dh, &tool, &twin.joints, &plant.joints);
        max_desync = max_desync.max(desync);
        sum_desync += desync;
        max_stale = max_stale.max(twin.staleness);
        if twin.desync {
            desync_ticks += 1;
        }

        if let Some(s) = started {
            let e = s.elapsed().as_secs_f64();
            compute_sum += e;
            compute_max = compute_max.max(e);
        }
        if opts.trace {
            trace.push(TraceRecord {
                t: now,
                mode: out.mode,
                center: arr(&display.compose(&tool).translation),
                target: out.target.map(|g| arr(&g.point)),
                tip: true_tip.map(|p| arr(&p)),
                gap: gap.is_finite().then_some(gap),
            });
        }
    }

    let haptic_events = haptic_log.events;
    let visual_events = visual.into_events();
    let contact_events = match scenario.mode {
        RenderMode::Haptic => haptic_events.clone(),
        RenderMode::VisualOnly => visual_events.clone(),
    };
    let metrics = Metrics {
        mode: scenario.mode,
        seed: scenario.seed,
        ticks,
        tick_rate: cfg.tick_rate,
        contact_events,
        haptic_events,
        visual_events,
        final_mode: controller.state().mode,
        max_desync_m: max_desync,
        mean_desync_m: if ticks > 0 { sum_desync / ticks as f64 } else { 0.0 },
        max_staleness_s: max_stale,
        desync_ticks,
        commands_sent: commands.len(),
        updates_applied: applied,
        controller_faults,
        plant_faults,
        timing: (scenario.record_timing && ticks > 0).then(|| Timing {
            mean_tick_s: compute_sum / ticks as f64,
            max_tick_s: compute_max,
        }),
    };
    Ok(ReplayOutput {
        commands,
        twin_log,
        metrics,
        trace,
    })
}

/// Loads the mesh and trajectory referenced by `scenario` (relative to
/// `base`) and runs it.
pub fn run_replay(scenario: &Scenario, base: &Path, opts: ReplayOptions) -> Result<ReplayOutput, HarnessError> {
    scenario.validate()?;
    let mesh = scenario.mesh.build(base)?;
    let hand = scenario.trajectory.build(base)?;
    simulate(scenario, &mesh, &hand, opts)
}
