mod common;

use encounter_core::arm::{forward_kinematics, DhTable, JointLimits, JointVector};
use encounter_core::controller::{
    safety_check, Controller, ControllerConfig, Mode, SafetyConfig, SafetyContext, TickOutput, Trapezoid,
};
use encounter_core::geometry::{shapes, Aabb, Pose, TriMesh, Vec3};
use encounter_core::harness::{simulate, FingertipPath, HandSource, MeshSpec, PlatformLayout, ReplayOptions, Scenario};
use encounter_core::shape_display::LinkageGeometry;
use encounter_core::tracking::HandFrame;
use rand::Rng;

use common::rng;

/// Integrates the profile velocity with the midpoint rule.
fn integrate(p: &Trapezoid, steps: usize) -> f64 {
    let h = p.duration() / steps as f64;
    (0..steps).map(|k| p.velocity((k as f64 + 0.5) * h) * h).sum()
}

#[test]
fn trapezoid_closed_form() {
    let p = Trapezoid::new(1.0, 1.0, 2.0);
    assert!((p.duration() - 1.5).abs() < 1e-12);
    assert!((p.t_accel - 0.5).abs() < 1e-12 && (p.t_cruise - 0.5).abs() < 1e-12);
    assert!((integrate(&p, 100_000) - 1.0).abs() < 1e-6);
    assert!((p.position(p.duration()) - 1.0).abs() < 1e-12);
}

#[test]
fn short_move_is_triangular() {
    let p = Trapezoid::new(0.2, 1.0, 2.0);
    assert!(p.is_triangular());
    assert!(p.peak_velocity < 1.0);
    // d = a·ta², peak = a·ta
    let ta = (0.2f64 / 2.0).sqrt();
    assert!((p.duration() - 2.0 * ta).abs() < 1e-12);
    assert!((integrate(&p, 100_000) - 0.2).abs() < 1e-6);
}

#[test]
fn near_hand_speed_is_capped() {
    let cfg = SafetyConfig {
        workspace: Aabb::new(Vec3::repeat(-2.0), Vec3::repeat(2.0)),
        ..SafetyConfig::default()
    };
    let (limits, dh, tool) = (JointLimits::default(), DhTable::ur3(), Pose::identity());
    let dt = 0.008;
    let ctx = SafetyContext {
        cfg: &cfg,
        limits: &limits,
        dh: &dh,
        tool: &tool,
        dt,
    };
    let prev = JointVector([1.57, -1.2, 1.5, -1.9, -1.57, 0.0]);
    let p0 = forward_kinematics(&dh, &prev).translation;
    let radius = p0.x.hypot(p0.y);
    // base rotation giving 0.4 m/s of TCP chord speed
    let mut cmd = prev;
    cmd[0] += 2.0 * (0.4 * dt / (2.0 * radius)).asin();
    assert!(((forward_kinematics(&dh, &cmd).translation - p0).norm() / dt - 0.4).abs() < 1e-9);
    let hand = p0 + Vec3::new(0.0, 0.0, 0.15);
    let out = safety_check(&prev, &cmd, Some(&hand), &ctx).unwrap();
    let speed = (forward_kinematics(&dh, &out).translation - p0).norm() / dt;
    assert!((speed - 0.25).abs() < 1e-6, "speed {speed}");
    // far from the hand the global 0.5 m/s cap leaves it alone
    let far = p0 + Vec3::new(0.0, 0.0, 0.5);
    assert_eq!(safety_check(&prev, &cmd, Some(&far), &ctx).unwrap(), cmd);
}

fn allowed(from: Mode, to: Mode) -> bool {
    use Mode::*;
    from == to
        || matches!(
            (from, to),
            (Idle, Approaching)
                | (Approaching, Holding)
                | (Holding, Retracting)
                | (Retracting, Idle)
                | (Approaching, Retracting)
                | (Idle, Retracting)
        )
}

fn controller() -> Controller {
    Controller::new(
        ControllerConfig::default(),
        DhTable::ur3(),
        JointLimits::default(),
        LinkageGeometry::default(),
    )
    .unwrap()
}

fn workspace_plane() -> TriMesh {
    shapes::grid_plane(
        Vec3::new(0.0, PlatformLayout::CENTER_Y, PlatformLayout::TOP_Z),
        0.15,
        10,
    )
}

/// Random hand walk around the surface with dropouts.
fn fuzz_stream(seed: u64, ticks: usize) -> Vec<Option<HandFrame>> {
    let mut r = rng(seed);
    let mut p = Vec3::new(0.0, PlatformLayout::CENTER_Y, PlatformLayout::TOP_Z + 0.1);
    let mut v = Vec3::zeros();
    (0..ticks)
        .map(|k| {
            let t = (k + 1) as f64 / 125.0;
            v += Vec3::new(
                r.random_range(-0.05..0.05),
                r.random_range(-0.05..0.05),
                r.random_range(-0.06..0.05),
            );
            v *= 0.97;
            p += v / 125.0;
            let floor = PlatformLayout::TOP_Z + 0.004;
            if p.z < floor {
                p.z = floor;
                v.z = v.z.max(0.0);
            }
            p.z = p.z.min(PlatformLayout::TOP_Z + 0.3);
            p.x = p.x.clamp(-0.2, 0.2);
            p.y = p.y.clamp(0.1, 0.4);
            match r.random_range(0..1000) {
                0..3 => None,
                3..5 => Some(HandFrame::invalid(t)),
                _ => Some(HandFrame::pointing(t, p)),
            }
        })
        .collect()
}

fn run_stream(stream: &[Option<HandFrame>], mesh: &TriMesh) -> Vec<TickOutput> {
    let mut c = controller();
    stream
        .iter()
        .map(|f| c.tick(f.as_ref(), mesh, 0.008).unwrap())
        .collect()
}

#[test]
fn fuzzed_streams_respect_mode_graph_and_limits() {
    let mesh = workspace_plane();
    let limits = JointLimits::default();
    let mut seen = std::collections::HashSet::new();
    for seed in 0..12 {
        let stream = fuzz_stream(seed, 1500);
        let out = run_stream(&stream, &mesh);
        let c = controller();
        let mut prev = c.ready_joints();
        let mut mode = Mode::Idle;
        for o in &out {
            assert!(allowed(mode, o.mode), "{mode:?} -> {:?}", o.mode);
            seen.insert((mode, o.mode));
            mode = o.mode;
            for i in 0..6 {
                assert!((o.command[i] - prev[i]).abs() <= limits.max_velocity[i] * 0.008 + 1e-9);
            }
            prev = o.command;
        }
    }
    assert!(seen.contains(&(Mode::Idle, Mode::Approaching)));
    assert!(seen.contains(&(Mode::Approaching, Mode::Holding)));
    assert!(seen.contains(&(Mode::Holding, Mode::Retracting)));
    assert!(seen.contains(&(Mode::Retracting, Mode::Idle)));
}

#[test]
fn identical_streams_give_identical_commands() {
    let mesh = workspace_plane();
    let stream = fuzz_stream(99, 800);
    assert_eq!(run_stream(&stream, &mesh), run_stream(&stream, &mesh));
}

#[test]
fn wrong_tick_length_is_rejected() {
    let mut c = controller();
    assert!(c.tick(None, &workspace_plane(), 0.02).is_err());
}

#[test]
fn scripted_approach_arrives_first() {
    let top = PlatformLayout::TOP_Z;
    let cy = PlatformLayout::CENTER_Y;
    for (lead, tilt) in [(0.15, 0.0), (0.2, 0.3), (0.25, -0.2), (0.3, 0.1)] {
        let mut s = Scenario::new(
            MeshSpec::Plane {
                center: [0.0, cy, top],
                half: 0.15,
                divisions: 8,
            },
            1.0,
        );
        s.noise_sigma = 0.0;
        let touch = Vec3::new(0.02, cy, top + s.controller.fingertip_radius);
        let dir = Vec3::new(f64::sin(tilt), 0.0, -f64::cos(tilt));
        let arrival = 0.2 + lead / 0.3;
        s.duration = arrival + 0.2;
        let hand = HandSource::Path(FingertipPath::new(vec![touch - dir * lead, touch], 0.3, 0.2).unwrap());
        let mesh = s.mesh.build(std::path::Path::new(".")).unwrap();
        let out = simulate(&s, &mesh, &hand, ReplayOptions { trace: true }).unwrap();
        let contact = touch - Vec3::z() * s.controller.fingertip_radius;
        let first = out
            .trace
            .iter()
            .find(|t| (Vec3::from(t.center) - contact).norm() < 0.002);
        let t = first.map(|t| t.t).unwrap_or(f64::INFINITY);
        assert!(
            t <= arrival,
            "lead {lead}: center reached the touch point at {t}, finger at {arrival}"
        );
    }
}
