//! Scenario files: one JSON document configuring every module of a run.
//! Unknown keys are rejected; every section has defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::arm::{DhTable, JointLimits};
use crate::controller::ControllerConfig;
use crate::geometry::{load_obj, shapes, PoseRecord, TriMesh, Vec3};
use crate::shape_display::LinkageGeometry;
use crate::tracking::{read_trajectory, HandFrame, OneEuroParams};
use crate::twin::LinkConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    /// Contact events come from the physical display touching the finger.
    #[default]
    Haptic,
    /// Contact events come from tracked fingertip proximity alone.
    VisualOnly,
}

impl RenderMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RenderMode::Haptic => "haptic",
            RenderMode::VisualOnly => "visual_only",
        }
    }
}

impl std::str::FromStr for RenderMode {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "haptic" => Ok(RenderMode::Haptic),
            "visual_only" => Ok(RenderMode::VisualOnly),
            other => Err(HarnessError::Config(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TransportKind {
    #[default]
    Sim,
    Tcp,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Obj {
        path: PathBuf,
    },
    Box {
        min: [f64; 3],
        max: [f64; 3],
    },
    Plane {
        center: [f64; 3],
        half: f64,
        #[serde(default = "one")]
        divisions: usize,
    },
    Icosphere {
        center: [f64; 3],
        radius: f64,
        subdivisions: u32,
    },
    /// Box platform of the given length centered under the workspace.
    Platform {
        length: f64,
    },
}

fn one() -> usize {
    1
}

/// Platform geometry shared by the mesh builder and the participant model.
pub struct PlatformLayout;

impl PlatformLayout {
    pub const CENTER_Y: f64 = 0.25;
    pub const TOP_Z: f64 = 0.4;
    pub const HALF_WIDTH: f64 = 0.03;
    pub const DEPTH: f64 = 0.1;

    pub fn mesh(length: f64) -> TriMesh {
        shapes::box_mesh(
            Vec3::new(
                -length / 2.0,
                Self::CENTER_Y - Self::HALF_WIDTH,
                Self::TOP_Z - Self::DEPTH,
            ),
            Vec3::new(length / 2.0, Self::CENTER_Y + Self::HALF_WIDTH, Self::TOP_Z),
        )
    }
}

impl MeshSpec {
    pub fn build(&self, base: &Path) -> Result<TriMesh, HarnessError> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(HarnessError::Config(format!("mesh {what} must be positive")))
            }
        };
        Ok(match self {
            MeshSpec::Obj { path } => {
                load_obj(base.join(path)).map_err(|e| HarnessError::File(format!("{}: {e}", path.display())))?
            }
            MeshSpec::Box { min, max } => {
                if (0..3).any(|i| !(max[i] > min[i])) {
                    return Err(HarnessError::Config("box max must exceed min".into()));
                }
                shapes::box_mesh(Vec3::from(*min), Vec3::from(*max))
            }
            MeshSpec::Plane {
                center,
                half,
                divisions,
            } => {
                positive(*half, "half size")?;
                if *divisions == 0 {
                    return Err(HarnessError::Config("plane divisions must be at least 1".into()));
                }
                shapes::grid_plane(Vec3::from(*center), *half, *divisions)
            }
            MeshSpec::Icosphere {
                center,
                radius,
                subdivisions,
            } => {
                positive(*radius, "radius")?;
                if *subdivisions > 6 {
                    return Err(HarnessError::Config("icosphere subdivisions above 6".into()));
                }
                shapes::icosphere(Vec3::from(*center), *radius, *subdivisions)
            }
            MeshSpec::Platform { length } => {
                positive(*length, "platform length")?;
                PlatformLayout::mesh(*length)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectorySpec {
    /// Newline-delimited JSON frames (tracker frame).
    File { path: PathBuf },
    /// Index fingertip moving through `points` at constant `speed`, starting
    /// at `start_time` and resting at the last point afterwards.
    Path {
        points: Vec<[f64; 3]>,
        speed: f64,
        #[serde(default)]
        start_time: f64,
    },
    /// No hand in view.
    Empty,
}

/// Piecewise-linear fingertip path.
#[derive(Clone, Debug, PartialEq)]
pub struct FingertipPath {
    points: Vec<Vec3>,
    speed: f64,
    start_time: f64,
}

impl FingertipPath {
    pub fn new(points: Vec<Vec3>, speed: f64, start_time: f64) -> Result<Self, HarnessError> {
        if points.is_empty() || !(speed > 0.0) || !start_time.is_finite() {
            return Err(HarnessError::Config(
                "path needs at least one point and a positive speed".into(),
            ));
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(HarnessError::Config("path points must be finite".into()));
        }
        Ok(Self {
            points,
            speed,
            start_time,
        })
    }

    pub fn position(&self, t: f64) -> Vec3 {
        let mut remaining = (t - self.start_time).max(0.0) * self.speed;
        for w in self.points.windows(2) {
            let seg = w[1] - w[0];
            let len = seg.norm();
            if remaining <= len {
                return if len > 0.0 {
                    w[0] + seg * (remaining / len)
                } else {
                    w[0]
                };
            }
            remaining -= len;
        }
        *self.points.last().expect("non-empty")
    }
}

/// Source of raw tracker frames for a run.
#[derive(Clone, Debug, PartialEq)]
pub enum HandSource {
    Frames(Vec<HandFrame>),
    Path(FingertipPath),
    Empty,
}

impl HandSource {
    /// Frames sampled at `rate` Hz over `[0, duration]` (recorded files are
    /// used as is).
    pub fn frames(&self, rate: f64, duration: f64) -> Vec<HandFrame> {
        match self {
            HandSource::Frames(f) => f.clone(),
            HandSource::Empty => Vec::new(),
            HandSource::Path(p) => {
                let n = (duration * rate).floor() as usize;
                (0..=n)
                    .map(|k| {
                        let t = k as f64 / rate;
                        HandFrame::pointing(t, p.position(t))
                    })
                    .collect()
            }
        }
    }

    /// Noise-free index fingertip at time `t` (tracker frame); recorded
    /// streams are interpolated linearly between valid samples.
    pub fn true_tip(&self, t: f64, index: usize) -> Option<Vec3> {
        match self {
            HandSource::Empty => None,
            HandSource::Path(p) => Some(p.position(t)),
            HandSource::Frames(frames) => {
                let k = frames.partition_point(|f| f.timestamp <= t);
                let a = frames.get(k.checked_sub(1)?)?;
                if !a.valid {
                    return None;
                }
                match frames.get(k) {
                    Some(b) if b.valid => {
                        let s = (t - a.timestamp) / (b.timestamp - a.timestamp);
                        Some(a.fingertips[index] + (b.fingertips[index] - a.fingertips[index]) * s)
                    }
                    _ => Some(a.fingertips[index]),
                }
            }
        }
    }
}

impl TrajectorySpec {
    pub fn build(&self, base: &Path) -> Result<HandSource, HarnessError> {
        Ok(match self {
            TrajectorySpec::Empty => HandSource::Empty,
            TrajectorySpec::Path {
                points,
                speed,
                start_time,
            } => HandSource::Path(FingertipPath::new(
                points.iter().map(|p| Vec3::from(*p)).collect(),
                *speed,
                *start_time,
            )?),
            TrajectorySpec::File { path } => {
                let full = base.join(path);
                let file =
                    std::fs::File::open(&full).map_err(|e| HarnessError::File(format!("{}: {e}", full.display())))?;
                let frames = read_trajectory(std::io::BufReader::new(file))
                    .map_err(|e| HarnessError::File(format!("{}: {e}", full.display())))?;
                HandSource::Frames(frames)
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantConfig {
    /// First-order lag time constant, s.
    pub tau: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self { tau: 0.05 }
    }
}

/// Physical contact model between the finger and the display membrane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MembraneConfig {
    /// Half-width of the membrane strip across the contact line, m.
    pub half_width: f64,
}

impl Default for MembraneConfig {
    fn default() -> Self {
        Self { half_width: 0.03 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub mesh: MeshSpec,
    #[serde(default = "default_trajectory")]
    pub trajectory: TrajectorySpec,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub linkage: LinkageGeometry,
    #[serde(default)]
    pub dh: DhTable,
    #[serde(default)]
    pub joint_limits: JointLimits,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default)]
    pub filter: OneEuroParams,
    #[serde(default)]
    pub membrane: MembraneConfig,
    /// Tracker-to-robot transform applied to every frame.
    #[serde(default = "identity_record")]
    pub calibration: PoseRecord,
    #[serde(default)]
    pub mode: RenderMode,
    /// Tracker noise standard deviation, m.
    #[serde(default = "default_sigma")]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// s
    pub duration: f64,
    /// Hz
    #[serde(default = "default_tracker_rate")]
    pub tracker_rate: f64,
    #[serde(default)]
    pub transport: TransportKind,
    /// Adds per-tick compute timing to the metrics (makes them
    /// non-reproducible).
    #[serde(default)]
    pub record_timing: bool,
}

fn default_trajectory() -> TrajectorySpec {
    TrajectorySpec::Empty
}

fn identity_record() -> PoseRecord {
    PoseRecord {
        quat: [1.0, 0.0, 0.0, 0.0],
        pos: [0.0; 3],
    }
}

fn default_sigma() -> f64 {
    0.003
}

fn default_tracker_rate() -> f64 {
    90.0
}

impl Scenario {
    /// Minimal scenario around `mesh` with every other section at its
    /// default.
    pub fn new(mesh: MeshSpec, duration: f64) -> Self {
        Self {
            mesh,
            trajectory: TrajectorySpec::Empty,
            controller: ControllerConfig::default(),
            linkage: LinkageGeometry::default(),
            dh: DhTable::ur3(),
            joint_limits: JointLimits::default(),
            link: LinkConfig::default(),
            plant: PlantConfig::default(),
            filter: OneEuroParams::default(),
            membrane: MembraneConfig::default(),
            calibration: identity_record(),
            mode: RenderMode::Haptic,
            noise_sigma: default_sigma(),
            seed: 0,
            duration,
            tracker_rate: default_tracker_rate(),
            transport: TransportKind::Sim,
            record_timing: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::File(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let cfg = |m: String| Err(HarnessError::Config(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return cfg("duration must be positive".into());
        }
        if !(self.tracker_rate > 0.0 && self.tracker_rate.is_finite()) {
            return cfg("tracker_rate must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return cfg("noise_sigma must be non-negative".into());
        }
        if !(self.plant.tau >= 0.0 && self.plant.tau.is_finite()) {
            return cfg("plant tau must be non-negative".into());
        }
        if !(self.membrane.half_width > 0.0) {
            return cfg("membrane half_width must be positive".into());
        }
        if self.calibration.to_pose().is_none() {
            return cfg("calibration quaternion must be unit length".into());
        }
        self.controller
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.linkage
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.dh.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.joint_limits
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.filter
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.link.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }
}
