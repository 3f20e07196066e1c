//! Hand-tracking input: frames, smoothing, tracker-to-robot calibration and
//! the simulated tracker used by the harness.

mod calibration;
mod filter;
mod trajectory;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::Vec3;

pub use calibration::{apply_calibration, estimate_calibration, CalibrationTransform};
pub use filter::{FilterState, OneEuroParams, ScalarOneEuro};
pub use trajectory::{read_trajectory, write_trajectory, TrajectoryRecord};

pub const FINGERTIPS: usize = 5;
/// Index of the index-finger tip within [`HandFrame::fingertips`].
pub const INDEX_FINGER: usize = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TrackingError {
    #[error("timestamp {got} does not follow {previous}")]
    NonMonotonicTimestamp { previous: f64, got: f64 },
    #[error("degenerate calibration point set: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("invalid filter parameters: {0}")]
    InvalidParameters(&'static str),
    #[error("trajectory line {line}: {message}")]
    Trajectory { line: usize, message: String },
    #[error("io error: {0}")]
    Io(String),
}

/// One tracker sample. Positions are meters in whatever frame the producer
/// reports (tracker frame until calibrated).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HandFrame {
    pub timestamp: f64,
    pub fingertips: [Vec3; FINGERTIPS],
    pub palm: Vec3,
    pub valid: bool,
}

impl HandFrame {
    /// Frame with every fingertip at `tip` and the palm 8 cm behind it.
    pub fn single_point(timestamp: f64, tip: Vec3) -> Self {
        let palm = tip + Vec3::new(0.0, 0.0, 0.08);
        Self {
            timestamp,
            fingertips: [tip; FINGERTIPS],
            palm,
            valid: true,
        }
    }

    /// Pointing hand: the index fingertip at `tip`, the other fingertips
    /// curled at least 4 cm above and behind it (−x), palm 8 cm above.
    pub fn pointing(timestamp: f64, tip: Vec3) -> Self {
        const CURLED: [[f64; 3]; FINGERTIPS] = [
            [-0.03, -0.03, 0.04],
            [0.0, 0.0, 0.0],
            [-0.01, 0.015, 0.04],
            [-0.015, 0.03, 0.045],
            [-0.02, 0.045, 0.05],
        ];
        Self {
            timestamp,
            fingertips: CURLED.map(|o| tip + Vec3::from(o)),
            palm: tip + Vec3::new(-0.03, 0.01, 0.08),
            valid: true,
        }
    }

    pub fn invalid(timestamp: f64) -> Self {
        Self {
            timestamp,
            fingertips: [Vec3::zeros(); FINGERTIPS],
            palm: Vec3::zeros(),
            valid: false,
        }
    }

    /// Applies `f` to every position (fingertips then palm).
    pub fn map_positions(&self, mut f: impl FnMut(&Vec3) -> Vec3) -> HandFrame {
        HandFrame {
            timestamp: self.timestamp,
            fingertips: self.fingertips.map(|p| f(&p)),
            palm: f(&self.palm),
            valid: self.valid,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.fingertips
            .iter()
            .chain(std::iter::once(&self.palm))
            .all(|p| p.iter().all(|v| v.is_finite()))
    }
}

/// Additive iid Gaussian noise on every coordinate, reproducible from a seed.
#[derive(Clone, Debug)]
pub struct TrackerNoise {
    normal: Option<Normal<f64>>,
    rng: ChaCha8Rng,
}

impl TrackerNoise {
    pub fn new(sigma: f64, seed: u64) -> Self {
        let normal = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
        Self {
            normal,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Noisy copy of `frame`; invalid frames pass through untouched.
    pub fn apply(&mut self, frame: &HandFrame) -> HandFrame {
        let Some(normal) = self.normal else {
            return *frame;
        };
        if !frame.valid {
            return *frame;
        }
        let rng = &mut self.rng;
        frame.map_positions(|p| p + Vec3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng)))
    }
}
