//! One-Euro adaptive low-pass filter applied per coordinate.
//!
//! Each coordinate runs `x̂ ← x̂ + α(x − x̂)` with `α = r / (r + 1)`,
//! `r = 2π·f_c·Δt`, where the cutoff `f_c = min_cutoff + beta·|dx̂|` rises with
//! the filtered speed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{HandFrame, TrackingError, FINGERTIPS};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneEuroParams {
    /// Hz
    pub min_cutoff: f64,
    pub beta: f64,
    /// Hz
    pub d_cutoff: f64,
}

impl Default for OneEuroParams {
    fn default() -> Self {
        Self {
            min_cutoff: 1.0,
            beta: 0.007,
            d_cutoff: 1.0,
        }
    }
}

impl OneEuroParams {
    pub fn validate(&self) -> Result<(), TrackingError> {
        if !(self.min_cutoff > 0.0) {
            return Err(TrackingError::InvalidParameters("min_cutoff must be positive"));
        }
        if !(self.d_cutoff > 0.0) {
            return Err(TrackingError::InvalidParameters("d_cutoff must be positive"));
        }
        if !(self.beta >= 0.0) {
            return Err(TrackingError::InvalidParameters("beta must be non-negative"));
        }
        Ok(())
    }
}

fn smoothing_factor(dt: f64, cutoff: f64) -> f64 {
    let r = 2.0 * PI * cutoff * dt;
    r / (r + 1.0)
}

/// Filter state for one scalar coordinate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScalarOneEuro {
    prev: Option<(f64, f64)>,
}

impl ScalarOneEuro {
    pub fn reset(&mut self) {
        self.prev = None;
    }

    pub fn value(&self) -> Option<f64> {
        self.prev.map(|p| p.0)
    }

    pub fn derivative(&self) -> Option<f64> {
        self.prev.map(|p| p.1)
    }

    pub fn step(&mut self, params: &OneEuroParams, x: f64, dt: f64) -> f64 {
        match self.prev {
            None => {
                self.prev = Some((x, 0.0));
                x
            }
            Some((x_prev, dx_prev)) => {
                let dx = (x - x_prev) / dt;
                let a_d = smoothing_factor(dt, params.d_cutoff);
                let dx_hat = dx_prev + a_d * (dx - dx_prev);
                let cutoff = params.min_cutoff + params.beta * dx_hat.abs();
                let a = smoothing_factor(dt, cutoff);
                let x_hat = x_prev + a * (x - x_prev);
                self.prev = Some((x_hat, dx_hat));
                x_hat
            }
        }
    }
}

const COORDS: usize = (FINGERTIPS + 1) * 3;

/// Smoothing state for a whole hand stream (fingertips and palm).
#[derive(Clone, Debug, PartialEq)]
pub struct FilterState {
    params: OneEuroParams,
    coords: [ScalarOneEuro; COORDS],
    last_timestamp: Option<f64>,
}

impl FilterState {
    pub fn new(params: OneEuroParams) -> Result<Self, TrackingError> {
        params.validate()?;
        Ok(Self {
            params,
            coords: [ScalarOneEuro::default(); COORDS],
            last_timestamp: None,
        })
    }

    pub fn params(&self) -> &OneEuroParams {
        &self.params
    }

    pub fn last_timestamp(&self) -> Option<f64> {
        self.last_timestamp
    }

    /// Filters one frame. The first valid frame after construction or after
    /// an invalid frame passes through unchanged; an invalid frame clears the
    /// per-coordinate history.
    pub fn filter_step(&mut self, frame: &HandFrame) -> Result<HandFrame, TrackingError> {
        let dt = match self.last_timestamp {
            Some(prev) if !(frame.timestamp > prev) => {
                return Err(TrackingError::NonMonotonicTimestamp {
                    previous: prev,
                    got: frame.timestamp,
                })
            }
            Some(prev) => frame.timestamp - prev,
            None => 0.0,
        };
        self.last_timestamp = Some(frame.timestamp);
        if !frame.valid {
            self.coords.iter_mut().for_each(ScalarOneEuro::reset);
            return Ok(*frame);
        }
        let params = self.params;
        let mut k = 0;
        let coords = &mut self.coords;
        Ok(frame.map_positions(|p| {
            let mut out = *p;
            for axis in 0..3 {
                out[axis] = coords[k].step(&params, p[axis], dt);
                k += 1;
            }
            out
        }))
    }
}
