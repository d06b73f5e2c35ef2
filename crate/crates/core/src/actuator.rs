//! PQ12-class micro linear actuator model.
//!
//! The real unit runs an internal position servo, so the model is its
//! closed-loop envelope: rate-limited tracking toward the commanded
//! position, a static-friction band inside which small commands produce no
//! motion, and a force-limited stall on extension. Retraction is never
//! force-limited. Position feedback is quantized and optionally noisy.

use thiserror::Error;

use crate::rng::SimRng;

#[derive(Debug, Error, PartialEq)]
pub enum ActuatorError {
    #[error("command {command} mm outside [0, {stroke}] mm")]
    CommandOutOfRange { command: f64, stroke: f64 },
    #[error("step requires dt > 0, got {dt}")]
    NonpositiveDt { dt: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ActuatorParams {
    /// Full mechanical stroke, mm.
    pub stroke_mm: f64,
    /// Stall force, N. Extension halts once the load reaches it.
    pub max_force_n: f64,
    /// Slew rate of the internal servo, mm/s.
    pub max_speed_mm_per_s: f64,
    /// Static-friction band, mm: commands within this distance of the
    /// current position do not move the shaft.
    pub stiction_band_mm: f64,
    /// Position feedback resolution, mm (0 disables quantization).
    pub pos_quantization_mm: f64,
    /// Position feedback noise std dev, mm.
    pub pos_noise_sigma_mm: f64,
}

impl Default for ActuatorParams {
    fn default() -> Self {
        Self {
            stroke_mm: 20.0,
            max_force_n: 18.0,
            max_speed_mm_per_s: 10.0,
            stiction_band_mm: 0.2,
            pos_quantization_mm: 0.02,
            pos_noise_sigma_mm: 0.0,
        }
    }
}

impl ActuatorParams {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.stroke_mm > 0.0) {
            v.push("actuator.stroke_mm must be > 0".into());
        }
        if !(self.max_force_n > 0.0) {
            v.push("actuator.max_force_n must be > 0".into());
        }
        if !(self.max_speed_mm_per_s > 0.0) {
            v.push("actuator.max_speed_mm_per_s must be > 0".into());
        }
        if self.stiction_band_mm < 0.0 {
            v.push("actuator.stiction_band_mm must be >= 0".into());
        }
        if self.pos_quantization_mm < 0.0 {
            v.push("actuator.pos_quantization_mm must be >= 0".into());
        }
        if self.pos_noise_sigma_mm < 0.0 {
            v.push("actuator.pos_noise_sigma_mm must be >= 0".into());
        }
        v
    }
}

/// True shaft state. `stalled` is recomputed every step: it reports
/// whether the last step's extension attempt was blocked by the load.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ActuatorState {
    pub position_mm: f64,
    pub stalled: bool,
}

/// Advance the actuator one control period.
///
/// * Commands within the stiction band leave the position untouched.
/// * Otherwise the position slews toward the command by at most
///   `max_speed * dt`.
/// * Extension against a load at or beyond `max_force_n` halts at the
///   current position with `stalled = true`. Retraction always proceeds.
pub fn actuator_step(
    params: &ActuatorParams,
    state: ActuatorState,
    command_mm: f64,
    load_force_n: f64,
    dt_s: f64,
) -> Result<ActuatorState, ActuatorError> {
    if dt_s <= 0.0 {
        return Err(ActuatorError::NonpositiveDt { dt: dt_s });
    }
    if command_mm < 0.0 || command_mm > params.stroke_mm {
        return Err(ActuatorError::CommandOutOfRange {
            command: command_mm,
            stroke: params.stroke_mm,
        });
    }
    let gap = command_mm - state.position_mm;
    if gap.abs() <= params.stiction_band_mm {
        return Ok(ActuatorState {
            position_mm: state.position_mm,
            stalled: false,
        });
    }
    let extending = gap > 0.0;
    if extending && load_force_n >= params.max_force_n {
        return Ok(ActuatorState {
            position_mm: state.position_mm,
            stalled: true,
        });
    }
    let max_step = params.max_speed_mm_per_s * dt_s;
    let step = gap.abs().min(max_step) * gap.signum();
    let position = (state.position_mm + step).clamp(0.0, params.stroke_mm);
    Ok(ActuatorState {
        position_mm: position,
        stalled: false,
    })
}

/// Measured position: the true position quantized to the feedback
/// resolution, plus optional Gaussian noise, clamped to the stroke.
pub fn position_feedback(
    params: &ActuatorParams,
    state: &ActuatorState,
    rng: Option<&mut SimRng>,
) -> f64 {
    let mut pos = state.position_mm;
    if params.pos_quantization_mm > 0.0 {
        pos = (pos / params.pos_quantization_mm).round() * params.pos_quantization_mm;
    }
    if let Some(rng) = rng {
        pos += rng.normal(params.pos_noise_sigma_mm);
    }
    pos.clamp(0.0, params.stroke_mm)
}
