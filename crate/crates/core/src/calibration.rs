//! Device characterization: force-displacement sweeps, least-squares
//! stiffness identification, and two-point angle-sensor calibration.
//!
//! A sweep steps the actuator through increasing extensions against a
//! contact model and records the settled (position, force) pairs; the fit
//! recovers the contact stiffness and offset from the samples above a
//! contact threshold. Both halves also run standalone on CSV data via the
//! CLI.

use thiserror::Error;

use crate::actuator::{actuator_step, position_feedback, ActuatorParams, ActuatorState};
use crate::contact::{contact_force, force_sensor_read, ForceSensorParams, SkinModel};
use crate::rng::SimRng;
use crate::sensing::{resistance_from_code, FlexSensorParams};

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("sweep protocol: {msg}")]
    InvalidProtocol { msg: String },
}

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("need at least 2 samples above the contact threshold, found {found}")]
    InsufficientContactSamples { found: usize },
    #[error("degenerate sweep data: fitted slope {slope} N/mm is not positive")]
    NonpositiveSlope { slope: f64 },
    #[error("degenerate sweep data: all contact samples at the same extension")]
    ZeroExtensionSpread,
}

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("calibration points have identical ADC codes ({code})")]
    DegenerateCodes { code: u16 },
    #[error("calibration points have identical angles ({angle} deg)")]
    DegenerateAngles { angle: f64 },
    #[error("ADC code {code} maps outside the divider model")]
    CodeOutOfModel { code: u16 },
    #[error("calibration implies an invalid sensor: {msg}")]
    InvalidResult { msg: String },
}

/// How a sweep is driven: target spacing, travel, and per-point settle.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepProtocol {
    pub x_max_mm: f64,
    pub step_mm: f64,
    pub settle_ticks: u32,
    pub rate_hz: f64,
}

impl Default for SweepProtocol {
    fn default() -> Self {
        Self {
            x_max_mm: 18.0,
            step_mm: 1.0,
            settle_ticks: 100, // 1 s at the default 100 Hz loop rate
            rate_hz: 100.0,
        }
    }
}

/// Settled (extension mm, force N) samples from one sweep, extensions
/// strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub site_name: String,
    pub samples: Vec<(f64, f64)>,
    /// True when the sweep stopped early because the actuator stalled.
    pub truncated_by_stall: bool,
}

/// Step the actuator through `0, step, 2*step, ..., x_max`, wait
/// `settle_ticks` per target, and record the measured position and force.
/// A stall records the stall point and truncates the sweep; it is data,
/// not an error.
pub fn sweep(
    actuator: &ActuatorParams,
    skin: &SkinModel,
    force_sensor: &ForceSensorParams,
    protocol: &SweepProtocol,
    mut rng: Option<&mut SimRng>,
) -> Result<SweepResult, SweepError> {
    if !(protocol.step_mm > 0.0) {
        return Err(SweepError::InvalidProtocol {
            msg: format!("step must be > 0, got {}", protocol.step_mm),
        });
    }
    if protocol.x_max_mm < 0.0 || protocol.x_max_mm > actuator.stroke_mm {
        return Err(SweepError::InvalidProtocol {
            msg: format!(
                "x_max {} mm outside [0, stroke {} mm]",
                protocol.x_max_mm, actuator.stroke_mm
            ),
        });
    }
    if protocol.settle_ticks == 0 {
        return Err(SweepError::InvalidProtocol {
            msg: "settle_ticks must be >= 1".into(),
        });
    }
    if !(protocol.rate_hz > 0.0) {
        return Err(SweepError::InvalidProtocol {
            msg: format!("rate must be > 0, got {}", protocol.rate_hz),
        });
    }

    let mut targets = Vec::new();
    let mut k = 0u64;
    loop {
        let x = k as f64 * protocol.step_mm;
        if x >= protocol.x_max_mm - 1e-12 {
            break;
        }
        targets.push(x);
        k += 1;
    }
    targets.push(protocol.x_max_mm);

    let dt = 1.0 / protocol.rate_hz;
    let mut state = ActuatorState::default();
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(targets.len());
    let mut truncated = false;

    for target in targets {
        for _ in 0..protocol.settle_ticks {
            let load = contact_force(skin, state.position_mm);
            state = actuator_step(actuator, state, target, load, dt)
                .expect("sweep targets stay inside the stroke");
        }
        let x = position_feedback(actuator, &state, rng.as_deref_mut());
        let f = force_sensor_read(
            force_sensor,
            contact_force(skin, state.position_mm),
            rng.as_deref_mut(),
        );
        // Keep extensions strictly increasing; a repeat means the shaft
        // is no longer advancing.
        if samples.last().is_none_or(|last| x > last.0) {
            samples.push((x, f));
        }
        if state.stalled {
            truncated = true;
            break;
        }
    }

    Ok(SweepResult {
        site_name: skin.site_name.clone(),
        samples,
        truncated_by_stall: truncated,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOptions {
    /// Samples at or below this force are treated as pre-contact and
    /// excluded from the line fit.
    pub contact_threshold_n: f64,
    /// Fit `F = a*x` instead of `F = a*x + b`.
    pub through_origin: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            contact_threshold_n: 0.05,
            through_origin: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StiffnessFit {
    pub stiffness_n_per_m: f64,
    pub contact_offset_mm: f64,
    pub residual_rms_n: f64,
    pub n_contact_samples: usize,
}

/// Ordinary least squares over the contact samples of a sweep.
///
/// Free-intercept form: `F = a*x + b`, stiffness `a` (reported in N/m),
/// contact offset `-b/a` clamped at zero. The through-origin option pins
/// `b = 0`.
pub fn fit_stiffness(sweep: &SweepResult, options: &FitOptions) -> Result<StiffnessFit, FitError> {
    let pts: Vec<(f64, f64)> = sweep
        .samples
        .iter()
        .copied()
        .filter(|&(_, f)| f > options.contact_threshold_n)
        .collect();
    if pts.len() < 2 {
        return Err(FitError::InsufficientContactSamples { found: pts.len() });
    }
    let n = pts.len() as f64;
    let (slope, intercept) = if options.through_origin {
        let sxx: f64 = pts.iter().map(|&(x, _)| x * x).sum();
        let sxy: f64 = pts.iter().map(|&(x, y)| x * y).sum();
        if sxx == 0.0 {
            return Err(FitError::ZeroExtensionSpread);
        }
        (sxy / sxx, 0.0)
    } else {
        let x_mean: f64 = pts.iter().map(|&(x, _)| x).sum::<f64>() / n;
        let y_mean: f64 = pts.iter().map(|&(_, y)| y).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|&(x, _)| (x - x_mean).powi(2)).sum();
        let sxy: f64 = pts
            .iter()
            .map(|&(x, y)| (x - x_mean) * (y - y_mean))
            .sum();
        if sxx == 0.0 {
            return Err(FitError::ZeroExtensionSpread);
        }
        let a = sxy / sxx;
        (a, y_mean - a * x_mean)
    };
    if slope <= 0.0 {
        return Err(FitError::NonpositiveSlope { slope });
    }
    let residual_rms = (pts
        .iter()
        .map(|&(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(StiffnessFit {
        stiffness_n_per_m: slope * 1000.0,
        contact_offset_mm: (-intercept / slope).max(0.0),
        residual_rms_n: residual_rms,
        n_contact_samples: pts.len(),
    })
}

/// Re-solve the linear resistance-angle law from two (ADC code, known
/// angle) readings, typically taken at full extension and one flexed
/// reference pose. Returns the sensor parameters with `r_extended_ohm` /
/// `r_flexed_ohm` updated so `angle_estimate` reproduces both points;
/// wiring, window and ADC settings are hardware and stay untouched.
pub fn two_point_angle_cal(
    params: &FlexSensorParams,
    p1: (u16, f64),
    p2: (u16, f64),
) -> Result<FlexSensorParams, CalibrationError> {
    let (code1, theta1) = p1;
    let (code2, theta2) = p2;
    if code1 == code2 {
        return Err(CalibrationError::DegenerateCodes { code: code1 });
    }
    if theta1 == theta2 {
        return Err(CalibrationError::DegenerateAngles { angle: theta1 });
    }
    let r1 = resistance_from_code(params, code1)
        .ok_or(CalibrationError::CodeOutOfModel { code: code1 })?;
    let r2 = resistance_from_code(params, code2)
        .ok_or(CalibrationError::CodeOutOfModel { code: code2 })?;
    let slope = (r2 - r1) / (theta2 - theta1);
    let mut cal = params.clone();
    cal.r_extended_ohm = r1 + slope * (180.0 - theta1);
    cal.r_flexed_ohm = r1 + slope * (params.theta_min_deg - theta1);
    let violations = cal.violations();
    if !violations.is_empty() {
        return Err(CalibrationError::InvalidResult {
            msg: violations.join("; "),
        });
    }
    Ok(cal)
}
