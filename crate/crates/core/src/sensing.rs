//! Elbow-angle sensing chain: resistive flex sensor, voltage divider,
//! analog front end, ADC, the inverse estimator, and the telemetry filter.
//!
//! The forward chain models the hardware; `angle_estimate` is the firmware
//! side that inverts it. Both share the same linear resistance-vs-angle law
//! so a noise-free round trip is exact up to ADC quantization.

use std::collections::VecDeque;

use thiserror::Error;

use crate::rng::SimRng;

/// Elbow angle in degrees. 180 is full extension; smaller values flex.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct AngleDeg(pub f64);

impl AngleDeg {
    pub fn deg(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SensingError {
    #[error("angle {angle} deg outside sensor range [{min}, 180]")]
    AngleOutOfRange { angle: f64, min: f64 },
    #[error("adc input {value} outside [0, 1]")]
    AdcInputOutOfRange { value: f64 },
}

/// Flex sensor, divider wiring, front end and ADC in one parameter block.
///
/// The divider tap is measured across the fixed resistor, so the tap
/// voltage rises with extension (resistance falls as the arm straightens).
/// `afe_lo`/`afe_hi` describe the analog front end: the window of the tap
/// voltage (as a fraction of supply) that is scaled onto the full ADC
/// range. The default window is matched to the divider output at the two
/// resistance endpoints, so the ADC resolution is spent on the signal
/// instead of on dead rail. Set `afe_lo = 0`, `afe_hi = 1` to model wiring
/// the tap straight into the ADC.
#[derive(Clone, Debug, PartialEq)]
pub struct FlexSensorParams {
    /// Resistance at 180 deg (arm straight), ohms.
    pub r_extended_ohm: f64,
    /// Resistance at `theta_min_deg` (maximum modeled flexion), ohms.
    pub r_flexed_ohm: f64,
    /// Most flexed angle the sensor model covers, degrees.
    pub theta_min_deg: f64,
    /// Fixed divider resistor, ohms.
    pub r_fixed_ohm: f64,
    /// Supply voltage, volts. The chain works in fractions of supply, so
    /// this is metadata for reporting.
    pub v_supply: f64,
    /// ADC resolution in bits (8..=16).
    pub adc_bits: u32,
    /// Std dev of the resistance noise, ohms.
    pub noise_sigma_ohm: f64,
    /// Front-end window low edge (fraction of supply mapped to code 0).
    pub afe_lo: f64,
    /// Front-end window high edge (fraction of supply mapped to full scale).
    pub afe_hi: f64,
}

impl FlexSensorParams {
    /// Defaults with the front-end window matched to the divider output
    /// range of the default sensor.
    pub fn matched_defaults() -> Self {
        let mut p = Self {
            r_extended_ohm: 20_000.0,
            r_flexed_ohm: 40_000.0,
            theta_min_deg: 30.0,
            r_fixed_ohm: 42_000.0,
            v_supply: 5.0,
            adc_bits: 10,
            noise_sigma_ohm: 400.0,
            afe_lo: 0.0,
            afe_hi: 1.0,
        };
        p.match_afe_window();
        p
    }

    /// Recompute the front-end window so the divider output at the two
    /// resistance endpoints spans the full ADC range.
    pub fn match_afe_window(&mut self) {
        self.afe_lo = divider_voltage(self, self.r_flexed_ohm);
        self.afe_hi = divider_voltage(self, self.r_extended_ohm);
    }

    pub fn max_code(&self) -> u16 {
        ((1u32 << self.adc_bits) - 1) as u16
    }

    /// ADC codes produced at the two modeled resistance endpoints
    /// (flexion rail, extension rail). Codes at or beyond a rail estimate
    /// as exactly `theta_min_deg` / 180.
    pub fn rail_codes(&self) -> (u16, u16) {
        let flex = code_for_resistance(self, self.r_flexed_ohm);
        let ext = code_for_resistance(self, self.r_extended_ohm);
        (flex, ext)
    }

    /// Invariant check; returns every violation found.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.r_extended_ohm > 0.0) {
            v.push("sensor.r_extended_ohm must be > 0".into());
        }
        if !(self.r_flexed_ohm > self.r_extended_ohm) {
            v.push("sensor.r_flexed_ohm must exceed r_extended_ohm (resistance rises with bend)".into());
        }
        if !(self.theta_min_deg > 0.0 && self.theta_min_deg < 180.0) {
            v.push("sensor.theta_min_deg must lie in (0, 180)".into());
        }
        if !(self.r_fixed_ohm > 0.0) {
            v.push("sensor.r_fixed_ohm must be > 0".into());
        }
        if !(self.v_supply > 0.0) {
            v.push("sensor.v_supply must be > 0".into());
        }
        if !(8..=16).contains(&self.adc_bits) {
            v.push("sensor.adc_bits must lie in [8, 16]".into());
        }
        if self.noise_sigma_ohm < 0.0 {
            v.push("sensor.noise_sigma_ohm must be >= 0".into());
        }
        if !(self.afe_lo >= 0.0 && self.afe_lo < self.afe_hi && self.afe_hi <= 1.0) {
            v.push("sensor front-end window must satisfy 0 <= afe_lo < afe_hi <= 1".into());
        }
        v
    }
}

impl Default for FlexSensorParams {
    fn default() -> Self {
        Self::matched_defaults()
    }
}

/// Sensor resistance at the given elbow angle.
///
/// Linear law: `r_extended_ohm` at 180 deg down to `r_flexed_ohm` at
/// `theta_min_deg`. With a noise source attached, a zero-mean Gaussian
/// draw of `noise_sigma_ohm` is added and the result is kept inside
/// `[0.5 * r_extended, 1.5 * r_flexed]`.
pub fn flex_resistance(
    params: &FlexSensorParams,
    angle: AngleDeg,
    rng: Option<&mut SimRng>,
) -> Result<f64, SensingError> {
    let theta = angle.deg();
    if theta < params.theta_min_deg || theta > 180.0 {
        return Err(SensingError::AngleOutOfRange {
            angle: theta,
            min: params.theta_min_deg,
        });
    }
    let span = 180.0 - params.theta_min_deg;
    let bend = (180.0 - theta) / span;
    let mut r = params.r_extended_ohm + (params.r_flexed_ohm - params.r_extended_ohm) * bend;
    if let Some(rng) = rng {
        r += rng.normal(params.noise_sigma_ohm);
        r = r.clamp(0.5 * params.r_extended_ohm, 1.5 * params.r_flexed_ohm);
    }
    Ok(r)
}

/// Divider tap voltage as a fraction of supply, measured across the fixed
/// resistor: `r_fixed / (r_flex + r_fixed)`. Strictly decreasing in
/// `r_flex`, so the tap rises as the arm extends.
pub fn divider_voltage(params: &FlexSensorParams, r_flex_ohm: f64) -> f64 {
    assert!(r_flex_ohm > 0.0, "divider requires positive resistance");
    params.r_fixed_ohm / (r_flex_ohm + params.r_fixed_ohm)
}

/// Analog front end: maps the window `[afe_lo, afe_hi]` of the tap voltage
/// onto `[0, 1]` of the ADC input, saturating outside the window.
pub fn afe_normalize(params: &FlexSensorParams, v_norm_supply: f64) -> f64 {
    ((v_norm_supply - params.afe_lo) / (params.afe_hi - params.afe_lo)).clamp(0.0, 1.0)
}

/// Quantize a normalized ADC input to a code: `round(v * (2^bits - 1))`.
pub fn adc_sample(params: &FlexSensorParams, v_norm: f64) -> Result<u16, SensingError> {
    if !(0.0..=1.0).contains(&v_norm) {
        return Err(SensingError::AdcInputOutOfRange { value: v_norm });
    }
    let max = params.max_code() as f64;
    Ok((v_norm * max).round() as u16)
}

fn code_for_resistance(params: &FlexSensorParams, r_ohm: f64) -> u16 {
    let v = divider_voltage(params, r_ohm);
    let frac = afe_normalize(params, v);
    (frac * params.max_code() as f64).round() as u16
}

/// One noise-free pass through the full forward chain, angle to ADC code.
pub fn sense_code(
    params: &FlexSensorParams,
    angle: AngleDeg,
    rng: Option<&mut SimRng>,
) -> Result<u16, SensingError> {
    let r = flex_resistance(params, angle, rng)?;
    let v = divider_voltage(params, r);
    adc_sample(params, afe_normalize(params, v))
}

/// Divider resistance implied by an ADC code, inverting front end and
/// divider. `None` when the code maps to a non-positive tap voltage
/// (resistance unbounded).
pub fn resistance_from_code(params: &FlexSensorParams, code: u16) -> Option<f64> {
    let frac = code as f64 / params.max_code() as f64;
    let v = params.afe_lo + frac * (params.afe_hi - params.afe_lo);
    if v <= f64::EPSILON {
        return None;
    }
    Some(params.r_fixed_ohm * (1.0 - v) / v)
}

/// Invert the ADC code back to an angle estimate.
///
/// Codes at or beyond the rail codes map to exactly 180 / `theta_min_deg`;
/// the comparison happens in integer code space so the endpoints are exact
/// rather than within rounding distance. Between the rails the chain is
/// inverted analytically and the result clamped to the modeled range.
pub fn angle_estimate(params: &FlexSensorParams, code: u16) -> AngleDeg {
    let (code_flex, code_ext) = params.rail_codes();
    if code >= code_ext {
        return AngleDeg(180.0);
    }
    if code <= code_flex {
        return AngleDeg(params.theta_min_deg);
    }
    let Some(r) = resistance_from_code(params, code) else {
        return AngleDeg(params.theta_min_deg);
    };
    let bend = (r - params.r_extended_ohm) / (params.r_flexed_ohm - params.r_extended_ohm);
    let span = 180.0 - params.theta_min_deg;
    AngleDeg((180.0 - bend * span).clamp(params.theta_min_deg, 180.0))
}

/// Telemetry filter selection.
#[derive(Clone, Debug, PartialEq)]
pub enum FilterSpec {
    /// Mean of the last `window` samples (fewer during warm-up).
    MovingAverage { window: usize },
    /// Discrete one-pole low-pass with the given cutoff.
    FirstOrderLowPass { cutoff_hz: f64 },
}

impl FilterSpec {
    /// Invariant check against the loop rate the filter will run at.
    pub fn violations(&self, rate_hz: f64) -> Vec<String> {
        let mut v = Vec::new();
        match *self {
            FilterSpec::MovingAverage { window } => {
                if window < 1 {
                    v.push("sensor.filter_window must be >= 1".into());
                }
            }
            FilterSpec::FirstOrderLowPass { cutoff_hz } => {
                if !(cutoff_hz > 0.0) {
                    v.push("sensor.filter_cutoff_hz must be > 0".into());
                } else if cutoff_hz >= rate_hz / 2.0 {
                    v.push(format!(
                        "sensor.filter_cutoff_hz must be below the Nyquist rate {} Hz",
                        rate_hz / 2.0
                    ));
                }
            }
        }
        v
    }

    /// Worst-case group delay in seconds, used by shape checks on the
    /// filtered trace.
    pub fn max_lag_s(&self, rate_hz: f64) -> f64 {
        match *self {
            FilterSpec::MovingAverage { window } => window as f64 / rate_hz,
            FilterSpec::FirstOrderLowPass { cutoff_hz } => {
                1.0 / (2.0 * std::f64::consts::PI * cutoff_hz)
            }
        }
    }
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec::MovingAverage { window: 5 }
    }
}

/// Running state for a `FilterSpec`; one instance per simulated loop.
#[derive(Clone, Debug)]
pub enum FilterState {
    MovingAverage { window: usize, buf: VecDeque<f64> },
    FirstOrderLowPass { alpha: f64, y: Option<f64> },
}

impl FilterState {
    pub fn new(spec: &FilterSpec, rate_hz: f64) -> Self {
        match *spec {
            FilterSpec::MovingAverage { window } => FilterState::MovingAverage {
                window: window.max(1),
                buf: VecDeque::with_capacity(window.max(1)),
            },
            FilterSpec::FirstOrderLowPass { cutoff_hz } => {
                let dt = 1.0 / rate_hz;
                let tau = 1.0 / (2.0 * std::f64::consts::PI * cutoff_hz);
                FilterState::FirstOrderLowPass {
                    alpha: dt / (tau + dt),
                    y: None,
                }
            }
        }
    }

    /// Advance the filter one sample and return the filtered value.
    ///
    /// A constant input stream reproduces itself exactly: the moving
    /// average short-circuits when every buffered sample is identical
    /// (summing would otherwise round), and the one-pole form leaves its
    /// state untouched when `x == y`.
    pub fn step(&mut self, sample: AngleDeg) -> AngleDeg {
        let x = sample.deg();
        let y = match self {
            FilterState::MovingAverage { window, buf } => {
                if buf.len() == *window {
                    buf.pop_front();
                }
                buf.push_back(x);
                let first = buf[0];
                if buf.iter().all(|&v| v == first) {
                    first
                } else {
                    buf.iter().sum::<f64>() / buf.len() as f64
                }
            }
            FilterState::FirstOrderLowPass { alpha, y } => {
                let prev = y.unwrap_or(x);
                let next = prev + *alpha * (x - prev);
                *y = Some(next);
                next
            }
        };
        AngleDeg(y)
    }
}
