//! The firmware-equivalent fixed-rate loop.
//!
//! Each tick runs the full pipeline in a fixed order: sense the flex
//! sensor, digitize, estimate the angle, filter, map to a displacement
//! command, apply the safety clamp, step the actuator against the contact
//! load, then read back position and force for the log. The same order is
//! what `replay_check` re-executes, so it is part of the observable
//! contract.

use crate::actuator::{actuator_step, position_feedback, ActuatorState};
use crate::config::{ConfigError, DeviceConfig};
use crate::contact::{contact_force, force_sensor_read, SkinModel};
use crate::mapping::command_from_angle;
use crate::rng::SimRng;
use crate::sensing::{
    adc_sample, afe_normalize, angle_estimate, divider_voltage, flex_resistance, AngleDeg,
    FilterState,
};
use crate::trace::TraceSpec;

/// Loop scheduling, safety and reproducibility settings.
#[derive(Clone, Debug, PartialEq)]
pub struct LoopConfig {
    pub rate_hz: f64,
    pub duration_s: f64,
    /// Model-based command clamp: commands are reduced so the predicted
    /// contact force stays at or below this limit.
    pub safety_force_limit_n: f64,
    /// Set false to run without the clamp (characterization only).
    pub safety_enabled: bool,
    pub seed: u64,
    pub noise_enabled: bool,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            rate_hz: 100.0,
            duration_s: 10.0,
            safety_force_limit_n: 18.0,
            safety_enabled: true,
            seed: 42,
            noise_enabled: true,
        }
    }
}

impl LoopConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.rate_hz > 0.0) {
            v.push("loop.rate_hz must be > 0".into());
        }
        if self.duration_s < 0.0 {
            v.push("loop.duration_s must be >= 0".into());
        }
        if self.safety_enabled && !(self.safety_force_limit_n > 0.0) {
            v.push("loop.safety_force_limit_n must be > 0".into());
        }
        v
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.rate_hz
    }

    /// Number of records a run produces: `ceil(rate * duration)`, with a
    /// guard so e.g. 30 Hz * 0.1 s counts as 3 ticks, not 4.
    pub fn record_count(&self) -> u64 {
        let n = self.rate_hz * self.duration_s;
        let rounded = n.round();
        if (n - rounded).abs() < 1e-9 {
            rounded as u64
        } else {
            n.ceil() as u64
        }
    }
}

/// One control tick of telemetry.
#[derive(Clone, Debug, PartialEq)]
pub struct LogRecord {
    pub tick: u64,
    /// `tick / rate` exactly.
    pub t_s: f64,
    pub angle_raw_deg: f64,
    pub angle_filt_deg: f64,
    pub cmd_mm: f64,
    pub pos_mm: f64,
    pub force_n: f64,
    pub stalled: bool,
}

/// Largest command whose predicted contact force stays at or below
/// `limit_n` on the given skin. Idempotent: clamping twice changes
/// nothing.
pub fn safety_clamp(command_mm: f64, skin: &SkinModel, limit_n: f64) -> f64 {
    let threshold_mm = skin.contact_offset_mm + limit_n * 1000.0 / skin.stiffness_n_per_m;
    command_mm.min(threshold_mm)
}

/// A single device simulation advanced tick by tick.
///
/// All state lives in the struct; two instances with the same config
/// produce bit-identical record streams. Noise draws happen in a fixed
/// order per tick (flex sensor, position feedback, force sensor) so a
/// replay can re-derive them from the seed.
pub struct Simulation {
    cfg: DeviceConfig,
    filter: FilterState,
    actuator: ActuatorState,
    rng: SimRng,
    tick: u64,
}

impl Simulation {
    pub fn new(cfg: DeviceConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let filter = FilterState::new(&cfg.filter, cfg.loop_cfg.rate_hz);
        let rng = SimRng::new(cfg.loop_cfg.seed);
        Ok(Self {
            cfg,
            filter,
            actuator: ActuatorState::default(),
            rng,
            tick: 0,
        })
    }

    pub fn config(&self) -> &DeviceConfig {
        &self.cfg
    }

    pub fn actuator_state(&self) -> ActuatorState {
        self.actuator
    }

    /// Run one control period with the given true elbow angle.
    pub fn tick(&mut self, true_angle: AngleDeg) -> LogRecord {
        let cfg = &self.cfg;
        let loop_cfg = &cfg.loop_cfg;
        let noise = loop_cfg.noise_enabled;

        // Sense. The physical sensor saturates outside its modeled range,
        // so the true angle is clamped at the sensing boundary.
        let theta = true_angle.deg().clamp(cfg.sensor.theta_min_deg, 180.0);
        let r = flex_resistance(
            &cfg.sensor,
            AngleDeg(theta),
            noise.then_some(&mut self.rng),
        )
        .expect("angle clamped into sensor range");
        let v = divider_voltage(&cfg.sensor, r);
        let code = adc_sample(&cfg.sensor, afe_normalize(&cfg.sensor, v))
            .expect("front end clamps into [0, 1]");
        let angle_raw = angle_estimate(&cfg.sensor, code);

        // Filter and map.
        let angle_filt = self.filter.step(angle_raw);
        let mut cmd = command_from_angle(&cfg.mapping, angle_filt);
        if loop_cfg.safety_enabled {
            cmd = safety_clamp(cmd, &cfg.skin, loop_cfg.safety_force_limit_n);
        }
        cmd = cmd.min(cfg.actuator.stroke_mm);

        // Act against the contact load at the current position.
        let load = contact_force(&cfg.skin, self.actuator.position_mm);
        self.actuator = actuator_step(&cfg.actuator, self.actuator, cmd, load, loop_cfg.dt())
            .expect("command clamped into stroke");

        // Read back.
        let pos_meas = position_feedback(
            &cfg.actuator,
            &self.actuator,
            noise.then_some(&mut self.rng),
        );
        let f_true = contact_force(&cfg.skin, self.actuator.position_mm);
        let f_meas = force_sensor_read(
            &cfg.force_sensor,
            f_true,
            noise.then_some(&mut self.rng),
        );

        let tick = self.tick;
        self.tick += 1;
        LogRecord {
            tick,
            t_s: tick as f64 / loop_cfg.rate_hz,
            angle_raw_deg: angle_raw.deg(),
            angle_filt_deg: angle_filt.deg(),
            cmd_mm: cmd,
            pos_mm: pos_meas,
            force_n: f_meas,
            stalled: self.actuator.stalled,
        }
    }
}

/// Run a full trace: `ceil(rate * duration)` ticks sampled at `k / rate`.
pub fn run(cfg: &DeviceConfig, trace: &TraceSpec) -> Result<Vec<LogRecord>, ConfigError> {
    trace.validate().map_err(|e| ConfigError::Invalid {
        violations: e.to_string(),
    })?;
    let mut sim = Simulation::new(cfg.clone())?;
    let n = cfg.loop_cfg.record_count();
    let mut records = Vec::with_capacity(n as usize);
    for k in 0..n {
        let t = k as f64 / cfg.loop_cfg.rate_hz;
        records.push(sim.tick(AngleDeg(trace.sample(t))));
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapping::MappingKind;
    use approx::assert_abs_diff_eq;

    fn quiet_config() -> DeviceConfig {
        let mut cfg = DeviceConfig::default();
        cfg.loop_cfg.noise_enabled = false;
        cfg
    }

    fn gain_of(cfg: &DeviceConfig) -> f64 {
        match cfg.mapping.kind {
            MappingKind::ConstantGain {
                gain_mm_per_deg, ..
            } => gain_mm_per_deg,
            _ => panic!("test expects constant gain"),
        }
    }

    #[test]
    fn full_extension_is_exactly_idle() {
        let cfg = quiet_config();
        let records = run(&cfg, &TraceSpec::Hold { angle_deg: 180.0 }).unwrap();
        assert_eq!(records.len(), 1000);
        for r in &records {
            assert_eq!(r.cmd_mm, 0.0, "tick {}", r.tick);
            assert_eq!(r.force_n, 0.0, "tick {}", r.tick);
            assert_eq!(r.pos_mm, 0.0);
            assert!(!r.stalled);
        }
    }

    #[test]
    fn full_flexion_converges_near_max_command() {
        let cfg = quiet_config();
        let records = run(&cfg, &TraceSpec::Hold { angle_deg: 30.0 }).unwrap();
        let last = records.last().unwrap();
        // Command is 0.123 * 150 = 18.45 mm; stiction can leave the shaft
        // up to one band short.
        assert_abs_diff_eq!(last.cmd_mm, 18.45, epsilon = 1e-9);
        let sim_pos = last.pos_mm;
        assert!(
            (18.45 - sim_pos).abs() <= cfg.actuator.stiction_band_mm + 1e-9,
            "position {sim_pos}"
        );
        let expected_force = 465.6 / 1000.0 * 18.45;
        assert!(
            (last.force_n - expected_force).abs()
                <= 465.6 / 1000.0 * cfg.actuator.stiction_band_mm + 1e-9,
            "force {} vs {expected_force}",
            last.force_n
        );
    }

    #[test]
    fn hand_site_stays_under_safety_limit() {
        let mut cfg = quiet_config();
        cfg.skin = SkinModel::hand();
        let records = run(&cfg, &TraceSpec::Hold { angle_deg: 30.0 }).unwrap();
        let max_force = records.iter().map(|r| r.force_n).fold(0.0, f64::max);
        assert!(max_force <= 18.0 + 1e-9, "max force {max_force}");
        // Unclamped command would predict 8.1154 * 18.45 = 149.7 N.
        let last = records.last().unwrap();
        assert_abs_diff_eq!(last.cmd_mm, 18.0 * 1000.0 / 8115.4, epsilon = 1e-9);
    }

    #[test]
    fn stall_flagged_when_clamp_disabled() {
        let mut cfg = quiet_config();
        cfg.skin = SkinModel::hand();
        cfg.loop_cfg.safety_enabled = false;
        let records = run(&cfg, &TraceSpec::Hold { angle_deg: 30.0 }).unwrap();
        let last = records.last().unwrap();
        assert!(last.stalled, "expected a force stall at the hand site");
        assert!(last.force_n >= 18.0 - 1e-9);
        // Overshoot is bounded by one slew step of force.
        let eps = 8115.4 / 1000.0 * cfg.actuator.max_speed_mm_per_s * cfg.loop_cfg.dt();
        assert!(last.force_n <= 18.0 + eps + 1e-9);
    }

    #[test]
    fn safety_clamp_values() {
        assert_abs_diff_eq!(
            safety_clamp(10.0, &SkinModel::forearm(), 18.0),
            10.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            safety_clamp(10.0, &SkinModel::hand(), 18.0),
            18.0 * 1000.0 / 8115.4, // 2.218 mm
            epsilon = 1e-9
        );
        assert_eq!(safety_clamp(7.5, &SkinModel::forearm(), 1e9), 7.5);
        // Idempotent.
        let once = safety_clamp(10.0, &SkinModel::hand(), 18.0);
        assert_eq!(safety_clamp(once, &SkinModel::hand(), 18.0), once);
    }

    #[test]
    fn record_count_and_timestamps() {
        let cfg = quiet_config();
        let records = run(&cfg, &TraceSpec::Hold { angle_deg: 120.0 }).unwrap();
        assert_eq!(records.len(), 1000); // 100 Hz * 10 s
        for (k, r) in records.iter().enumerate() {
            assert_eq!(r.tick, k as u64);
            assert_eq!(r.t_s, k as f64 / 100.0);
        }
        let mut short = quiet_config();
        short.loop_cfg.rate_hz = 30.0;
        short.loop_cfg.duration_s = 0.1;
        assert_eq!(short.loop_cfg.record_count(), 3);
        short.loop_cfg.duration_s = 0.11;
        assert_eq!(short.loop_cfg.record_count(), 4);
        short.loop_cfg.duration_s = 0.0;
        assert_eq!(short.loop_cfg.record_count(), 0);
    }

    #[test]
    fn identical_seeds_give_identical_records() {
        let mut cfg = DeviceConfig::default();
        cfg.loop_cfg.duration_s = 2.0;
        let trace = TraceSpec::Sine {
            center_deg: 105.0,
            amplitude_deg: 75.0,
            frequency_hz: 0.25,
        };
        let a = run(&cfg, &trace).unwrap();
        let b = run(&cfg, &trace).unwrap();
        assert_eq!(a, b);
        cfg.loop_cfg.seed += 1;
        let c = run(&cfg, &trace).unwrap();
        assert_ne!(a, c, "a different seed must change the noisy columns");
    }

    #[test]
    fn noise_ablation_reaches_command_exactly() {
        let mut cfg = quiet_config();
        cfg.actuator.stiction_band_mm = 0.0;
        cfg.actuator.pos_quantization_mm = 0.0;
        let records = run(&cfg, &TraceSpec::Hold { angle_deg: 100.0 }).unwrap();
        let last = records.last().unwrap();
        assert_eq!(
            last.pos_mm, last.cmd_mm,
            "steady-state position must equal the command exactly"
        );
    }

    #[test]
    fn pipeline_order_is_observable_in_the_log() {
        let cfg = quiet_config();
        let gain = gain_of(&cfg);
        let stroke = cfg.mapping.stroke_limit_mm;
        let trace = TraceSpec::Ramp {
            from_deg: 180.0,
            to_deg: 30.0,
            duration_s: 5.0,
        };
        let records = run(&cfg, &trace).unwrap();
        for r in records {
            let expect = (gain * (180.0 - r.angle_filt_deg)).clamp(0.0, stroke);
            // Forearm site: the safety clamp threshold (38.7 mm) is beyond
            // the stroke, so the mapping output is what reaches the log.
            assert_eq!(r.cmd_mm, expect, "tick {}", r.tick);
        }
    }

    #[test]
    fn sine_force_is_periodic_with_max_at_flexion() {
        let mut cfg = quiet_config();
        cfg.loop_cfg.duration_s = 20.0;
        let trace = TraceSpec::Sine {
            center_deg: 105.0,
            amplitude_deg: 75.0,
            frequency_hz: 0.25,
        };
        let records = run(&cfg, &trace).unwrap();
        // Skip the first period while the actuator catches up.
        let settled: Vec<&LogRecord> = records.iter().filter(|r| r.t_s >= 4.0).collect();
        let (mut t_fmax, mut fmax) = (0.0, -1.0);
        let (mut t_amin, mut amin) = (0.0, f64::INFINITY);
        for r in &settled {
            if r.force_n > fmax {
                fmax = r.force_n;
                t_fmax = r.t_s;
            }
            if r.angle_raw_deg < amin {
                amin = r.angle_raw_deg;
                t_amin = r.t_s;
            }
        }
        // Max force within half a second of an angle minimum (minima repeat
        // every 4 s).
        let dt = (t_fmax - t_amin).abs() % 4.0;
        let dist = dt.min(4.0 - dt);
        assert!(dist <= 0.5, "force peak {t_fmax} vs flexion peak {t_amin}");
        // Periodicity: force at t and t + 4 s agree after settling.
        for r in settled.iter().filter(|r| r.t_s < 12.0) {
            let later = &records[(r.tick + 400) as usize];
            assert_abs_diff_eq!(later.force_n, r.force_n, epsilon = 0.25);
        }
    }

    #[test]
    fn invalid_config_rejected_at_init() {
        let mut cfg = DeviceConfig::default();
        cfg.loop_cfg.rate_hz = 0.0;
        assert!(Simulation::new(cfg).is_err());
    }

    #[test]
    fn piecewise_mapping_runs_end_to_end() {
        let mut cfg = quiet_config();
        cfg.mapping = crate::mapping::MappingSpec {
            kind: MappingKind::PiecewiseLinear {
                breakpoints: vec![(30.0, 12.0), (105.0, 2.0), (180.0, 0.0)],
            },
            stroke_limit_mm: 20.0,
        };
        let records = run(
            &cfg,
            &TraceSpec::Ramp {
                from_deg: 180.0,
                to_deg: 30.0,
                duration_s: 5.0,
            },
        )
        .unwrap();
        // Flexing monotonically never reduces the command.
        for w in records.windows(2) {
            assert!(w[1].cmd_mm >= w[0].cmd_mm - 1e-12);
        }
        let last = records.last().unwrap();
        assert!((last.cmd_mm - 12.0).abs() < 1e-9);
        assert!((last.pos_mm - 12.0).abs() <= cfg.actuator.stiction_band_mm + 1e-9);
    }
}
