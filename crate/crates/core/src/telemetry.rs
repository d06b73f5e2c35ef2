//! Telemetry file formats and the replay checker.
//!
//! Log CSV: header `tick,t_s,angle_raw_deg,angle_filt_deg,cmd_mm,pos_mm,force_n,stalled`,
//! `\n` newlines, `.` decimal point, no trailing commas. Floats print in
//! shortest round-trip form, so parsing a log back yields bit-identical
//! values; that is what makes replay deviations exactly zero rather than
//! merely small.
//!
//! Sweep CSV: `x_mm,force_n`. Trace CSV: `t_s,angle_deg`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::actuator::{actuator_step, position_feedback, ActuatorState};
use crate::config::DeviceConfig;
use crate::contact::{contact_force, force_sensor_read};
use crate::control_loop::{safety_clamp, LogRecord};
use crate::mapping::command_from_angle;
use crate::rng::SimRng;
use crate::sensing::{AngleDeg, FilterState};

pub const LOG_HEADER: &str = "tick,t_s,angle_raw_deg,angle_filt_deg,cmd_mm,pos_mm,force_n,stalled";
pub const SWEEP_HEADER: &str = "x_mm,force_n";
pub const TRACE_HEADER: &str = "t_s,angle_deg";

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("line 1: expected header \"{expected}\", found \"{found}\"")]
    Header { expected: String, found: String },
    #[error("line {line}: {msg}")]
    Row { line: usize, msg: String },
}

/// Serialize records to the log CSV format (byte-deterministic).
pub fn log_to_csv(records: &[LogRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(LOG_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.tick,
            r.t_s,
            r.angle_raw_deg,
            r.angle_filt_deg,
            r.cmd_mm,
            r.pos_mm,
            r.force_n,
            r.stalled
        );
    }
    out
}

pub fn parse_log_csv(text: &str) -> Result<Vec<LogRecord>, DataError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| DataError::Header {
        expected: LOG_HEADER.into(),
        found: String::new(),
    })?;
    if header != LOG_HEADER {
        return Err(DataError::Header {
            expected: LOG_HEADER.into(),
            found: header.to_string(),
        });
    }
    let mut records = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 8 {
            return Err(DataError::Row {
                line,
                msg: format!("expected 8 fields, found {}", fields.len()),
            });
        }
        let num = |i: usize, name: &str| -> Result<f64, DataError> {
            fields[i].parse().map_err(|_| DataError::Row {
                line,
                msg: format!("bad {name} \"{}\"", fields[i]),
            })
        };
        records.push(LogRecord {
            tick: fields[0].parse().map_err(|_| DataError::Row {
                line,
                msg: format!("bad tick \"{}\"", fields[0]),
            })?,
            t_s: num(1, "t_s")?,
            angle_raw_deg: num(2, "angle_raw_deg")?,
            angle_filt_deg: num(3, "angle_filt_deg")?,
            cmd_mm: num(4, "cmd_mm")?,
            pos_mm: num(5, "pos_mm")?,
            force_n: num(6, "force_n")?,
            stalled: match fields[7] {
                "true" => true,
                "false" => false,
                other => {
                    return Err(DataError::Row {
                        line,
                        msg: format!("bad stalled flag \"{other}\""),
                    })
                }
            },
        });
    }
    Ok(records)
}

/// Serialize sweep samples as `x_mm,force_n` rows.
pub fn sweep_to_csv(samples: &[(f64, f64)]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for &(x, f) in samples {
        let _ = writeln!(out, "{x},{f}");
    }
    out
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<(f64, f64)>, DataError> {
    parse_two_column(text, SWEEP_HEADER)
}

/// Trace input rows must have strictly increasing times; angle range is
/// validated by `TraceSpec::validate` once the table is built.
pub fn parse_trace_csv(text: &str) -> Result<Vec<(f64, f64)>, DataError> {
    parse_two_column(text, TRACE_HEADER)
}

fn parse_two_column(text: &str, expected_header: &str) -> Result<Vec<(f64, f64)>, DataError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| DataError::Header {
        expected: expected_header.into(),
        found: String::new(),
    })?;
    if header != expected_header {
        return Err(DataError::Header {
            expected: expected_header.into(),
            found: header.to_string(),
        });
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        if raw.is_empty() {
            continue;
        }
        let (a, b) = raw.split_once(',').ok_or_else(|| DataError::Row {
            line,
            msg: "expected two comma-separated fields".into(),
        })?;
        let parse = |s: &str| -> Result<f64, DataError> {
            s.parse().map_err(|_| DataError::Row {
                line,
                msg: format!("bad number \"{s}\""),
            })
        };
        rows.push((parse(a)?, parse(b)?));
    }
    Ok(rows)
}

/// Per-column maximum deviations between a log and its recomputation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReplayReport {
    pub rows: usize,
    pub max_dev_angle_filt_deg: f64,
    pub max_dev_cmd_mm: f64,
    pub max_dev_pos_mm: f64,
    pub max_dev_force_n: f64,
    pub stalled_mismatches: usize,
}

impl ReplayReport {
    pub fn is_clean(&self) -> bool {
        self.rows == 0
            || (self.max_dev_angle_filt_deg == 0.0
                && self.max_dev_cmd_mm == 0.0
                && self.max_dev_pos_mm == 0.0
                && self.max_dev_force_n == 0.0
                && self.stalled_mismatches == 0)
    }

    pub fn to_key_values(&self) -> String {
        format!(
            "rows={}\nmax_dev_angle_filt_deg={}\nmax_dev_cmd_mm={}\nmax_dev_pos_mm={}\nmax_dev_force_n={}\nstalled_mismatches={}\n",
            self.rows,
            self.max_dev_angle_filt_deg,
            self.max_dev_cmd_mm,
            self.max_dev_pos_mm,
            self.max_dev_force_n,
            self.stalled_mismatches
        )
    }
}

/// Recompute the derived columns of a log from its raw angle column and
/// the config that produced it, reporting the worst deviation per column.
///
/// The reconstruction reruns the full post-sensing pipeline, including the
/// seeded noise stream: the flex-sensor draw of each tick is consumed and
/// discarded (its effect is already inside `angle_raw_deg`), then the
/// position and force draws land exactly where the original run put them.
/// A log produced by this crate therefore replays with deviation exactly
/// zero in every column; any nonzero deviation means the log or config
/// was altered.
pub fn replay_check(records: &[LogRecord], cfg: &DeviceConfig) -> ReplayReport {
    let loop_cfg = &cfg.loop_cfg;
    let noise = loop_cfg.noise_enabled;
    let mut filter = FilterState::new(&cfg.filter, loop_cfg.rate_hz);
    let mut actuator = ActuatorState::default();
    let mut rng = SimRng::new(loop_cfg.seed);
    let mut report = ReplayReport {
        rows: records.len(),
        ..ReplayReport::default()
    };

    for rec in records {
        if noise {
            rng.normal(cfg.sensor.noise_sigma_ohm);
        }
        let angle_filt = filter.step(AngleDeg(rec.angle_raw_deg)).deg();
        let mut cmd = command_from_angle(&cfg.mapping, AngleDeg(angle_filt));
        if loop_cfg.safety_enabled {
            cmd = safety_clamp(cmd, &cfg.skin, loop_cfg.safety_force_limit_n);
        }
        cmd = cmd.min(cfg.actuator.stroke_mm);
        let load = contact_force(&cfg.skin, actuator.position_mm);
        actuator = actuator_step(&cfg.actuator, actuator, cmd, load, loop_cfg.dt())
            .expect("replayed command clamped into stroke");
        let pos = position_feedback(&cfg.actuator, &actuator, noise.then_some(&mut rng));
        let force = force_sensor_read(
            &cfg.force_sensor,
            contact_force(&cfg.skin, actuator.position_mm),
            noise.then_some(&mut rng),
        );

        report.max_dev_angle_filt_deg = report
            .max_dev_angle_filt_deg
            .max((angle_filt - rec.angle_filt_deg).abs());
        report.max_dev_cmd_mm = report.max_dev_cmd_mm.max((cmd - rec.cmd_mm).abs());
        report.max_dev_pos_mm = report.max_dev_pos_mm.max((pos - rec.pos_mm).abs());
        report.max_dev_force_n = report.max_dev_force_n.max((force - rec.force_n).abs());
        if actuator.stalled != rec.stalled {
            report.stalled_mismatches += 1;
        }
    }
    report
}
