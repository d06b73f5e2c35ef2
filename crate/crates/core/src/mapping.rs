//! Angle-to-displacement mapping: the device's transduction policy.
//!
//! A mapping turns a filtered elbow angle into an actuator displacement
//! command. Two variants are implemented: a constant gain (displacement
//! proportional to flexion away from a reference angle) and a piecewise
//! linear table. The grammar reserves names for multi-channel and
//! spatiotemporal variants; those parse to an "unimplemented" error.

use crate::config::{scan_entries, ConfigError, Entry, Value};
use crate::sensing::AngleDeg;

#[derive(Clone, Debug, PartialEq)]
pub enum MappingKind {
    ConstantGain {
        gain_mm_per_deg: f64,
        reference_angle_deg: f64,
    },
    PiecewiseLinear {
        /// (angle deg, displacement mm), angles strictly increasing,
        /// displacements nonincreasing (more flexion, more extension).
        breakpoints: Vec<(f64, f64)>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MappingSpec {
    pub kind: MappingKind,
    pub stroke_limit_mm: f64,
}

impl Default for MappingSpec {
    fn default() -> Self {
        MappingSpec {
            kind: MappingKind::ConstantGain {
                gain_mm_per_deg: 0.123,
                reference_angle_deg: 180.0,
            },
            stroke_limit_mm: 20.0,
        }
    }
}

impl MappingSpec {
    /// Check every invariant; returns all violations, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.stroke_limit_mm > 0.0) {
            v.push("mapping.stroke_limit_mm must be > 0".into());
        }
        match &self.kind {
            MappingKind::ConstantGain {
                gain_mm_per_deg,
                reference_angle_deg,
            } => {
                if *gain_mm_per_deg < 0.0 {
                    v.push("mapping.gain_mm_per_deg must be >= 0".into());
                }
                if !(0.0..=180.0).contains(reference_angle_deg) {
                    v.push("mapping.reference_angle_deg must lie in [0, 180]".into());
                }
            }
            MappingKind::PiecewiseLinear { breakpoints } => {
                if breakpoints.len() < 2 {
                    v.push("mapping.breakpoints needs at least two points".into());
                }
                for w in breakpoints.windows(2) {
                    if w[1].0 <= w[0].0 {
                        v.push("mapping.breakpoints angles not strictly increasing".into());
                        break;
                    }
                }
                for w in breakpoints.windows(2) {
                    if w[1].1 > w[0].1 {
                        v.push(
                            "mapping.breakpoints displacement must not increase with angle".into(),
                        );
                        break;
                    }
                }
                for (a, d) in breakpoints {
                    if !(0.0..=180.0).contains(a) {
                        v.push(format!("mapping.breakpoints angle {a} outside [0, 180]"));
                        break;
                    }
                    if *d < 0.0 || *d > self.stroke_limit_mm {
                        v.push(format!(
                            "mapping.breakpoints displacement {d} exceeds stroke limit {}",
                            self.stroke_limit_mm
                        ));
                        break;
                    }
                }
            }
        }
        v
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid {
                violations: v.join("; "),
            })
        }
    }

    /// Serialize as config lines; `parse_mapping_config` reads this back
    /// to an identical spec (floats print in shortest round-trip form).
    pub fn to_config_fragment(&self) -> String {
        let mut s = String::new();
        match &self.kind {
            MappingKind::ConstantGain {
                gain_mm_per_deg,
                reference_angle_deg,
            } => {
                s.push_str("mapping.type = \"constant_gain\"\n");
                s.push_str(&format!("mapping.gain_mm_per_deg = {gain_mm_per_deg}\n"));
                s.push_str(&format!(
                    "mapping.reference_angle_deg = {reference_angle_deg}\n"
                ));
            }
            MappingKind::PiecewiseLinear { breakpoints } => {
                s.push_str("mapping.type = \"piecewise_linear\"\n");
                let pts: Vec<String> = breakpoints
                    .iter()
                    .map(|(a, d)| format!("{a}:{d}"))
                    .collect();
                s.push_str(&format!("mapping.breakpoints = \"{}\"\n", pts.join(", ")));
            }
        }
        s.push_str(&format!("mapping.stroke_limit_mm = {}\n", self.stroke_limit_mm));
        s
    }
}

/// Displacement command for an elbow angle, always inside
/// `[0, stroke_limit_mm]`. The physical actuator saturates rather than
/// faults, so out-of-span angles clamp instead of erroring.
pub fn command_from_angle(spec: &MappingSpec, angle: AngleDeg) -> f64 {
    let theta = angle.deg();
    let raw = match &spec.kind {
        MappingKind::ConstantGain {
            gain_mm_per_deg,
            reference_angle_deg,
        } => gain_mm_per_deg * (reference_angle_deg - theta),
        MappingKind::PiecewiseLinear { breakpoints } => piecewise_eval(breakpoints, theta),
    };
    raw.clamp(0.0, spec.stroke_limit_mm)
}

fn piecewise_eval(breakpoints: &[(f64, f64)], theta: f64) -> f64 {
    match breakpoints {
        [] => 0.0,
        [only] => only.1,
        _ => {
            let first = breakpoints[0];
            let last = breakpoints[breakpoints.len() - 1];
            if theta <= first.0 {
                return first.1;
            }
            if theta >= last.0 {
                return last.1;
            }
            for w in breakpoints.windows(2) {
                let (a0, d0) = w[0];
                let (a1, d1) = w[1];
                if theta <= a1 {
                    let t = (theta - a0) / (a1 - a0);
                    return d0 + t * (d1 - d0);
                }
            }
            last.1
        }
    }
}

/// Parse the `mapping.*` section of a config file (or a fragment holding
/// just those lines) into a validated spec.
pub fn parse_mapping_config(text: &str) -> Result<MappingSpec, ConfigError> {
    let entries = scan_entries(text)?;
    for e in &entries {
        if e.section() != "mapping" {
            return Err(ConfigError::UnknownKey {
                line: e.line,
                key: e.key.clone(),
            });
        }
    }
    mapping_from_entries(&entries)
}

/// Mapping names accepted by the grammar but not implemented yet.
const RESERVED_TYPES: &[&str] = &["spatiotemporal", "multi_channel"];

pub(crate) fn mapping_from_entries(entries: &[Entry]) -> Result<MappingSpec, ConfigError> {
    let mut mapping_type: Option<(usize, String)> = None;
    let mut gain: Option<f64> = None;
    let mut reference: Option<f64> = None;
    let mut stroke: Option<f64> = None;
    let mut breakpoints: Option<(usize, String)> = None;

    for e in entries {
        match e.key.as_str() {
            "mapping.type" => mapping_type = Some((e.line, e.expect_str()?)),
            "mapping.gain_mm_per_deg" => gain = Some(e.expect_num()?),
            "mapping.reference_angle_deg" => reference = Some(e.expect_num()?),
            "mapping.stroke_limit_mm" => stroke = Some(e.expect_num()?),
            "mapping.breakpoints" => breakpoints = Some((e.line, e.expect_str()?)),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: e.line,
                    key: e.key.clone(),
                })
            }
        }
    }

    let (type_line, type_name) = mapping_type.ok_or(ConfigError::MissingKey {
        key: "mapping.type".into(),
    })?;

    let kind = match type_name.as_str() {
        "constant_gain" => MappingKind::ConstantGain {
            gain_mm_per_deg: gain.unwrap_or(0.123),
            reference_angle_deg: reference.unwrap_or(180.0),
        },
        "piecewise_linear" => {
            let (bp_line, bp_text) = breakpoints.ok_or(ConfigError::MissingKey {
                key: "mapping.breakpoints".into(),
            })?;
            MappingKind::PiecewiseLinear {
                breakpoints: parse_breakpoints(bp_line, &bp_text)?,
            }
        }
        name if RESERVED_TYPES.contains(&name) => {
            return Err(ConfigError::Value {
                line: type_line,
                key: "mapping.type".into(),
                msg: format!("mapping type \"{name}\" is reserved but unimplemented"),
            })
        }
        name => {
            return Err(ConfigError::Value {
                line: type_line,
                key: "mapping.type".into(),
                msg: format!(
                    "unknown mapping type \"{name}\" (expected constant_gain or piecewise_linear)"
                ),
            })
        }
    };

    let spec = MappingSpec {
        kind,
        stroke_limit_mm: stroke.unwrap_or(20.0),
    };
    spec.validate()?;
    Ok(spec)
}

/// `"angle:displacement, angle:displacement, ..."`
fn parse_breakpoints(line: usize, text: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    let bad = |msg: String| ConfigError::Value {
        line,
        key: "mapping.breakpoints".into(),
        msg,
    };
    let mut pts = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (a, d) = part
            .split_once(':')
            .ok_or_else(|| bad(format!("expected angle:displacement, got \"{part}\"")))?;
        let angle: f64 = a
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad angle \"{}\"", a.trim())))?;
        let disp: f64 = d
            .trim()
            .parse()
            .map_err(|_| bad(format!("bad displacement \"{}\"", d.trim())))?;
        pts.push((angle, disp));
    }
    if pts.is_empty() {
        return Err(bad("no breakpoints given".into()));
    }
    Ok(pts)
}

impl Entry {
    pub(crate) fn expect_num(&self) -> Result<f64, ConfigError> {
        match self.value {
            Value::Num(n) => Ok(n),
            _ => Err(ConfigError::Value {
                line: self.line,
                key: self.key.clone(),
                msg: format!("expected a number, got {}", self.value),
            }),
        }
    }

    pub(crate) fn expect_str(&self) -> Result<String, ConfigError> {
        match &self.value {
            Value::Str(s) => Ok(s.clone()),
            _ => Err(ConfigError::Value {
                line: self.line,
                key: self.key.clone(),
                msg: format!("expected a quoted string, got {}", self.value),
            }),
        }
    }

    pub(crate) fn expect_bool(&self) -> Result<bool, ConfigError> {
        match self.value {
            Value::Bool(b) => Ok(b),
            _ => Err(ConfigError::Value {
                line: self.line,
                key: self.key.clone(),
                msg: format!("expected true or false, got {}", self.value),
            }),
        }
    }

    pub(crate) fn expect_u64(&self) -> Result<u64, ConfigError> {
        match self.value {
            Value::Num(n) if n >= 0.0 && n.fract() == 0.0 && n <= u64::MAX as f64 => Ok(n as u64),
            _ => Err(ConfigError::Value {
                line: self.line,
                key: self.key.clone(),
                msg: format!("expected a non-negative integer, got {}", self.value),
            }),
        }
    }
}
