//! Flat dotted-key config file format.
//!
//! ```text
//! # comment
//! sensor.adc_bits = 10
//! mapping.type = "constant_gain"
//! loop.noise_enabled = true
//! ```
//!
//! One `section.key = value` assignment per line. Values are numbers,
//! `true`/`false`, or double-quoted strings. Sections are `sensor`,
//! `mapping`, `actuator`, `skin` and `loop`; unknown keys are errors, and
//! every error names the offending line and key.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::actuator::ActuatorParams;
use crate::contact::{ForceSensorParams, SkinModel};
use crate::control_loop::LoopConfig;
use crate::mapping::{mapping_from_entries, MappingSpec};
use crate::sensing::{FilterSpec, FlexSensorParams};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key \"{key}\"")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key \"{key}\"")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key \"{key}\"")]
    MissingKey { key: String },
    #[error("line {line}: key \"{key}\": {msg}")]
    Value { line: usize, key: String, msg: String },
    #[error("invalid configuration: {violations}")]
    Invalid { violations: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Str(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Str(s) => write!(f, "\"{s}\""),
        }
    }
}

/// One parsed `key = value` line.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: Value,
}

impl Entry {
    pub fn section(&self) -> &str {
        self.key.split('.').next().unwrap_or("")
    }
}

/// Tokenize config text into entries. Comments start at `#` outside
/// quotes; blank lines are skipped; duplicate keys are rejected.
pub fn scan_entries(text: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = strip_comment(raw);
        let trimmed = stripped.trim();
        if trimmed.is_empty() {
            continue;
        }
        let (key_part, value_part) = trimmed.split_once('=').ok_or_else(|| {
            ConfigError::Syntax {
                line,
                msg: format!("expected key = value, got \"{trimmed}\""),
            }
        })?;
        let key = key_part.trim();
        if key.is_empty()
            || !key.contains('.')
            || !key
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.')
        {
            return Err(ConfigError::Syntax {
                line,
                msg: format!("malformed key \"{key}\" (expected section.name in lower_snake_case)"),
            });
        }
        let value = parse_value(line, key, value_part.trim())?;
        if seen.insert(key.to_string(), line).is_some() {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        entries.push(Entry {
            line,
            key: key.to_string(),
            value,
        });
    }
    Ok(entries)
}

fn strip_comment(line: &str) -> &str {
    let mut in_quotes = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => in_quotes = !in_quotes,
            '#' if !in_quotes => return &line[..i],
            _ => {}
        }
    }
    line
}

fn parse_value(line: usize, key: &str, text: &str) -> Result<Value, ConfigError> {
    if text.is_empty() {
        return Err(ConfigError::Value {
            line,
            key: key.to_string(),
            msg: "empty value".into(),
        });
    }
    if let Some(rest) = text.strip_prefix('"') {
        let inner = rest.strip_suffix('"').ok_or_else(|| ConfigError::Value {
            line,
            key: key.to_string(),
            msg: "unterminated string".into(),
        })?;
        if inner.contains('"') {
            return Err(ConfigError::Value {
                line,
                key: key.to_string(),
                msg: "stray quote inside string".into(),
            });
        }
        return Ok(Value::Str(inner.to_string()));
    }
    match text {
        "true" => return Ok(Value::Bool(true)),
        "false" => return Ok(Value::Bool(false)),
        _ => {}
    }
    text.parse::<f64>()
        .map(Value::Num)
        .map_err(|_| ConfigError::Value {
            line,
            key: key.to_string(),
            msg: format!("cannot parse \"{text}\" as a number, bool, or quoted string"),
        })
}

/// Everything a simulation run needs: sensing chain, mapping, actuator,
/// contact site, force sensor, and loop settings.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeviceConfig {
    pub sensor: FlexSensorParams,
    pub filter: FilterSpec,
    pub mapping: MappingSpec,
    pub actuator: ActuatorParams,
    pub skin: SkinModel,
    pub force_sensor: ForceSensorParams,
    pub loop_cfg: LoopConfig,
}

impl DeviceConfig {
    /// Parse and validate a complete config file. `mapping.type` is the
    /// only required key; everything else falls back to defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = scan_entries(text)?;
        let mut cfg = DeviceConfig::default();

        let mut afe_lo_set = false;
        let mut afe_hi_set = false;
        let mut filter_type: Option<(usize, String)> = None;
        let mut filter_window: Option<usize> = None;
        let mut filter_cutoff: Option<f64> = None;
        let mut skin_site: Option<(usize, String)> = None;
        let mut skin_stiffness: Option<f64> = None;
        let mut skin_offset: Option<f64> = None;

        let mapping_entries: Vec<Entry> = entries
            .iter()
            .filter(|e| e.section() == "mapping")
            .cloned()
            .collect();
        cfg.mapping = mapping_from_entries(&mapping_entries)?;

        for e in entries.iter().filter(|e| e.section() != "mapping") {
            match e.key.as_str() {
                "sensor.r_extended_ohm" => cfg.sensor.r_extended_ohm = e.expect_num()?,
                "sensor.r_flexed_ohm" => cfg.sensor.r_flexed_ohm = e.expect_num()?,
                "sensor.theta_min_deg" => cfg.sensor.theta_min_deg = e.expect_num()?,
                "sensor.r_fixed_ohm" => cfg.sensor.r_fixed_ohm = e.expect_num()?,
                "sensor.v_supply" => cfg.sensor.v_supply = e.expect_num()?,
                "sensor.adc_bits" => cfg.sensor.adc_bits = e.expect_u64()? as u32,
                "sensor.noise_sigma_ohm" => cfg.sensor.noise_sigma_ohm = e.expect_num()?,
                "sensor.afe_lo" => {
                    cfg.sensor.afe_lo = e.expect_num()?;
                    afe_lo_set = true;
                }
                "sensor.afe_hi" => {
                    cfg.sensor.afe_hi = e.expect_num()?;
                    afe_hi_set = true;
                }
                "sensor.filter_type" => filter_type = Some((e.line, e.expect_str()?)),
                "sensor.filter_window" => filter_window = Some(e.expect_u64()? as usize),
                "sensor.filter_cutoff_hz" => filter_cutoff = Some(e.expect_num()?),
                "actuator.stroke_mm" => cfg.actuator.stroke_mm = e.expect_num()?,
                "actuator.max_force_n" => cfg.actuator.max_force_n = e.expect_num()?,
                "actuator.max_speed_mm_per_s" => {
                    cfg.actuator.max_speed_mm_per_s = e.expect_num()?
                }
                "actuator.stiction_band_mm" => cfg.actuator.stiction_band_mm = e.expect_num()?,
                "actuator.pos_quantization_mm" => {
                    cfg.actuator.pos_quantization_mm = e.expect_num()?
                }
                "actuator.pos_noise_sigma_mm" => {
                    cfg.actuator.pos_noise_sigma_mm = e.expect_num()?
                }
                "skin.site" => skin_site = Some((e.line, e.expect_str()?)),
                "skin.stiffness_n_per_m" => skin_stiffness = Some(e.expect_num()?),
                "skin.contact_offset_mm" => skin_offset = Some(e.expect_num()?),
                "skin.force_range_n" => cfg.force_sensor.range_max_n = e.expect_num()?,
                "skin.force_noise_sigma_n" => cfg.force_sensor.noise_sigma_n = e.expect_num()?,
                "skin.force_quantization_n" => cfg.force_sensor.quantization_n = e.expect_num()?,
                "loop.rate_hz" => cfg.loop_cfg.rate_hz = e.expect_num()?,
                "loop.duration_s" => cfg.loop_cfg.duration_s = e.expect_num()?,
                "loop.safety_force_limit_n" => {
                    cfg.loop_cfg.safety_force_limit_n = e.expect_num()?
                }
                "loop.safety_enabled" => cfg.loop_cfg.safety_enabled = e.expect_bool()?,
                "loop.seed" => cfg.loop_cfg.seed = e.expect_u64()?,
                "loop.noise_enabled" => cfg.loop_cfg.noise_enabled = e.expect_bool()?,
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line: e.line,
                        key: e.key.clone(),
                    })
                }
            }
        }

        // Skin site preset first, explicit keys override.
        if let Some((line, site)) = skin_site {
            match SkinModel::preset(&site) {
                Some(preset) => cfg.skin = preset,
                None if site == "custom" => {
                    cfg.skin.site_name = site;
                    if skin_stiffness.is_none() {
                        return Err(ConfigError::MissingKey {
                            key: "skin.stiffness_n_per_m".into(),
                        });
                    }
                }
                None => {
                    return Err(ConfigError::Value {
                        line,
                        key: "skin.site".into(),
                        msg: format!(
                            "unknown site \"{site}\" (expected forearm, hand, or custom)"
                        ),
                    })
                }
            }
        }
        if let Some(k) = skin_stiffness {
            cfg.skin.stiffness_n_per_m = k;
        }
        if let Some(off) = skin_offset {
            cfg.skin.contact_offset_mm = off;
        }

        // Filter selection.
        match filter_type.as_ref().map(|(l, s)| (*l, s.as_str())) {
            None | Some((_, "moving_average")) => {
                if filter_cutoff.is_some() {
                    return match &filter_type {
                        Some((line, _)) => Err(ConfigError::Value {
                            line: *line,
                            key: "sensor.filter_cutoff_hz".into(),
                            msg: "only meaningful with filter_type \"low_pass\"".into(),
                        }),
                        None => Err(ConfigError::MissingKey {
                            key: "sensor.filter_type".into(),
                        }),
                    };
                }
                cfg.filter = FilterSpec::MovingAverage {
                    window: filter_window.unwrap_or(5),
                };
            }
            Some((line, "low_pass")) => {
                if filter_window.is_some() {
                    return Err(ConfigError::Value {
                        line,
                        key: "sensor.filter_window".into(),
                        msg: "only meaningful with filter_type \"moving_average\"".into(),
                    });
                }
                cfg.filter = FilterSpec::FirstOrderLowPass {
                    cutoff_hz: filter_cutoff.ok_or(ConfigError::MissingKey {
                        key: "sensor.filter_cutoff_hz".into(),
                    })?,
                };
            }
            Some((line, other)) => {
                return Err(ConfigError::Value {
                    line,
                    key: "sensor.filter_type".into(),
                    msg: format!(
                        "unknown filter \"{other}\" (expected moving_average or low_pass)"
                    ),
                })
            }
        }

        // Unless the front-end window was pinned explicitly, match it to
        // the configured divider output range.
        if !afe_lo_set && !afe_hi_set {
            if cfg.sensor.r_extended_ohm > 0.0
                && cfg.sensor.r_flexed_ohm > 0.0
                && cfg.sensor.r_fixed_ohm > 0.0
            {
                cfg.sensor.match_afe_window();
            }
        } else if afe_lo_set != afe_hi_set {
            return Err(ConfigError::MissingKey {
                key: if afe_lo_set {
                    "sensor.afe_hi".into()
                } else {
                    "sensor.afe_lo".into()
                },
            });
        }

        cfg.validate()?;
        Ok(cfg)
    }

    /// Collect every invariant violation across all sections, including
    /// cross-section constraints.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        v.extend(self.sensor.violations());
        v.extend(self.filter.violations(self.loop_cfg.rate_hz));
        v.extend(self.mapping.violations());
        v.extend(self.actuator.violations());
        v.extend(self.skin.violations());
        v.extend(self.force_sensor.violations());
        v.extend(self.loop_cfg.violations());
        if self.loop_cfg.safety_enabled
            && self.loop_cfg.safety_force_limit_n > self.actuator.max_force_n
        {
            v.push(format!(
                "loop.safety_force_limit_n ({}) must not exceed actuator.max_force_n ({})",
                self.loop_cfg.safety_force_limit_n, self.actuator.max_force_n
            ));
        }
        if self.mapping.stroke_limit_mm > self.actuator.stroke_mm {
            v.push(format!(
                "mapping.stroke_limit_mm ({}) must not exceed actuator.stroke_mm ({})",
                self.mapping.stroke_limit_mm, self.actuator.stroke_mm
            ));
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
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "mapping.type = \"constant_gain\"\n";

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = DeviceConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.loop_cfg.rate_hz, 100.0);
        assert_eq!(cfg.skin.site_name, "forearm");
        assert_eq!(cfg.sensor.adc_bits, 10);
        // Front-end window matched to the divider output range.
        assert!((cfg.sensor.afe_lo - 0.51220).abs() < 1e-5);
        assert!((cfg.sensor.afe_hi - 0.67742).abs() < 1e-5);
    }

    #[test]
    fn mapping_type_is_required() {
        let err = DeviceConfig::parse("loop.rate_hz = 100\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::MissingKey {
                key: "mapping.type".into()
            }
        );
    }

    #[test]
    fn unknown_key_names_line_and_key() {
        let text = format!("{MINIMAL}loop.rte_hz = 100\n");
        let err = DeviceConfig::parse(&text).unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownKey {
                line: 2,
                key: "loop.rte_hz".into()
            }
        );
    }

    #[test]
    fn duplicate_key_rejected() {
        let text = format!("{MINIMAL}loop.seed = 1\nloop.seed = 2\n");
        let err = DeviceConfig::parse(&text).unwrap_err();
        assert!(matches!(err, ConfigError::DuplicateKey { line: 3, .. }));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# device\n\nmapping.type = \"constant_gain\"  # gain mapping\nskin.site = \"hand\"  # dorsal hand\n";
        let cfg = DeviceConfig::parse(text).unwrap();
        assert_eq!(cfg.skin.stiffness_n_per_m, 8115.4);
    }

    #[test]
    fn site_preset_with_override() {
        let text = format!("{MINIMAL}skin.site = \"hand\"\nskin.contact_offset_mm = 1.5\n");
        let cfg = DeviceConfig::parse(&text).unwrap();
        assert_eq!(cfg.skin.stiffness_n_per_m, 8115.4);
        assert_eq!(cfg.skin.contact_offset_mm, 1.5);
    }

    #[test]
    fn custom_site_requires_stiffness() {
        let text = format!("{MINIMAL}skin.site = \"custom\"\n");
        let err = DeviceConfig::parse(&text).unwrap_err();
        assert_eq!(
            err,
            ConfigError::MissingKey {
                key: "skin.stiffness_n_per_m".into()
            }
        );
    }

    #[test]
    fn low_pass_filter_config() {
        let text =
            format!("{MINIMAL}sensor.filter_type = \"low_pass\"\nsensor.filter_cutoff_hz = 5\n");
        let cfg = DeviceConfig::parse(&text).unwrap();
        assert_eq!(cfg.filter, FilterSpec::FirstOrderLowPass { cutoff_hz: 5.0 });
    }

    #[test]
    fn cutoff_above_nyquist_rejected() {
        let text = format!(
            "{MINIMAL}sensor.filter_type = \"low_pass\"\nsensor.filter_cutoff_hz = 60\nloop.rate_hz = 100\n"
        );
        let err = DeviceConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("Nyquist"), "{err}");
    }

    #[test]
    fn safety_limit_above_stall_force_rejected() {
        let text = format!("{MINIMAL}loop.safety_force_limit_n = 30\n");
        let err = DeviceConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("safety_force_limit_n"), "{err}");
    }

    #[test]
    fn stroke_limit_above_actuator_stroke_rejected() {
        let text = format!("{MINIMAL}mapping.stroke_limit_mm = 25\n");
        let err = DeviceConfig::parse(&text).unwrap_err();
        assert!(err.to_string().contains("stroke_limit_mm"), "{err}");
    }

    #[test]
    fn syntax_error_names_line() {
        let err = DeviceConfig::parse("mapping.type \"constant_gain\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn bad_value_names_key() {
        let text = format!("{MINIMAL}loop.seed = banana\n");
        let err = DeviceConfig::parse(&text).unwrap_err();
        match err {
            ConfigError::Value { line, key, .. } => {
                assert_eq!(line, 2);
                assert_eq!(key, "loop.seed");
            }
            other => panic!("expected value error, got {other}"),
        }
    }
}
