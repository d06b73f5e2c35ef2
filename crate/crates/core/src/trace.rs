//! True-angle trace generators used to drive simulation runs.
//!
//! Traces produce the *actual* elbow angle at a given time; all sensing
//! error enters later through the sensing chain. CLI syntax:
//! `hold:ANGLE`, `sine:CENTER,AMPLITUDE,FREQ_HZ`, `ramp:FROM,TO,DURATION_S`
//! and `file:PATH` (a CSV resolved by the caller into a `Table`).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("cannot parse trace \"{arg}\": {msg}")]
    Parse { arg: String, msg: String },
    #[error("trace angle {angle} deg outside [0, 180]")]
    AngleOutOfRange { angle: f64 },
    #[error("trace: {msg}")]
    Invalid { msg: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceSpec {
    Hold {
        angle_deg: f64,
    },
    Sine {
        center_deg: f64,
        amplitude_deg: f64,
        frequency_hz: f64,
    },
    Ramp {
        from_deg: f64,
        to_deg: f64,
        duration_s: f64,
    },
    /// (t seconds, angle deg) rows, t strictly increasing. Sampling
    /// interpolates linearly and holds the end values outside the range.
    Table(Vec<(f64, f64)>),
}

/// A parsed CLI trace argument: either an inline spec or a CSV path that
/// still needs loading.
#[derive(Clone, Debug, PartialEq)]
pub enum TraceArg {
    Spec(TraceSpec),
    File(String),
}

impl TraceSpec {
    pub fn validate(&self) -> Result<(), TraceError> {
        let check = |angle: f64| {
            if (0.0..=180.0).contains(&angle) {
                Ok(())
            } else {
                Err(TraceError::AngleOutOfRange { angle })
            }
        };
        match self {
            TraceSpec::Hold { angle_deg } => check(*angle_deg),
            TraceSpec::Sine {
                center_deg,
                amplitude_deg,
                frequency_hz,
            } => {
                if *amplitude_deg < 0.0 {
                    return Err(TraceError::Invalid {
                        msg: "sine amplitude must be >= 0".into(),
                    });
                }
                if *frequency_hz <= 0.0 {
                    return Err(TraceError::Invalid {
                        msg: "sine frequency must be > 0".into(),
                    });
                }
                check(center_deg - amplitude_deg)?;
                check(center_deg + amplitude_deg)
            }
            TraceSpec::Ramp {
                from_deg,
                to_deg,
                duration_s,
            } => {
                if *duration_s <= 0.0 {
                    return Err(TraceError::Invalid {
                        msg: "ramp duration must be > 0".into(),
                    });
                }
                check(*from_deg)?;
                check(*to_deg)
            }
            TraceSpec::Table(rows) => {
                if rows.is_empty() {
                    return Err(TraceError::Invalid {
                        msg: "trace table is empty".into(),
                    });
                }
                for w in rows.windows(2) {
                    if w[1].0 <= w[0].0 {
                        return Err(TraceError::Invalid {
                            msg: format!(
                                "trace times must be strictly increasing ({} then {})",
                                w[0].0, w[1].0
                            ),
                        });
                    }
                }
                for (_, angle) in rows {
                    check(*angle)?;
                }
                Ok(())
            }
        }
    }

    /// Angle at time `t` seconds. Valid specs always return a value in
    /// `[0, 180]`.
    pub fn sample(&self, t: f64) -> f64 {
        match self {
            TraceSpec::Hold { angle_deg } => *angle_deg,
            TraceSpec::Sine {
                center_deg,
                amplitude_deg,
                frequency_hz,
            } => center_deg + amplitude_deg * (2.0 * std::f64::consts::PI * frequency_hz * t).sin(),
            TraceSpec::Ramp {
                from_deg,
                to_deg,
                duration_s,
            } => {
                let s = (t / duration_s).clamp(0.0, 1.0);
                from_deg + (to_deg - from_deg) * s
            }
            TraceSpec::Table(rows) => {
                let first = rows[0];
                let last = rows[rows.len() - 1];
                if t <= first.0 {
                    return first.1;
                }
                if t >= last.0 {
                    return last.1;
                }
                for w in rows.windows(2) {
                    let (t0, a0) = w[0];
                    let (t1, a1) = w[1];
                    if t <= t1 {
                        return a0 + (a1 - a0) * (t - t0) / (t1 - t0);
                    }
                }
                last.1
            }
        }
    }
}

/// Parse a CLI trace argument.
pub fn parse_trace_arg(arg: &str) -> Result<TraceArg, TraceError> {
    let err = |msg: &str| TraceError::Parse {
        arg: arg.to_string(),
        msg: msg.to_string(),
    };
    let (kind, rest) = arg
        .split_once(':')
        .ok_or_else(|| err("expected kind:args, e.g. hold:120 or sine:105,75,0.25"))?;
    let nums = |expected: usize| -> Result<Vec<f64>, TraceError> {
        let vals: Result<Vec<f64>, _> = rest.split(',').map(|s| s.trim().parse::<f64>()).collect();
        match vals {
            Ok(v) if v.len() == expected => Ok(v),
            Ok(v) => Err(err(&format!(
                "expected {expected} numbers, got {}",
                v.len()
            ))),
            Err(_) => Err(err("arguments must be numbers")),
        }
    };
    let spec = match kind {
        "hold" => {
            let v = nums(1)?;
            TraceSpec::Hold { angle_deg: v[0] }
        }
        "sine" => {
            let v = nums(3)?;
            TraceSpec::Sine {
                center_deg: v[0],
                amplitude_deg: v[1],
                frequency_hz: v[2],
            }
        }
        "ramp" => {
            let v = nums(3)?;
            TraceSpec::Ramp {
                from_deg: v[0],
                to_deg: v[1],
                duration_s: v[2],
            }
        }
        "file" => {
            if rest.is_empty() {
                return Err(err("file path is empty"));
            }
            return Ok(TraceArg::File(rest.to_string()));
        }
        other => return Err(err(&format!("unknown trace kind \"{other}\""))),
    };
    spec.validate()?;
    Ok(TraceArg::Spec(spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn hold_is_constant() {
        let t = TraceSpec::Hold { angle_deg: 120.0 };
        t.validate().unwrap();
        assert_eq!(t.sample(0.0), 120.0);
        assert_eq!(t.sample(9.99), 120.0);
    }

    #[test]
    fn sine_stays_inside_envelope() {
        let t = TraceSpec::Sine {
            center_deg: 105.0,
            amplitude_deg: 75.0,
            frequency_hz: 0.25,
        };
        t.validate().unwrap();
        for k in 0..4000 {
            let a = t.sample(k as f64 * 0.01);
            assert!((30.0 - 1e-9..=180.0 + 1e-9).contains(&a));
        }
        assert_abs_diff_eq!(t.sample(1.0), 180.0, epsilon = 1e-9); // quarter period
    }

    #[test]
    fn sine_beyond_range_rejected() {
        let t = TraceSpec::Sine {
            center_deg: 105.0,
            amplitude_deg: 80.0,
            frequency_hz: 0.25,
        };
        assert!(matches!(
            t.validate(),
            Err(TraceError::AngleOutOfRange { .. })
        ));
    }

    #[test]
    fn ramp_interpolates_then_holds() {
        let t = TraceSpec::Ramp {
            from_deg: 180.0,
            to_deg: 30.0,
            duration_s: 5.0,
        };
        t.validate().unwrap();
        assert_eq!(t.sample(0.0), 180.0);
        assert_abs_diff_eq!(t.sample(2.5), 105.0, epsilon = 1e-12);
        assert_eq!(t.sample(5.0), 30.0);
        assert_eq!(t.sample(99.0), 30.0);
    }

    #[test]
    fn table_interpolates_between_rows() {
        let t = TraceSpec::Table(vec![(0.0, 180.0), (1.0, 90.0), (3.0, 120.0)]);
        t.validate().unwrap();
        assert_abs_diff_eq!(t.sample(0.5), 135.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.sample(2.0), 105.0, epsilon = 1e-12);
        assert_eq!(t.sample(-1.0), 180.0);
        assert_eq!(t.sample(10.0), 120.0);
    }

    #[test]
    fn table_requires_increasing_times() {
        let t = TraceSpec::Table(vec![(0.0, 180.0), (0.0, 90.0)]);
        assert!(t.validate().is_err());
    }

    #[test]
    fn arg_parsing_round_trip() {
        assert_eq!(
            parse_trace_arg("hold:120").unwrap(),
            TraceArg::Spec(TraceSpec::Hold { angle_deg: 120.0 })
        );
        assert_eq!(
            parse_trace_arg("sine:105, 75, 0.25").unwrap(),
            TraceArg::Spec(TraceSpec::Sine {
                center_deg: 105.0,
                amplitude_deg: 75.0,
                frequency_hz: 0.25,
            })
        );
        assert_eq!(
            parse_trace_arg("file:walk.csv").unwrap(),
            TraceArg::File("walk.csv".into())
        );
        assert!(parse_trace_arg("hold").is_err());
        assert!(parse_trace_arg("spiral:1,2").is_err());
        assert!(parse_trace_arg("sine:105,75").is_err());
        assert!(parse_trace_arg("hold:190").is_err());
    }
}
