//! Stacked-panel SVG rendering of telemetry logs.
//!
//! Hand-rolled SVG with fixed formatting so identical input produces
//! byte-identical output; golden-file tests depend on that. The default
//! layout is three stacked panels over time: elbow angle, actuator
//! position, force.

use std::fmt::Write as _;

use thiserror::Error;

use crate::control_loop::LogRecord;

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("unknown log column \"{column}\"")]
    UnknownColumn { column: String },
    #[error("cannot plot an empty log")]
    EmptyLog,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PanelSpec {
    /// Log column to plot on the y axis.
    pub column: String,
    pub label: String,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub panels: Vec<PanelSpec>,
    /// Column for the shared x axis.
    pub x_column: String,
    pub x_label: String,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            panels: vec![
                PanelSpec {
                    column: "angle_filt_deg".into(),
                    label: "Elbow angle".into(),
                    unit: "deg".into(),
                },
                PanelSpec {
                    column: "pos_mm".into(),
                    label: "Actuator position".into(),
                    unit: "mm".into(),
                },
                PanelSpec {
                    column: "force_n".into(),
                    label: "Force".into(),
                    unit: "N".into(),
                },
            ],
            x_column: "t_s".into(),
            x_label: "Time (s)".into(),
        }
    }
}

impl PlotSpec {
    /// Build a spec from column names using default labels.
    pub fn from_columns(columns: &[&str]) -> Result<Self, PlotError> {
        let mut panels = Vec::new();
        for c in columns {
            let (label, unit) = match *c {
                "angle_raw_deg" => ("Elbow angle (raw)", "deg"),
                "angle_filt_deg" => ("Elbow angle", "deg"),
                "cmd_mm" => ("Command", "mm"),
                "pos_mm" => ("Actuator position", "mm"),
                "force_n" => ("Force", "N"),
                "stalled" => ("Stalled", "flag"),
                "tick" => ("Tick", "count"),
                "t_s" => ("Time", "s"),
                other => {
                    return Err(PlotError::UnknownColumn {
                        column: other.to_string(),
                    })
                }
            };
            panels.push(PanelSpec {
                column: c.to_string(),
                label: label.into(),
                unit: unit.into(),
            });
        }
        Ok(Self {
            panels,
            x_column: "t_s".into(),
            x_label: "Time (s)".into(),
        })
    }
}

fn column_values(records: &[LogRecord], column: &str) -> Result<Vec<f64>, PlotError> {
    let get: fn(&LogRecord) -> f64 = match column {
        "tick" => |r| r.tick as f64,
        "t_s" => |r| r.t_s,
        "angle_raw_deg" => |r| r.angle_raw_deg,
        "angle_filt_deg" => |r| r.angle_filt_deg,
        "cmd_mm" => |r| r.cmd_mm,
        "pos_mm" => |r| r.pos_mm,
        "force_n" => |r| r.force_n,
        "stalled" => |r| r.stalled as u8 as f64,
        other => {
            return Err(PlotError::UnknownColumn {
                column: other.to_string(),
            })
        }
    };
    Ok(records.iter().map(get).collect())
}

const PANEL_WIDTH: f64 = 840.0;
const PANEL_HEIGHT: f64 = 180.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 16.0;
const PANEL_GAP: f64 = 30.0;
const MARGIN_TOP: f64 = 20.0;
const MARGIN_BOTTOM: f64 = 48.0;

/// Render the log as one SVG document with one polyline per panel.
pub fn emit_plot(spec: &PlotSpec, records: &[LogRecord]) -> Result<String, PlotError> {
    if records.is_empty() {
        return Err(PlotError::EmptyLog);
    }
    let xs = column_values(records, &spec.x_column)?;
    let series: Vec<Vec<f64>> = spec
        .panels
        .iter()
        .map(|p| column_values(records, &p.column))
        .collect::<Result<_, _>>()?;

    let n_panels = spec.panels.len().max(1);
    let total_w = MARGIN_LEFT + PANEL_WIDTH + MARGIN_RIGHT;
    let total_h =
        MARGIN_TOP + n_panels as f64 * PANEL_HEIGHT + (n_panels - 1) as f64 * PANEL_GAP
            + MARGIN_BOTTOM;

    let (x_min, x_max) = padded_range(&xs);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        fmt2(total_w),
        fmt2(total_h),
        fmt2(total_w),
        fmt2(total_h)
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(
        "<style>text{font-family:sans-serif;font-size:12px;fill:#222}.axis{stroke:#222;stroke-width:1}.grid{stroke:#ddd;stroke-width:0.5}.trace{fill:none;stroke:#2b6cb0;stroke-width:1.2}</style>\n",
    );

    for (i, (panel, ys)) in spec.panels.iter().zip(&series).enumerate() {
        let top = MARGIN_TOP + i as f64 * (PANEL_HEIGHT + PANEL_GAP);
        let bottom = top + PANEL_HEIGHT;
        let (y_min, y_max) = padded_range(ys);
        let x_px = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * PANEL_WIDTH;
        let y_px = |y: f64| bottom - (y - y_min) / (y_max - y_min) * PANEL_HEIGHT;

        let _ = writeln!(svg, "<g>");
        // Frame.
        let _ = writeln!(
            svg,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" class=\"axis\"/>",
            fmt2(MARGIN_LEFT),
            fmt2(top),
            fmt2(PANEL_WIDTH),
            fmt2(PANEL_HEIGHT)
        );
        // Y ticks, grid and labels.
        for tick in nice_ticks(y_min, y_max, 4) {
            let py = y_px(tick);
            let _ = writeln!(
                svg,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" class=\"grid\"/>",
                fmt2(MARGIN_LEFT),
                fmt2(py),
                fmt2(MARGIN_LEFT + PANEL_WIDTH),
                fmt2(py)
            );
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>",
                fmt2(MARGIN_LEFT - 6.0),
                fmt2(py + 4.0),
                fmt_tick(tick)
            );
        }
        // Y axis label with unit, rotated.
        let _ = writeln!(
            svg,
            "<text x=\"16\" y=\"{}\" transform=\"rotate(-90 16 {})\" text-anchor=\"middle\">{} ({})</text>",
            fmt2(top + PANEL_HEIGHT / 2.0),
            fmt2(top + PANEL_HEIGHT / 2.0),
            escape(&panel.label),
            escape(&panel.unit)
        );
        // X ticks on the bottom panel only.
        if i == n_panels - 1 {
            for tick in nice_ticks(x_min, x_max, 6) {
                let px = x_px(tick);
                let _ = writeln!(
                    svg,
                    "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" class=\"axis\"/>",
                    fmt2(px),
                    fmt2(bottom),
                    fmt2(px),
                    fmt2(bottom + 5.0)
                );
                let _ = writeln!(
                    svg,
                    "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                    fmt2(px),
                    fmt2(bottom + 18.0),
                    fmt_tick(tick)
                );
            }
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
                fmt2(MARGIN_LEFT + PANEL_WIDTH / 2.0),
                fmt2(bottom + 36.0),
                escape(&spec.x_label)
            );
        }
        // The trace itself.
        let mut points = String::with_capacity(records.len() * 12);
        for (x, y) in xs.iter().zip(ys) {
            let _ = write!(points, "{},{} ", fmt2(x_px(*x)), fmt2(y_px(*y)));
        }
        let _ = writeln!(
            svg,
            "<polyline class=\"trace\" points=\"{}\"/>",
            points.trim_end()
        );
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn padded_range(values: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() || !max.is_finite() {
        return (0.0, 1.0);
    }
    if min == max {
        return (min - 1.0, max + 1.0);
    }
    let pad = (max - min) * 0.05;
    (min - pad, max + pad)
}

/// Round tick positions at 1/2/5 spacing covering `[min, max]`.
fn nice_ticks(min: f64, max: f64, target: usize) -> Vec<f64> {
    let range = max - min;
    let raw_step = range / target as f64;
    let mag = 10f64.powf(raw_step.abs().log10().floor());
    let norm = raw_step / mag;
    let step = if norm <= 1.0 {
        mag
    } else if norm <= 2.0 {
        2.0 * mag
    } else if norm <= 5.0 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let mut ticks = Vec::new();
    let mut t = (min / step).ceil() * step;
    while t <= max + step * 1e-9 {
        // Snap near-zero artifacts from the ceil/multiply to exactly 0.
        ticks.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    ticks
}

/// Fixed two-decimal pixel coordinates keep the output deterministic.
fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

/// Tick labels: up to four decimals with trailing zeros trimmed.
fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
