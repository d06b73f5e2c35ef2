//! Control stack and hardware-in-the-loop simulator for a wearable device
//! that transduces elbow joint angle into deep-pressure stimuli on the
//! skin.
//!
//! The device under simulation measures elbow angle with a resistive flex
//! sensor in a voltage divider, maps the filtered angle to a linear
//! actuator displacement, and presses a tactor against the skin; an
//! embedded force sensor reads back the applied pressure. This crate
//! models each hardware element, runs the firmware-equivalent fixed-rate
//! control loop deterministically, and reproduces the device
//! characterization experiments (force-displacement sweeps and stiffness
//! identification).
//!
//! Everything is seed-deterministic: a config plus a seed fully determines
//! every log byte, which the replay checker and golden-file tests rely on.

// Validation uses negated comparisons (`!(x > 0.0)`) so NaN inputs are
// flagged as violations instead of slipping through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuator;
pub mod calibration;
pub mod config;
pub mod contact;
pub mod control_loop;
pub mod mapping;
pub mod plot;
pub mod rng;
pub mod sensing;
pub mod telemetry;
pub mod trace;

pub use actuator::{ActuatorParams, ActuatorState};
pub use config::{ConfigError, DeviceConfig};
pub use contact::{ForceSensorParams, SkinModel};
pub use control_loop::{run, LogRecord, LoopConfig, Simulation};
pub use mapping::{MappingKind, MappingSpec};
pub use sensing::{AngleDeg, FilterSpec, FlexSensorParams};
pub use trace::{TraceArg, TraceSpec};
