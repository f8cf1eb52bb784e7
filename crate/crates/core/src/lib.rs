//! Occupant thermostat-override dynamics from 5-minute smart-thermostat telemetry.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] parses per-home telemetry CSV files and metadata and selects cohorts.
//! * [`condition`] identifies each home's temperature unit, undoes the time-averaging of
//!   sampled setpoints and denoises PIR occupancy.
//! * [`features`] detects setpoint changes, separates manual from programmed changes and
//!   computes time-to-discomfort (TTD) and degree-of-discomfort (DoD) for every manual one.
//! * [`stats`] holds mergeable population accumulators, including the DoD×TTD quantile surface.
//! * [`model`] fits `TTD_q = a·exp(b·|DoD|)` to that surface and predicts override timing.
//! * [`synth`] generates synthetic corpora with known ground truth, used as the test oracle.
//! * [`pipeline`] wires the stages together for a whole corpus.
//!
//! ```
//! use thermodyn::model::{evaluate, OverrideModel};
//! use thermodyn::HvacMode;
//!
//! let model = OverrideModel::new(HvacMode::Heat, 0.5, 0.5368, -0.083);
//! let minutes = evaluate(&model, 2.0).ttd_hours * 60.0;
//! assert!((minutes - 27.3).abs() < 0.05);
//! ```

pub mod condition;
pub mod features;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod stats;
pub mod synth;
mod temperature;

pub use temperature::{c_delta_to_f, c_to_f, f_delta_to_c, f_to_c, HvacMode};

/// Length of one telemetry interval in minutes.
pub const SAMPLE_MINUTES: i64 = 5;

/// Version stamped into every JSON artifact.
pub const FORMAT_VERSION: u32 = 1;
