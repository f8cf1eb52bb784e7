//! Per-home conditioning: unit identification, setpoint de-averaging and occupancy denoising.

mod deaverage;
mod occupancy;
mod unit;

use std::io::Write;
use std::ops::Range;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{format_timestamp, ParsedHome, Sample};
use crate::temperature::{c_to_f, f_to_c};
use crate::SAMPLE_MINUTES;

pub use deaverage::{
    deaverage_setpoints, deaverage_with, estimate_switched_setpoint, is_on_grid,
    round_to_increment, time_average, CorrectionKind, DeaverageOptions, DeaverageRecord,
    DT_ASSUMED,
};
pub use occupancy::{
    fill_occupancy, fill_occupancy_blocks, segment_occupancy, segment_runs,
    OccupancyFilterConfig, OccupancySegment,
};
pub use unit::{detect_unit, detect_unit_with, settled_deltas, TempUnit, UnitDetectConfig};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConditionError {
    #[error("temperature unit could not be identified")]
    UnknownUnit,
    #[error("occupancy window {0} min is not a multiple of 5")]
    Window(u32),
}

/// Index ranges of consecutive samples spaced exactly one interval apart.
pub fn contiguous_blocks(timestamps: &[NaiveDateTime]) -> Vec<Range<usize>> {
    let step = chrono::Duration::minutes(SAMPLE_MINUTES);
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..timestamps.len() {
        if timestamps[i] - timestamps[i - 1] != step {
            out.push(start..i);
            start = i;
        }
    }
    if !timestamps.is_empty() {
        out.push(start..timestamps.len());
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConditionConfig {
    pub unit: UnitDetectConfig,
    pub deaverage: DeaverageOptions,
    pub occupancy: OccupancyFilterConfig,
}

/// Which setpoint column a de-averaging record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetpointColumn {
    Heat,
    Cool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRecord {
    pub column: SetpointColumn,
    #[serde(flatten)]
    pub record: DeaverageRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedHome {
    pub home_id: String,
    pub unit: TempUnit,
    /// Setpoints corrected and expressed in °F.
    pub samples: Vec<Sample>,
    pub heat_deaveraged: Vec<bool>,
    pub cool_deaveraged: Vec<bool>,
    pub records: Vec<ColumnRecord>,
    /// Motion after gap filling at the configured window.
    pub occupied: Vec<bool>,
    pub window: OccupancyFilterConfig,
}

impl ConditionedHome {
    pub fn timestamps(&self) -> Vec<NaiveDateTime> {
        self.samples.iter().map(|s| s.timestamp).collect()
    }

    pub fn motion(&self) -> Vec<bool> {
        self.samples.iter().map(|s| s.motion).collect()
    }

    /// Occupancy re-filtered at another window.
    pub fn occupancy_at(&self, window: OccupancyFilterConfig) -> Vec<bool> {
        if window == self.window {
            return self.occupied.clone();
        }
        fill_occupancy_blocks(&self.timestamps(), &self.motion(), window)
    }

    pub fn segments(&self) -> Vec<OccupancySegment> {
        segment_occupancy(&self.timestamps(), &self.motion(), &self.occupied)
    }
}

/// Identify the unit from settled setpoint deltas of both columns.
pub fn identify_unit(samples: &[Sample], cfg: &UnitDetectConfig) -> TempUnit {
    let heat: Vec<f64> = samples.iter().map(|s| s.heat_setpoint).collect();
    let cool: Vec<f64> = samples.iter().map(|s| s.cool_setpoint).collect();
    let mut deltas = settled_deltas(&heat);
    deltas.extend(settled_deltas(&cool));
    detect_unit_with(&deltas, cfg)
}

/// Condition one parsed home. De-averaging runs in the user's own unit; the result is °F.
pub fn condition_home(
    parsed: &ParsedHome,
    cfg: &ConditionConfig,
) -> Result<ConditionedHome, ConditionError> {
    let unit = identify_unit(&parsed.samples, &cfg.unit);
    if unit == TempUnit::Unknown {
        return Err(ConditionError::UnknownUnit);
    }
    let (to_native, from_native): (fn(f64) -> f64, fn(f64) -> f64) = match unit {
        TempUnit::Celsius => (f_to_c, c_to_f),
        _ => (|x| x, |x| x),
    };

    let mut samples = parsed.samples.clone();
    let mut records = Vec::new();
    let mut flags = [vec![false; samples.len()], vec![false; samples.len()]];
    for (ci, column) in [SetpointColumn::Heat, SetpointColumn::Cool].into_iter().enumerate() {
        let native: Vec<f64> = samples
            .iter()
            .map(|s| match column {
                SetpointColumn::Heat => to_native(s.heat_setpoint),
                SetpointColumn::Cool => to_native(s.cool_setpoint),
            })
            .collect();
        let (fixed, recs) = deaverage_with(&native, unit, &cfg.deaverage)?;
        for (s, v) in samples.iter_mut().zip(&fixed) {
            let v = from_native(*v);
            match column {
                SetpointColumn::Heat => s.heat_setpoint = v,
                SetpointColumn::Cool => s.cool_setpoint = v,
            }
        }
        for r in recs {
            flags[ci][r.index] = true;
            records.push(ColumnRecord { column, record: r });
        }
    }

    let ts: Vec<NaiveDateTime> = samples.iter().map(|s| s.timestamp).collect();
    let motion: Vec<bool> = samples.iter().map(|s| s.motion).collect();
    let occupied = fill_occupancy_blocks(&ts, &motion, cfg.occupancy);
    let [heat_deaveraged, cool_deaveraged] = flags;
    Ok(ConditionedHome {
        home_id: parsed.home_id.clone(),
        unit,
        samples,
        heat_deaveraged,
        cool_deaveraged,
        records,
        occupied,
        window: cfg.occupancy,
    })
}

/// Header of the conditioned-series CSV.
pub const CONDITIONED_CSV_HEADER: [&str; 11] = [
    "DateTime",
    "Event",
    "T_stp_heat",
    "T_stp_cool",
    "T_ctrl",
    "heat_deaveraged",
    "cool_deaveraged",
    "motion",
    "occupied",
    "heat_runtime",
    "cool_runtime",
];

/// Conditioned series for inspection: setpoints in °F (three decimals), flags as `1`/`0`.
pub fn write_conditioned_csv<W: Write>(writer: W, home: &ConditionedHome) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CONDITIONED_CSV_HEADER)?;
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    for (i, s) in home.samples.iter().enumerate() {
        w.write_record([
            format_timestamp(&s.timestamp),
            s.event.token().to_string(),
            format!("{:.3}", s.heat_setpoint),
            format!("{:.3}", s.cool_setpoint),
            format!("{:.3}", s.indoor_temp),
            flag(home.heat_deaveraged[i]),
            flag(home.cool_deaveraged[i]),
            flag(s.motion),
            flag(home.occupied[i]),
            s.heat_runtime.to_string(),
            s.cool_runtime.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
