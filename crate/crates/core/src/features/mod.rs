//! Setpoint changes and the per-override features derived from them.
//!
//! A setpoint change (SC) is any change of the active-mode setpoint between consecutive
//! samples. Changes made under a manual hold are manual (MSC); the rest are programmed.
//! For every MSC the degree of discomfort (DoD) is its signed size in °F and the time to
//! discomfort (TTD) is the time since the previous SC, defined only while the home stayed
//! occupied.

mod changes;
mod mental;
mod msc;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::condition::{segment_occupancy, ConditionedHome};
use crate::ingest::format_timestamp;

pub use changes::{
    attribute_prior_event, detect_changes, detect_changes_in, Cause, DetectConfig,
    DetectDiagnostics, SetpointChange,
};
pub use mental::{
    classify_mental_model, episode_follow_ups, EpisodeCounts, MentalModelClass,
};
pub use msc::{
    classify_energy_impact, compute_ttd_dod, EnergyImpact, MscFeature, ADAPTATION_MINUTES,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub detect: DetectConfig,
    /// Follow-up window for mental-model episodes, minutes.
    pub episode_window_minutes: i64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            detect: DetectConfig::default(),
            episode_window_minutes: 60,
        }
    }
}

/// Everything the feature stage derives for one home.
#[derive(Debug, Clone, PartialEq)]
pub struct HomeFeatures {
    pub home_id: String,
    pub changes: Vec<SetpointChange>,
    pub mscs: Vec<MscFeature>,
    pub diagnostics: DetectDiagnostics,
    pub mental_class: Option<MentalModelClass>,
    pub episodes: EpisodeCounts,
}

impl HomeFeatures {
    pub fn msc_count(&self) -> u64 {
        self.mscs.len() as u64
    }
}

/// Changes, MSC features (at the home's configured occupancy window) and episodes.
pub fn extract_home(home: &ConditionedHome, cfg: &FeatureConfig) -> HomeFeatures {
    let (changes, diagnostics) = detect_changes(home, &cfg.detect);
    let segments = home.segments();
    let mscs = compute_ttd_dod(&changes, &attribute_prior_event(&changes), &segments);
    let manual_times: Vec<_> = changes
        .iter()
        .filter(|c| c.cause.is_manual())
        .map(|c| c.time)
        .collect();
    let (mental_class, episodes) = classify_mental_model(&manual_times, cfg.episode_window_minutes);
    HomeFeatures {
        home_id: home.home_id.clone(),
        changes,
        mscs,
        diagnostics,
        mental_class,
        episodes,
    }
}

/// MSC features recomputed against occupancy filtered at another window.
pub fn mscs_at_window(home: &ConditionedHome, changes: &[SetpointChange], occupied: &[bool]) -> Vec<MscFeature> {
    let segments = segment_occupancy(&home.timestamps(), &home.motion(), occupied);
    compute_ttd_dod(changes, &attribute_prior_event(changes), &segments)
}

/// Columns of the MSC feature table, one row per MSC.
///
/// | column | meaning |
/// |---|---|
/// | `home_id` | home identifier |
/// | `time` | timestamp of the sample carrying the new setpoint |
/// | `mode` | `heat` or `cool` |
/// | `prev_setpoint_f`, `new_setpoint_f` | setpoints before and after, °F |
/// | `indoor_temp_f` | indoor temperature at the change, °F |
/// | `deaveraged` | new setpoint was reconstructed from a time-averaged sample |
/// | `dod_f` | new − prev, °F |
/// | `prior_event` | cause of the previous SC (`manual` or an event token), empty for the first |
/// | `minutes_since_prev_sc` | empty for the first SC |
/// | `ttd_minutes` | empty unless continuously occupied |
/// | `continuously_occupied`, `within_2h` | `1`/`0` |
/// | `energy_impact` | `intensive` or `saving` |
/// | `tod_minutes` | minutes since midnight |
/// | `weekday` | `Mon` … `Sun` |
/// | `duration_to_next_sc_minutes` | empty if the record ends first |
pub const FEATURE_CSV_HEADER: [&str; 17] = [
    "home_id",
    "time",
    "mode",
    "prev_setpoint_f",
    "new_setpoint_f",
    "indoor_temp_f",
    "deaveraged",
    "dod_f",
    "prior_event",
    "minutes_since_prev_sc",
    "ttd_minutes",
    "continuously_occupied",
    "within_2h",
    "energy_impact",
    "tod_minutes",
    "weekday",
    "duration_to_next_sc_minutes",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write the MSC table. Floats carry four decimals so output is byte-stable.
pub fn write_features_csv<'a, W, I>(writer: W, rows: I) -> csv::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a MscFeature>,
{
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(FEATURE_CSV_HEADER)?;
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    for f in rows {
        w.write_record([
            f.home_id.clone(),
            format_timestamp(&f.sc.time),
            f.sc.mode.as_str().to_string(),
            format!("{:.4}", f.sc.prev_setpoint),
            format!("{:.4}", f.sc.new_setpoint),
            format!("{:.4}", f.sc.indoor_temp),
            flag(f.sc.deaveraged),
            format!("{:.4}", f.dod),
            opt(f.prior_event.map(Cause::token)),
            opt(f.minutes_since_prev_sc),
            opt(f.ttd_minutes),
            flag(f.continuously_occupied),
            flag(f.within_2h),
            f.energy_impact.as_str().to_string(),
            f.tod_minutes.to_string(),
            f.weekday.to_string(),
            opt(f.duration_to_next_sc_minutes),
        ])?;
    }
    w.flush()?;
    Ok(())
}
