use std::ops::Range;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{contiguous_blocks, ConditionError};
use crate::SAMPLE_MINUTES;

/// Gap-filling window `W`: unoccupied stretches of at most `W` minutes that are bounded by
/// detections on both sides are relabelled occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct OccupancyFilterConfig {
    window_minutes: u32,
}

impl OccupancyFilterConfig {
    pub fn new(window_minutes: u32) -> Result<Self, ConditionError> {
        if window_minutes % SAMPLE_MINUTES as u32 != 0 {
            return Err(ConditionError::Window(window_minutes));
        }
        Ok(OccupancyFilterConfig { window_minutes })
    }

    pub fn window_minutes(self) -> u32 {
        self.window_minutes
    }

    fn max_gap_samples(self) -> usize {
        (self.window_minutes / SAMPLE_MINUTES as u32) as usize
    }
}

impl Default for OccupancyFilterConfig {
    fn default() -> Self {
        OccupancyFilterConfig { window_minutes: 30 }
    }
}

impl TryFrom<u32> for OccupancyFilterConfig {
    type Error = ConditionError;
    fn try_from(w: u32) -> Result<Self, Self::Error> {
        OccupancyFilterConfig::new(w)
    }
}

impl From<OccupancyFilterConfig> for u32 {
    fn from(c: OccupancyFilterConfig) -> u32 {
        c.window_minutes
    }
}

/// Fill interior false-runs of at most `W/5` samples. Leading and trailing runs stay false.
pub fn fill_occupancy(motion: &[bool], cfg: OccupancyFilterConfig) -> Vec<bool> {
    let mut out = motion.to_vec();
    let max_gap = cfg.max_gap_samples();
    if max_gap == 0 {
        return out;
    }
    let mut last_true: Option<usize> = None;
    for (i, &m) in motion.iter().enumerate() {
        if !m {
            continue;
        }
        if let Some(prev) = last_true {
            let gap = i - prev - 1;
            if gap > 0 && gap <= max_gap {
                out[prev + 1..i].fill(true);
            }
        }
        last_true = Some(i);
    }
    out
}

/// [`fill_occupancy`] applied separately to each run of consecutive 5-minute samples, so a
/// hole in the record is never bridged.
pub fn fill_occupancy_blocks(
    timestamps: &[NaiveDateTime],
    motion: &[bool],
    cfg: OccupancyFilterConfig,
) -> Vec<bool> {
    let mut out = Vec::with_capacity(motion.len());
    for block in contiguous_blocks(timestamps) {
        out.extend(fill_occupancy(&motion[block], cfg));
    }
    out
}

/// Maximal true-runs as index ranges.
pub fn segment_runs(filtered: &[bool]) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &b) in filtered.iter().enumerate() {
        match (b, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push(s..i);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(s..filtered.len());
    }
    out
}

/// A contiguous filtered-occupied interval.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancySegment {
    pub start: NaiveDateTime,
    /// Exclusive: timestamp of the last occupied sample plus 5 minutes.
    pub end: NaiveDateTime,
    /// Minutes that were unoccupied before filtering.
    pub filled_minutes: u32,
    pub start_index: usize,
    pub end_index: usize,
}

impl OccupancySegment {
    pub fn minutes(&self) -> i64 {
        (self.end - self.start).num_minutes()
    }

    pub fn contains_indices(&self, from: usize, to: usize) -> bool {
        self.start_index <= from && to < self.end_index
    }
}

/// One segment per maximal true-run of `filtered`, also split at holes in the record.
pub fn segment_occupancy(
    timestamps: &[NaiveDateTime],
    raw: &[bool],
    filtered: &[bool],
) -> Vec<OccupancySegment> {
    let step = chrono::Duration::minutes(SAMPLE_MINUTES);
    let mut out = Vec::new();
    for block in contiguous_blocks(timestamps) {
        let off = block.start;
        for run in segment_runs(&filtered[block]) {
            let (s, e) = (run.start + off, run.end + off);
            let filled = (s..e).filter(|&i| !raw[i]).count() as u32 * SAMPLE_MINUTES as u32;
            out.push(OccupancySegment {
                start: timestamps[s],
                end: timestamps[e - 1] + step,
                filled_minutes: filled,
                start_index: s,
                end_index: e,
            });
        }
    }
    out
}
