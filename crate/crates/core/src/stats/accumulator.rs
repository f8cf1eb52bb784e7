use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Histogram1D, Histogram2D, QuantileSurface, StatsError};
use crate::condition::OccupancySegment;
use crate::features::{EnergyImpact, EpisodeCounts, MentalModelClass, MscFeature};
use crate::HvacMode;

/// Bin layout of every accumulated statistic. Two accumulators merge only when their
/// configurations are equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub tod_bin_minutes: u32,
    pub ttd_bin_minutes: u32,
    /// Upper end of the TTD histogram; later values go to its overflow.
    pub ttd_max_minutes: u32,
    /// Inner edges of the duration-to-next-SC classes, hours.
    pub duration_edges_hours: Vec<f64>,
    /// Inner edges of the occupancy-segment length histogram, minutes.
    pub segment_edges_minutes: Vec<f64>,
    /// TTDs at or below this are the immediate-notice peak.
    pub first_peak_minutes: u32,
    /// Indoor-temperature axis of the DoD × indoor histogram, °F: `[lo, hi)` in steps.
    pub indoor_range_f: (f64, f64, f64),
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            tod_bin_minutes: 30,
            ttd_bin_minutes: 5,
            ttd_max_minutes: 240,
            duration_edges_hours: vec![1.5, 3.0, 6.0, 12.0],
            segment_edges_minutes: vec![5.0, 15.0, 30.0, 60.0, 120.0, 210.0, 360.0, 720.0],
            first_peak_minutes: 10,
            indoor_range_f: (50.0, 90.0, 2.0),
        }
    }
}

/// A value per equipment mode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerMode<T> {
    pub heat: T,
    pub cool: T,
}

impl<T> PerMode<T> {
    pub fn get(&self, m: HvacMode) -> &T {
        match m {
            HvacMode::Heat => &self.heat,
            HvacMode::Cool => &self.cool,
        }
    }

    pub fn get_mut(&mut self, m: HvacMode) -> &mut T {
        match m {
            HvacMode::Heat => &mut self.heat,
            HvacMode::Cool => &mut self.cool,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomeTally {
    pub mscs: u64,
    pub samples: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactCounts {
    pub intensive: u64,
    pub saving: u64,
}

/// Mergeable population statistics. Every field is an integer count, so merging in any
/// order is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsAccumulator {
    config: StatsConfig,
    /// Time of day of every MSC.
    pub tod_weekday: Histogram1D,
    pub tod_weekend: Histogram1D,
    /// Time of day × hours until the next SC.
    pub tod_duration: Histogram2D,
    pub duration_missing: u64,
    /// TTD of every MSC that has one.
    pub ttd: Histogram1D,
    pub ttd_sum: u64,
    pub ttd_n: u64,
    pub ttd_sum_after_peak: u64,
    pub ttd_n_after_peak: u64,
    /// Cause of the SC preceding each MSC, keyed by token.
    pub prior_event: BTreeMap<String, u64>,
    pub dod_indoor: PerMode<Histogram2D>,
    pub impact: PerMode<ImpactCounts>,
    /// Analysis-set TTDs by DoD.
    pub surface: PerMode<QuantileSurface>,
    pub homes: BTreeMap<String, HomeTally>,
    /// Occupancy-segment lengths per filter window.
    pub segments: BTreeMap<u32, Histogram1D>,
    pub episodes: EpisodeCounts,
    /// Homes by modal episode class.
    pub home_classes: EpisodeCounts,
    /// Analysis-set surfaces recomputed at other filter windows.
    pub sensitivity: BTreeMap<u32, PerMode<QuantileSurface>>,
}

impl StatsAccumulator {
    pub fn new(config: StatsConfig) -> Result<Self, StatsError> {
        let tod = Histogram1D::uniform(0.0, 1440.0, (1440 / config.tod_bin_minutes.max(1)) as usize)?;
        let mut dur_edges = vec![0.0];
        dur_edges.extend(config.duration_edges_hours.iter().map(|h| h * 60.0));
        dur_edges.push(f64::INFINITY);
        let tod_duration = Histogram2D::new(tod.edges().to_vec(), dur_edges)?;
        let ttd = Histogram1D::uniform(
            0.0,
            f64::from(config.ttd_max_minutes),
            (config.ttd_max_minutes / config.ttd_bin_minutes.max(1)) as usize,
        )?;
        let dod_edges: Vec<f64> = (-10..=11).map(|i| f64::from(i) - 0.5).collect();
        let (lo, hi, step) = config.indoor_range_f;
        let n_in = ((hi - lo) / step).round() as usize;
        let indoor_edges: Vec<f64> = (0..=n_in).map(|i| lo + step * i as f64).collect();
        let dod_indoor = Histogram2D::new(dod_edges, indoor_edges)?;
        Ok(StatsAccumulator {
            tod_weekday: tod.clone(),
            tod_weekend: tod,
            tod_duration,
            duration_missing: 0,
            ttd,
            ttd_sum: 0,
            ttd_n: 0,
            ttd_sum_after_peak: 0,
            ttd_n_after_peak: 0,
            prior_event: BTreeMap::new(),
            dod_indoor: PerMode {
                heat: dod_indoor.clone(),
                cool: dod_indoor,
            },
            impact: PerMode::default(),
            surface: PerMode::default(),
            homes: BTreeMap::new(),
            segments: BTreeMap::new(),
            episodes: EpisodeCounts::default(),
            home_classes: EpisodeCounts::default(),
            sensitivity: BTreeMap::new(),
            config,
        })
    }

    pub fn config(&self) -> &StatsConfig {
        &self.config
    }

    /// Add one MSC to every statistic it qualifies for.
    pub fn accumulate(&mut self, m: &MscFeature) {
        let tod = f64::from(m.tod_minutes);
        if m.is_weekend() {
            self.tod_weekend.add(tod);
        } else {
            self.tod_weekday.add(tod);
        }
        match m.duration_to_next_sc_minutes {
            Some(d) => self.tod_duration.add(tod, f64::from(d)),
            None => self.duration_missing += 1,
        }
        if let Some(t) = m.ttd_minutes {
            self.ttd.add(f64::from(t));
            self.ttd_sum += u64::from(t);
            self.ttd_n += 1;
            if t > self.config.first_peak_minutes {
                self.ttd_sum_after_peak += u64::from(t);
                self.ttd_n_after_peak += 1;
            }
        }
        if let Some(p) = m.prior_event {
            *self.prior_event.entry(p.token().to_string()).or_default() += 1;
        }
        self.dod_indoor.get_mut(m.season_mode).add(m.dod, m.sc.indoor_temp);
        let imp = self.impact.get_mut(m.season_mode);
        match m.energy_impact {
            EnergyImpact::Intensive => imp.intensive += 1,
            EnergyImpact::Saving => imp.saving += 1,
        }
        if m.in_analysis_set() {
            if let Some(t) = m.ttd_minutes {
                self.surface.get_mut(m.season_mode).add(m.dod, t);
            }
        }
    }

    pub fn add_home(&mut self, home_id: &str, samples: u64, mscs: u64) {
        let t = self.homes.entry(home_id.to_string()).or_default();
        t.samples += samples;
        t.mscs += mscs;
    }

    pub fn add_segments(&mut self, window_minutes: u32, segments: &[OccupancySegment]) {
        let edges = &self.config.segment_edges_minutes;
        let h = self.segments.entry(window_minutes).or_insert_with(|| {
            let mut e = edges.clone();
            e.push(f64::INFINITY);
            Histogram1D::new(e).expect("segment edges validated by config")
        });
        for s in segments {
            h.add(s.minutes() as f64);
        }
    }

    pub fn add_mental(&mut self, class: Option<MentalModelClass>, episodes: &EpisodeCounts) {
        self.episodes.merge(episodes);
        if let Some(c) = class {
            self.home_classes.add(c, 1);
        }
    }

    /// Analysis-set MSCs of one home, recomputed with occupancy at another window.
    pub fn add_sensitivity(&mut self, window_minutes: u32, mscs: &[MscFeature]) {
        let s = self.sensitivity.entry(window_minutes).or_default();
        for m in mscs.iter().filter(|m| m.in_analysis_set()) {
            if let Some(t) = m.ttd_minutes {
                s.get_mut(m.season_mode).add(m.dod, t);
            }
        }
    }

    pub fn merge(&mut self, o: &StatsAccumulator) -> Result<(), StatsError> {
        if self.config != o.config {
            return Err(StatsError::Mismatch("stats configuration"));
        }
        self.tod_weekday.merge(&o.tod_weekday)?;
        self.tod_weekend.merge(&o.tod_weekend)?;
        self.tod_duration.merge(&o.tod_duration)?;
        self.duration_missing += o.duration_missing;
        self.ttd.merge(&o.ttd)?;
        self.ttd_sum += o.ttd_sum;
        self.ttd_n += o.ttd_n;
        self.ttd_sum_after_peak += o.ttd_sum_after_peak;
        self.ttd_n_after_peak += o.ttd_n_after_peak;
        for (k, v) in &o.prior_event {
            *self.prior_event.entry(k.clone()).or_default() += v;
        }
        for mode in HvacMode::ALL {
            self.dod_indoor.get_mut(mode).merge(o.dod_indoor.get(mode))?;
            let (a, b) = (self.impact.get_mut(mode), o.impact.get(mode));
            a.intensive += b.intensive;
            a.saving += b.saving;
            self.surface.get_mut(mode).merge(o.surface.get(mode))?;
        }
        for (k, t) in &o.homes {
            let d = self.homes.entry(k.clone()).or_default();
            d.mscs += t.mscs;
            d.samples += t.samples;
        }
        for (w, h) in &o.segments {
            match self.segments.get_mut(w) {
                Some(d) => d.merge(h)?,
                None => {
                    self.segments.insert(*w, h.clone());
                }
            }
        }
        self.episodes.merge(&o.episodes);
        self.home_classes.merge(&o.home_classes);
        for (w, s) in &o.sensitivity {
            let d = self.sensitivity.entry(*w).or_default();
            for mode in HvacMode::ALL {
                d.get_mut(mode).merge(s.get(mode))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{Cause, SetpointChange};
    use chrono::{NaiveDate, Weekday};

    pub(crate) fn msc(tod: u32, weekday: Weekday, dod: f64, ttd: Option<u32>) -> MscFeature {
        let time = NaiveDate::from_ymd_opt(2017, 1, 2)
            .unwrap()
            .and_hms_opt(tod / 60, tod % 60, 0)
            .unwrap();
        MscFeature {
            home_id: "h".into(),
            sc: SetpointChange {
                home_id: "h".into(),
                index: 0,
                time,
                mode: HvacMode::Cool,
                prev_setpoint: 76.0,
                new_setpoint: 76.0 + dod,
                indoor_temp: 75.0,
                cause: Cause::Manual,
                deaveraged: false,
            },
            ttd_minutes: ttd,
            minutes_since_prev_sc: ttd,
            dod,
            prior_event: Some(Cause::Manual),
            continuously_occupied: ttd.is_some(),
            within_2h: ttd.is_some_and(|t| t < 120),
            season_mode: HvacMode::Cool,
            energy_impact: crate::features::classify_energy_impact(HvacMode::Cool, dod),
            tod_minutes: tod,
            weekday,
            duration_to_next_sc_minutes: None,
        }
    }

    #[test]
    fn weekday_tod_bin() {
        let mut acc = StatsAccumulator::new(StatsConfig::default()).unwrap();
        acc.accumulate(&msc(7 * 60 + 5, Weekday::Tue, -2.0, Some(17)));
        assert_eq!(acc.tod_weekday.counts()[14], 1);
        assert_eq!(acc.tod_weekend.total(), 0);
        assert_eq!(acc.surface.cool.samples(-2), vec![17]);
        assert_eq!(acc.ttd.counts()[3], 1);
    }

    #[test]
    fn long_ttd_overflows() {
        let mut acc = StatsAccumulator::new(StatsConfig::default()).unwrap();
        acc.accumulate(&msc(600, Weekday::Sat, 1.0, Some(600)));
        assert_eq!(acc.ttd.overflow(), 1);
        assert_eq!(acc.surface.cool.count(1), 0, "beyond adaptation cutoff");
        assert_eq!(acc.tod_weekend.total(), 1);
    }

    #[test]
    fn merge_identity_and_mismatch() {
        let mut a = StatsAccumulator::new(StatsConfig::default()).unwrap();
        a.accumulate(&msc(100, Weekday::Mon, 2.0, Some(30)));
        let snapshot = a.clone();
        a.merge(&StatsAccumulator::new(StatsConfig::default()).unwrap()).unwrap();
        assert_eq!(a, snapshot);
        let other = StatsAccumulator::new(StatsConfig {
            ttd_bin_minutes: 10,
            ..StatsConfig::default()
        })
        .unwrap();
        assert!(a.merge(&other).is_err());
    }
}
