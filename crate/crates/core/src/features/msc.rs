use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use super::{Cause, SetpointChange};
use crate::condition::OccupancySegment;
use crate::HvacMode;

/// Occupants are taken to be fully adapted after this many minutes; later overrides are not
/// thermal-dynamics responses.
pub const ADAPTATION_MINUTES: u32 = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyImpact {
    Intensive,
    Saving,
}

impl EnergyImpact {
    pub fn as_str(self) -> &'static str {
        match self {
            EnergyImpact::Intensive => "intensive",
            EnergyImpact::Saving => "saving",
        }
    }
}

/// Raising the heating setpoint or lowering the cooling setpoint costs energy.
///
/// `dod` must be nonzero; zero counts as saving.
pub fn classify_energy_impact(mode: HvacMode, dod: f64) -> EnergyImpact {
    if dod * mode.intensive_sign() > 0.0 {
        EnergyImpact::Intensive
    } else {
        EnergyImpact::Saving
    }
}

/// Features of one manual setpoint change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MscFeature {
    pub home_id: String,
    pub sc: SetpointChange,
    /// Minutes since the previous change, present only when the home stayed occupied
    /// throughout.
    pub ttd_minutes: Option<u32>,
    pub minutes_since_prev_sc: Option<u32>,
    /// new − old setpoint, °F.
    pub dod: f64,
    pub prior_event: Option<Cause>,
    pub continuously_occupied: bool,
    pub within_2h: bool,
    pub season_mode: HvacMode,
    pub energy_impact: EnergyImpact,
    pub tod_minutes: u32,
    pub weekday: Weekday,
    pub duration_to_next_sc_minutes: Option<u32>,
}

impl MscFeature {
    /// Member of the dynamics set used for TTD statistics and fitting.
    pub fn in_analysis_set(&self) -> bool {
        self.within_2h && self.continuously_occupied && self.ttd_minutes.is_some()
    }

    pub fn is_weekend(&self) -> bool {
        matches!(self.weekday, Weekday::Sat | Weekday::Sun)
    }
}

fn minutes_between(a: NaiveDateTime, b: NaiveDateTime) -> u32 {
    (b - a).num_minutes().max(0) as u32
}

/// Index of the segment containing sample `idx`, if any.
fn segment_of(segments: &[OccupancySegment], idx: usize) -> Option<&OccupancySegment> {
    let i = segments.partition_point(|s| s.end_index <= idx);
    segments.get(i).filter(|s| s.start_index <= idx)
}

/// One feature row per manual change in `changes` (time-ordered, one home).
///
/// `segments` are the home's occupancy segments at the configured filter window.
pub fn compute_ttd_dod(
    changes: &[SetpointChange],
    prior: &[Option<Cause>],
    segments: &[OccupancySegment],
) -> Vec<MscFeature> {
    assert_eq!(changes.len(), prior.len());
    let mut out = Vec::new();
    for (k, sc) in changes.iter().enumerate() {
        if !sc.cause.is_manual() {
            continue;
        }
        let prev = k.checked_sub(1).map(|j| &changes[j]);
        let since = prev.map(|p| minutes_between(p.time, sc.time));
        let continuously_occupied = match prev {
            Some(p) => segment_of(segments, p.index).is_some_and(|s| s.contains_indices(p.index, sc.index)),
            None => false,
        };
        let within_2h = since.is_some_and(|m| m < ADAPTATION_MINUTES);
        let next = changes[k + 1..].iter().find(|c| c.time > sc.time);
        let dod = sc.delta();
        out.push(MscFeature {
            home_id: sc.home_id.clone(),
            sc: sc.clone(),
            ttd_minutes: since.filter(|_| continuously_occupied),
            minutes_since_prev_sc: since,
            dod,
            prior_event: prior[k],
            continuously_occupied,
            within_2h,
            season_mode: sc.mode,
            energy_impact: classify_energy_impact(sc.mode, dod),
            tod_minutes: sc.time.hour() * 60 + sc.time.minute(),
            weekday: sc.time.weekday(),
            duration_to_next_sc_minutes: next.map(|n| minutes_between(sc.time, n.time)),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::attribute_prior_event;
    use crate::ingest::EventKind;
    use chrono::NaiveDate;

    fn at(h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2017, 1, 2)
            .unwrap()
            .and_hms_opt(h, m, 0)
            .unwrap()
    }

    fn idx(t: NaiveDateTime) -> usize {
        ((t - at(0, 0)).num_minutes() / 5) as usize
    }

    fn sc(t: NaiveDateTime, prev: f64, new: f64, cause: Cause) -> SetpointChange {
        SetpointChange {
            home_id: "h".into(),
            index: idx(t),
            time: t,
            mode: HvacMode::Heat,
            prev_setpoint: prev,
            new_setpoint: new,
            indoor_temp: 66.0,
            cause,
            deaveraged: false,
        }
    }

    fn seg(a: NaiveDateTime, b: NaiveDateTime) -> OccupancySegment {
        OccupancySegment {
            start: a,
            end: b,
            filled_minutes: 0,
            start_index: idx(a),
            end_index: idx(b),
        }
    }

    #[test]
    fn ttd_inside_one_segment() {
        let cs = [
            sc(at(14, 0), 64.0, 68.0, Cause::Programmed(EventKind::ScheduleHome)),
            sc(at(14, 30), 68.0, 70.0, Cause::Manual),
        ];
        let f = compute_ttd_dod(&cs, &attribute_prior_event(&cs), &[seg(at(13, 0), at(16, 0))]);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].ttd_minutes, Some(30));
        assert!(f[0].continuously_occupied && f[0].in_analysis_set());
        assert_eq!(f[0].dod, 2.0);
        assert_eq!(f[0].energy_impact, EnergyImpact::Intensive);
        assert_eq!(f[0].tod_minutes, 14 * 60 + 30);
        assert_eq!(f[0].prior_event, Some(Cause::Programmed(EventKind::ScheduleHome)));
    }

    #[test]
    fn beyond_adaptation_cutoff() {
        let cs = [
            sc(at(14, 0), 64.0, 68.0, Cause::Programmed(EventKind::ScheduleHome)),
            sc(at(16, 30), 68.0, 70.0, Cause::Manual),
        ];
        let f = compute_ttd_dod(&cs, &attribute_prior_event(&cs), &[seg(at(13, 0), at(17, 0))]);
        assert!(!f[0].within_2h);
        assert!(!f[0].in_analysis_set());
        assert_eq!(f[0].minutes_since_prev_sc, Some(150));
    }

    #[test]
    fn unoccupied_interval_has_no_ttd() {
        let cs = [
            sc(at(14, 0), 64.0, 68.0, Cause::Programmed(EventKind::ScheduleHome)),
            sc(at(14, 30), 68.0, 70.0, Cause::Manual),
        ];
        let segs = [seg(at(13, 0), at(14, 10)), seg(at(14, 20), at(15, 0))];
        let f = compute_ttd_dod(&cs, &attribute_prior_event(&cs), &segs);
        assert_eq!(f[0].ttd_minutes, None);
        assert_eq!(f[0].minutes_since_prev_sc, Some(30));
    }

    #[test]
    fn first_change_of_home() {
        let cs = [sc(at(14, 0), 68.0, 70.0, Cause::Manual)];
        let f = compute_ttd_dod(&cs, &[None], &[seg(at(13, 0), at(16, 0))]);
        assert_eq!(f[0].ttd_minutes, None);
        assert_eq!(f[0].prior_event, None);
        assert_eq!(f[0].duration_to_next_sc_minutes, None);
    }

    #[test]
    fn energy_impact_table() {
        assert_eq!(classify_energy_impact(HvacMode::Heat, 2.0), EnergyImpact::Intensive);
        assert_eq!(classify_energy_impact(HvacMode::Cool, -2.0), EnergyImpact::Intensive);
        assert_eq!(classify_energy_impact(HvacMode::Heat, -3.0), EnergyImpact::Saving);
        assert_eq!(classify_energy_impact(HvacMode::Cool, 1.0), EnergyImpact::Saving);
    }
}
