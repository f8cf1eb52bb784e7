use std::fmt;

use chrono::{Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::condition::ConditionedHome;
use crate::ingest::{EventKind, Sample};
use crate::{HvacMode, SAMPLE_MINUTES};

/// Why a setpoint changed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Cause {
    Manual,
    Programmed(EventKind),
}

impl Cause {
    pub fn token(self) -> &'static str {
        match self {
            Cause::Manual => "manual",
            Cause::Programmed(e) => e.token(),
        }
    }

    pub fn parse_token(s: &str) -> Option<Cause> {
        if s.eq_ignore_ascii_case("manual") {
            return Some(Cause::Manual);
        }
        EventKind::parse_token(s).map(Cause::Programmed)
    }

    pub fn is_manual(self) -> bool {
        self == Cause::Manual
    }
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl From<Cause> for String {
    fn from(c: Cause) -> String {
        c.token().to_string()
    }
}

impl TryFrom<String> for Cause {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Cause::parse_token(&s).ok_or_else(|| format!("unknown cause '{s}'"))
    }
}

/// A change of the active-mode setpoint between two consecutive samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetpointChange {
    pub home_id: String,
    /// Position of the sample carrying the new value.
    pub index: usize,
    pub time: NaiveDateTime,
    pub mode: HvacMode,
    /// °F.
    pub prev_setpoint: f64,
    /// °F.
    pub new_setpoint: f64,
    pub indoor_temp: f64,
    pub cause: Cause,
    pub deaveraged: bool,
}

impl SetpointChange {
    pub fn delta(&self) -> f64 {
        self.new_setpoint - self.prev_setpoint
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectConfig {
    /// A column's mode counts as active if that equipment ran within this many hours.
    pub runtime_window_hours: i64,
    /// Changes smaller than this (°F) are numerical noise.
    pub min_change_f: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            runtime_window_hours: 12,
            min_change_f: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectDiagnostics {
    /// Column changes dropped because neither a mode hint nor recent runtime named the mode.
    pub unresolved: u64,
    /// Changes across a hole in the record, not attributable to one interval.
    pub across_gaps: u64,
    /// Samples where both columns changed at once.
    pub simultaneous: u64,
}

impl DetectDiagnostics {
    pub fn merge(&mut self, o: &DetectDiagnostics) {
        self.unresolved += o.unresolved;
        self.across_gaps += o.across_gaps;
        self.simultaneous += o.simultaneous;
    }
}

/// Sorted timestamps at which a mode's equipment was running.
struct RuntimeIndex {
    heat: Vec<NaiveDateTime>,
    cool: Vec<NaiveDateTime>,
}

impl RuntimeIndex {
    fn new(samples: &[Sample]) -> Self {
        let pick = |f: fn(&Sample) -> u16| {
            samples
                .iter()
                .filter(|s| f(s) > 0)
                .map(|s| s.timestamp)
                .collect()
        };
        RuntimeIndex {
            heat: pick(|s| s.heat_runtime),
            cool: pick(|s| s.cool_runtime),
        }
    }

    fn ran_near(&self, mode: HvacMode, t: NaiveDateTime, window: Duration) -> bool {
        let v = match mode {
            HvacMode::Heat => &self.heat,
            HvacMode::Cool => &self.cool,
        };
        let i = v.partition_point(|&x| x < t - window);
        v.get(i).is_some_and(|&x| x <= t + window)
    }
}

/// Setpoint changes of one conditioned home, in time order.
///
/// A changed column is attributed to its mode when the sample's mode hint names that mode,
/// or, without a hint, when that mode's equipment ran within ±12 h. Each column is resolved
/// on its own, so in auto mode a sample may yield two changes. The cause is
/// [`Cause::Manual`] when the sample carries a manual hold, otherwise the sample's event.
pub fn detect_changes(
    home: &ConditionedHome,
    cfg: &DetectConfig,
) -> (Vec<SetpointChange>, DetectDiagnostics) {
    detect_changes_in(
        &home.home_id,
        &home.samples,
        Some((&home.heat_deaveraged, &home.cool_deaveraged)),
        cfg,
    )
}

/// [`detect_changes`] over raw samples, optionally with per-column de-averaging flags.
pub fn detect_changes_in(
    home_id: &str,
    samples: &[Sample],
    deaveraged: Option<(&[bool], &[bool])>,
    cfg: &DetectConfig,
) -> (Vec<SetpointChange>, DetectDiagnostics) {
    let runtime = RuntimeIndex::new(samples);
    let window = Duration::hours(cfg.runtime_window_hours);
    let step = Duration::minutes(SAMPLE_MINUTES);
    let mut out = Vec::new();
    let mut diag = DetectDiagnostics::default();

    for i in 1..samples.len() {
        let (prev, cur) = (&samples[i - 1], &samples[i]);
        let heat_changed = (cur.heat_setpoint - prev.heat_setpoint).abs() > cfg.min_change_f;
        let cool_changed = (cur.cool_setpoint - prev.cool_setpoint).abs() > cfg.min_change_f;
        if !heat_changed && !cool_changed {
            continue;
        }
        if cur.timestamp - prev.timestamp != step {
            diag.across_gaps += u64::from(heat_changed) + u64::from(cool_changed);
            continue;
        }
        if heat_changed && cool_changed {
            diag.simultaneous += 1;
        }
        let cause = if cur.event.is_manual() {
            Cause::Manual
        } else {
            Cause::Programmed(cur.event)
        };
        for (mode, changed) in [(HvacMode::Heat, heat_changed), (HvacMode::Cool, cool_changed)] {
            if !changed {
                continue;
            }
            let active = match cur.mode_hint {
                Some(hint) => hint == mode,
                None => runtime.ran_near(mode, cur.timestamp, window),
            };
            if !active {
                diag.unresolved += 1;
                continue;
            }
            let (p, n, flagged) = match mode {
                HvacMode::Heat => (
                    prev.heat_setpoint,
                    cur.heat_setpoint,
                    deaveraged.is_some_and(|(h, _)| h[i]),
                ),
                HvacMode::Cool => (
                    prev.cool_setpoint,
                    cur.cool_setpoint,
                    deaveraged.is_some_and(|(_, c)| c[i]),
                ),
            };
            out.push(SetpointChange {
                home_id: home_id.to_string(),
                index: i,
                time: cur.timestamp,
                mode,
                prev_setpoint: p,
                new_setpoint: n,
                indoor_temp: cur.indoor_temp,
                cause,
                deaveraged: flagged,
            });
        }
    }
    (out, diag)
}

/// Cause of the change immediately before each change; `None` for the first.
pub fn attribute_prior_event(changes: &[SetpointChange]) -> Vec<Option<Cause>> {
    let mut out = Vec::with_capacity(changes.len());
    let mut prev = None;
    for c in changes {
        out.push(prev);
        prev = Some(c.cause);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::HoldDuration;
    use chrono::NaiveDate;

    fn s(i: i64, heat: f64, cool: f64, event: EventKind, hr: u16, cr: u16) -> Sample {
        Sample {
            timestamp: NaiveDate::from_ymd_opt(2017, 1, 2)
                .unwrap()
                .and_hms_opt(6, 0, 0)
                .unwrap()
                + Duration::minutes(5 * i),
            heat_setpoint: heat,
            cool_setpoint: cool,
            indoor_temp: 67.0,
            outdoor_temp: None,
            event,
            motion: true,
            heat_runtime: hr,
            cool_runtime: cr,
            mode_hint: None,
        }
    }

    const HOLD: EventKind = EventKind::ManualHold(HoldDuration::TwoHours);

    #[test]
    fn constant_setpoints() {
        let v: Vec<_> = (0..10).map(|i| s(i, 68.0, 76.0, EventKind::ScheduleHome, 100, 0)).collect();
        assert!(detect_changes_in("h", &v, None, &DetectConfig::default()).0.is_empty());
    }

    #[test]
    fn manual_heat_change() {
        let v = vec![
            s(0, 68.0, 76.0, EventKind::ScheduleHome, 100, 0),
            s(1, 70.0, 76.0, HOLD, 100, 0),
        ];
        let (c, _) = detect_changes_in("h", &v, None, &DetectConfig::default());
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].mode, HvacMode::Heat);
        assert_eq!(c[0].cause, Cause::Manual);
        assert_eq!(c[0].delta(), 2.0);
        let mut all = vec![SetpointChange {
            cause: Cause::Programmed(EventKind::ScheduleHome),
            ..c[0].clone()
        }];
        all.push(c[0].clone());
        assert_eq!(
            attribute_prior_event(&all),
            vec![None, Some(Cause::Programmed(EventKind::ScheduleHome))]
        );
    }

    #[test]
    fn programmed_cool_change() {
        let v = vec![
            s(0, 60.0, 76.0, EventKind::ScheduleAway, 0, 200),
            s(1, 60.0, 72.0, EventKind::ScheduleHome, 0, 200),
        ];
        let (c, _) = detect_changes_in("h", &v, None, &DetectConfig::default());
        assert_eq!(c[0].cause, Cause::Programmed(EventKind::ScheduleHome));
        assert_eq!(c[0].mode, HvacMode::Cool);
    }

    #[test]
    fn idle_column_is_unresolved() {
        let v = vec![
            s(0, 68.0, 76.0, EventKind::ScheduleHome, 100, 0),
            s(1, 64.0, 80.0, EventKind::ScheduleSleep, 100, 0),
        ];
        let (c, d) = detect_changes_in("h", &v, None, &DetectConfig::default());
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].mode, HvacMode::Heat);
        assert_eq!((d.unresolved, d.simultaneous), (1, 1));
    }

    #[test]
    fn no_runtime_anywhere() {
        let v = vec![
            s(0, 68.0, 76.0, EventKind::ScheduleHome, 0, 0),
            s(1, 70.0, 76.0, HOLD, 0, 0),
        ];
        let (c, d) = detect_changes_in("h", &v, None, &DetectConfig::default());
        assert!(c.is_empty());
        assert_eq!(d.unresolved, 1);
    }

    #[test]
    fn runtime_window_edges() {
        let mut v = vec![s(0, 68.0, 76.0, EventKind::None, 0, 0)];
        v.push(s(1, 70.0, 76.0, HOLD, 0, 0));
        // heat ran exactly 12 h after the change
        v.push(s(1 + 144, 70.0, 76.0, EventKind::None, 10, 0));
        let (c, _) = detect_changes_in("h", &v, None, &DetectConfig::default());
        assert_eq!(c.len(), 1);
        v[2] = s(2 + 144, 70.0, 76.0, EventKind::None, 10, 0);
        let (c, _) = detect_changes_in("h", &v, None, &DetectConfig::default());
        assert!(c.is_empty());
    }

    #[test]
    fn cause_tokens_round_trip() {
        for c in [Cause::Manual, Cause::Programmed(EventKind::SmartRecovery)] {
            assert_eq!(Cause::parse_token(c.token()), Some(c));
        }
    }
}
