use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Clock times of the weekday program, minutes after midnight. Weekends skip `away`/`home`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleTemplate {
    pub awake: u32,
    pub away: u32,
    pub home: u32,
    pub sleep: u32,
}

impl Default for ScheduleTemplate {
    fn default() -> Self {
        ScheduleTemplate {
            awake: 6 * 60,
            away: 9 * 60,
            home: 18 * 60,
            sleep: 22 * 60,
        }
    }
}

/// When occupants are out, minutes after midnight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OccupancyPattern {
    /// Weekday departure, uniform in `[lo, hi)`.
    pub depart: (f64, f64),
    /// Weekday return.
    pub return_home: (f64, f64),
    /// Chance of staying in on a weekday.
    pub stay_home_prob: f64,
    /// Chance of one outing on a weekend day.
    pub weekend_outing_prob: f64,
    pub outing_start: (f64, f64),
    pub outing_minutes: (f64, f64),
}

impl Default for OccupancyPattern {
    fn default() -> Self {
        OccupancyPattern {
            depart: (8.25 * 60.0, 9.5 * 60.0),
            return_home: (17.0 * 60.0, 19.5 * 60.0),
            stay_home_prob: 0.2,
            weekend_outing_prob: 0.6,
            outing_start: (10.0 * 60.0, 14.0 * 60.0),
            outing_minutes: (60.0, 240.0),
        }
    }
}

/// Planted override law: the conditional median TTD at `|DoD|` °F is `a·exp(b·|DoD|)` hours.
///
/// Non-immediate TTDs are lognormal with log-sd `sigma`, truncated to
/// `(floor, cap]` minutes (`(floor, follow_up_cap]` for follow-ups), with the location
/// chosen so the truncated median equals the law. A share `immediate_fraction` of initial
/// overrides instead follows within `immediate` minutes, as if the occupant noticed the
/// change itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BehaviorLaw {
    pub a_hours: f64,
    #[serde(rename = "b_per_degF")]
    pub b_per_degf: f64,
    pub sigma: f64,
    pub immediate_fraction: f64,
    pub immediate: (f64, f64),
    pub floor_minutes: f64,
    pub cap_minutes: f64,
    pub follow_up_cap_minutes: f64,
}

impl Default for BehaviorLaw {
    fn default() -> Self {
        BehaviorLaw {
            a_hours: 0.54,
            b_per_degf: -0.08,
            sigma: 0.5,
            immediate_fraction: 0.2,
            immediate: (5.0, 10.0),
            floor_minutes: 15.0,
            cap_minutes: 115.0,
            follow_up_cap_minutes: 55.0,
        }
    }
}

impl BehaviorLaw {
    pub fn median_minutes(&self, dod_abs_f: f64) -> f64 {
        self.a_hours * (self.b_per_degf * dod_abs_f).exp() * 60.0
    }
}

/// PIR sensor bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorBias {
    pub tpr: f64,
    pub fpr: f64,
}

impl Default for SensorBias {
    fn default() -> Self {
        SensorBias { tpr: 0.33, fpr: 0.03 }
    }
}

/// Where within its 5-minute interval a manual change lands.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChangeTiming {
    /// Wherever the drawn TTD puts it.
    #[default]
    Uniform,
    /// Always this many minutes into the interval.
    Fixed(f64),
    /// On the interval boundary, so no sample is time-averaged.
    GridAligned,
}

/// Shares of override episodes by follow-up behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MentalMix {
    pub valve_trait: f64,
    pub feedback_misestimate: f64,
    pub feedback: f64,
    /// Chance an episode follows its home's own type rather than a fresh draw from the mix.
    pub persistence: f64,
}

impl Default for MentalMix {
    fn default() -> Self {
        MentalMix {
            valve_trait: 0.2,
            feedback_misestimate: 0.52,
            feedback: 0.28,
            persistence: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_homes: usize,
    pub days: u32,
    pub start: NaiveDate,
    pub fahrenheit_fraction: f64,
    pub single_occupant_fraction: f64,
    pub schedule: ScheduleTemplate,
    pub occupancy: OccupancyPattern,
    pub law: BehaviorLaw,
    /// Chance an occupant at home overrides after a programmed change.
    pub reaction_prob: f64,
    /// Share of initial overrides that raise energy use.
    pub intensive_fraction: f64,
    /// Initial override size in unit steps is `k` with weight `decay^(k-1)`, `k ≤ max_steps`.
    pub dod_decay: f64,
    pub max_dod_steps: u32,
    pub mental: MentalMix,
    /// Follow-up counts of valve-trait episodes, inclusive.
    pub valve_follow_ups: (u32, u32),
    /// Follow-up size in unit steps, inclusive.
    pub follow_up_steps: (u32, u32),
    pub sensor: SensorBias,
    pub change_timing: ChangeTiming,
    /// The occupant's own presence trips the thermostat's sensor when overriding.
    pub motion_at_override: bool,
    /// Timed hold lengths, hours; one is drawn per episode.
    pub hold_hours: Vec<f64>,
    pub smart_recovery_fraction: f64,
    pub smart_recovery_lead_minutes: f64,
    /// Outdoor daily mean is `mean + amplitude·sin(2π(doy − phase_day)/365)`, °F.
    pub outdoor_mean_f: f64,
    pub outdoor_amplitude_f: f64,
    pub outdoor_phase_day: f64,
    /// Days with a mean below this heat; others cool.
    pub heat_below_f: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            n_homes: 10,
            days: 180,
            start: NaiveDate::from_ymd_opt(2017, 2, 1).expect("valid date"),
            fahrenheit_fraction: 0.8,
            single_occupant_fraction: 0.3,
            schedule: ScheduleTemplate::default(),
            occupancy: OccupancyPattern::default(),
            law: BehaviorLaw::default(),
            reaction_prob: 0.15,
            intensive_fraction: 0.58,
            dod_decay: 0.7,
            max_dod_steps: 9,
            mental: MentalMix::default(),
            valve_follow_ups: (2, 3),
            follow_up_steps: (1, 2),
            sensor: SensorBias::default(),
            change_timing: ChangeTiming::Uniform,
            motion_at_override: true,
            hold_hours: vec![2.0, 4.0],
            smart_recovery_fraction: 0.2,
            smart_recovery_lead_minutes: 30.0,
            outdoor_mean_f: 55.0,
            outdoor_amplitude_f: 25.0,
            outdoor_phase_day: 105.0,
            heat_below_f: 62.0,
        }
    }
}

impl SynthConfig {
    /// Perfect sensors and grid-aligned changes: every pipeline stage should be exact.
    pub fn noiseless(mut self) -> Self {
        self.sensor = SensorBias { tpr: 1.0, fpr: 0.0 };
        self.change_timing = ChangeTiming::GridAligned;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} = {v} is not in [0, 1]"))
            }
        };
        unit("fahrenheit_fraction", self.fahrenheit_fraction)?;
        unit("single_occupant_fraction", self.single_occupant_fraction)?;
        unit("reaction_prob", self.reaction_prob)?;
        unit("intensive_fraction", self.intensive_fraction)?;
        unit("sensor.tpr", self.sensor.tpr)?;
        unit("sensor.fpr", self.sensor.fpr)?;
        unit("law.immediate_fraction", self.law.immediate_fraction)?;
        unit("mental.persistence", self.mental.persistence)?;
        unit("occupancy.stay_home_prob", self.occupancy.stay_home_prob)?;
        unit("occupancy.weekend_outing_prob", self.occupancy.weekend_outing_prob)?;
        unit("smart_recovery_fraction", self.smart_recovery_fraction)?;
        let m = &self.mental;
        if [m.valve_trait, m.feedback_misestimate, m.feedback].iter().any(|v| *v < 0.0)
            || (m.valve_trait + m.feedback_misestimate + m.feedback - 1.0).abs() > 1e-9
        {
            return Err("mental mix must be non-negative and sum to 1".into());
        }
        if !(self.law.a_hours > 0.0) || !(self.law.sigma > 0.0) {
            return Err("law.a_hours and law.sigma must be positive".into());
        }
        if !(self.law.floor_minutes < self.law.follow_up_cap_minutes
            && self.law.follow_up_cap_minutes <= self.law.cap_minutes)
        {
            return Err("law windows must satisfy floor < follow_up_cap <= cap".into());
        }
        if self.max_dod_steps == 0 || self.follow_up_steps.0 == 0 || self.follow_up_steps.0 > self.follow_up_steps.1 {
            return Err("override step ranges must be positive and ordered".into());
        }
        if self.valve_follow_ups.0 < 2 || self.valve_follow_ups.0 > self.valve_follow_ups.1 {
            return Err("valve_follow_ups must be ordered and at least 2".into());
        }
        if self.hold_hours.is_empty() || self.hold_hours.iter().any(|h| *h * 60.0 <= self.law.follow_up_cap_minutes) {
            return Err("hold_hours must be non-empty and outlast a follow-up gap".into());
        }
        if let ChangeTiming::Fixed(dt) = self.change_timing {
            if !(0.0..5.0).contains(&dt) {
                return Err(format!("fixed change offset {dt} not in [0, 5)"));
            }
        }
        if self.days == 0 {
            return Err("days must be positive".into());
        }
        Ok(())
    }
}
