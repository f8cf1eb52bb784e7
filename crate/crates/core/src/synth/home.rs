use chrono::{Datelike, Duration, NaiveDateTime, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ChangeTiming, SynthConfig};
use super::law::TruncatedLogNormal;
use crate::condition::TempUnit;
use crate::features::{Cause, MentalModelClass};
use crate::ingest::{EventKind, HoldDuration, HomeMeta, Sample};
use crate::{c_to_f, HvacMode, SAMPLE_MINUTES};

const STEP: f64 = SAMPLE_MINUTES as f64;
const DAY: f64 = 1440.0;
/// Minimum spacing from a previous override to a new episode's programmed trigger.
const EPISODE_GAP_MINUTES: f64 = 65.0;
/// Room an initial override needs before the next programmed change.
const TRANSITION_MARGIN_MINUTES: f64 = 10.0;
/// A hold ending this close before a transition just runs into it.
const HOLD_MERGE_MINUTES: f64 = 15.0;
const INDOOR_TAU_MINUTES: f64 = 45.0;
const DIURNAL_AMPLITUDE_F: f64 = 8.0;

/// A setpoint change on the column the HVAC is running in. Times are minutes since the
/// corpus start; `time` is the timestamp of the sample whose interval contains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueChange {
    pub minute: f64,
    pub time: NaiveDateTime,
    pub mode: HvacMode,
    /// °F.
    pub prev: f64,
    pub new: f64,
    pub cause: Cause,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueMsc {
    /// Index into [`HomeTruth::changes`].
    pub change: usize,
    /// °F, signed.
    pub dod: f64,
    /// Exact minutes from the preceding change.
    pub ttd_minutes: f64,
    pub immediate: bool,
    pub follow_up: bool,
    pub episode: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrueEpisode {
    pub class: MentalModelClass,
    pub mode: HvacMode,
    pub follow_ups: u32,
}

/// Everything planted in one home.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeTruth {
    pub home_id: String,
    pub unit: TempUnit,
    pub mental_type: MentalModelClass,
    pub smart_recovery: bool,
    /// Half-open `[start, end)` minutes with nobody home.
    pub absences: Vec<(f64, f64)>,
    pub changes: Vec<TrueChange>,
    pub mscs: Vec<TrueMsc>,
    pub episodes: Vec<TrueEpisode>,
}

impl HomeTruth {
    /// Whether anyone is home at `minute`.
    pub fn present_at(&self, minute: f64) -> bool {
        let i = self.absences.partition_point(|a| a.1 <= minute);
        self.absences.get(i).is_none_or(|a| minute < a.0)
    }
}

#[derive(Debug, Clone)]
pub struct SynthHome {
    pub meta: HomeMeta,
    pub samples: Vec<Sample>,
    pub truth: HomeTruth,
}

/// TTD laws by unit (°F then °C) and step count.
#[derive(Debug, Clone)]
pub(crate) struct LawTable {
    initial: [Vec<TruncatedLogNormal>; 2],
    follow: [Vec<TruncatedLogNormal>; 2],
}

impl LawTable {
    pub(crate) fn new(cfg: &SynthConfig) -> Result<Self, String> {
        let law = &cfg.law;
        let max_k = cfg.max_dod_steps.max(cfg.follow_up_steps.1);
        let build = |step_f: f64, cap: f64| -> Result<Vec<TruncatedLogNormal>, String> {
            (1..=max_k)
                .map(|k| {
                    let m = law.median_minutes(k as f64 * step_f);
                    TruncatedLogNormal::with_median(m, law.sigma, law.floor_minutes, cap).ok_or_else(|| {
                        format!(
                            "planted median {m:.2} min at |DoD| {:.1}°F is outside ({}, {}] min",
                            k as f64 * step_f,
                            law.floor_minutes,
                            cap
                        )
                    })
                })
                .collect()
        };
        let c_step = c_to_f(0.5) - c_to_f(0.0);
        Ok(LawTable {
            initial: [build(1.0, law.cap_minutes)?, build(c_step, law.cap_minutes)?],
            follow: [
                build(1.0, law.follow_up_cap_minutes)?,
                build(c_step, law.follow_up_cap_minutes)?,
            ],
        })
    }
}

pub(crate) fn home_id(index: usize) -> String {
    format!("home_{index:05}")
}

pub(crate) fn home_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

#[derive(Debug, Clone, Copy)]
struct SchedPoint {
    t: f64,
    event: EventKind,
    heat: f64,
    cool: f64,
}

/// Native-unit piecewise-constant setpoint history.
#[derive(Debug)]
struct Timeline(Vec<(f64, f64)>);

impl Timeline {
    fn current(&self) -> f64 {
        self.0.last().expect("timeline starts non-empty").1
    }

    fn set(&mut self, t: f64, v: f64) -> bool {
        if v == self.current() {
            return false;
        }
        self.0.push((t, v));
        true
    }
}

/// Mean of a step function over consecutive windows.
struct Averager<'a> {
    tl: &'a [(f64, f64)],
    j: usize,
}

impl Averager<'_> {
    fn mean(&mut self, a: f64, b: f64) -> f64 {
        while self.j + 1 < self.tl.len() && self.tl[self.j + 1].0 <= a {
            self.j += 1;
        }
        let mut acc = 0.0;
        let mut k = self.j;
        let mut lo = a;
        while lo < b {
            let hi = self.tl.get(k + 1).map_or(b, |n| n.0.min(b));
            acc += self.tl[k].1 * (hi - lo);
            lo = hi;
            k += 1;
        }
        acc / (b - a)
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn hold_kind(hours: f64) -> HoldDuration {
    match hours {
        h if h == 2.0 => HoldDuration::TwoHours,
        h if h == 4.0 => HoldDuration::FourHours,
        _ => HoldDuration::UntilNext,
    }
}

fn outdoor_daily_mean(cfg: &SynthConfig, ordinal: u32) -> f64 {
    let phase = 2.0 * std::f64::consts::PI * (ordinal as f64 - cfg.outdoor_phase_day) / 365.0;
    cfg.outdoor_mean_f + cfg.outdoor_amplitude_f * phase.sin()
}

struct Sim<'a> {
    cfg: &'a SynthConfig,
    laws: &'a LawTable,
    rng: ChaCha8Rng,
    celsius: bool,
    mental_type: MentalModelClass,
    day_modes: Vec<HvacMode>,
    total: f64,
    points: Vec<SchedPoint>,
    absences: Vec<(f64, f64)>,
    heat: Timeline,
    cool: Timeline,
    events: Vec<(f64, EventKind)>,
    changes: Vec<TrueChange>,
    mscs: Vec<TrueMsc>,
    episodes: Vec<TrueEpisode>,
    last_msc: f64,
    start: NaiveDateTime,
}

impl Sim<'_> {
    fn to_f(&self, v: f64) -> f64 {
        if self.celsius {
            c_to_f(v)
        } else {
            v
        }
    }

    fn mode_at(&self, t: f64) -> HvacMode {
        let d = ((t / DAY) as usize).min(self.day_modes.len() - 1);
        self.day_modes[d]
    }

    fn column(&mut self, mode: HvacMode) -> &mut Timeline {
        match mode {
            HvacMode::Heat => &mut self.heat,
            HvacMode::Cool => &mut self.cool,
        }
    }

    fn sample_time(&self, t: f64) -> NaiveDateTime {
        let k = (t / STEP).floor() as i64;
        self.start + Duration::minutes(k * SAMPLE_MINUTES)
    }

    fn record(&mut self, t: f64, mode: HvacMode, prev: f64, new: f64, cause: Cause) -> usize {
        self.changes.push(TrueChange {
            minute: t,
            time: self.sample_time(t),
            mode,
            prev: self.to_f(prev),
            new: self.to_f(new),
            cause,
        });
        self.changes.len() - 1
    }

    /// Moves both columns to the given levels; true when the running column changed.
    fn apply(&mut self, t: f64, heat: f64, cool: f64, cause: Cause) -> bool {
        let mode = self.mode_at(t);
        let mut changed = false;
        for (m, v) in [(HvacMode::Heat, heat), (HvacMode::Cool, cool)] {
            let prev = self.column(m).current();
            if self.column(m).set(t, v) && m == mode {
                self.record(t, m, prev, v, cause);
                changed = true;
            }
        }
        changed
    }

    fn place(&self, t: f64) -> f64 {
        match self.cfg.change_timing {
            ChangeTiming::Uniform => t,
            ChangeTiming::Fixed(dt) => (t / STEP).floor() * STEP + dt,
            ChangeTiming::GridAligned => (t / STEP).floor() * STEP,
        }
    }

    fn occupied_through(&self, a: f64, b: f64) -> bool {
        let i = self.absences.partition_point(|x| x.1 <= a);
        self.absences.get(i).is_none_or(|x| x.0 >= b)
    }

    fn draw_class(&mut self) -> MentalModelClass {
        if self.rng.random::<f64>() < self.cfg.mental.persistence {
            return self.mental_type;
        }
        let u = self.rng.random::<f64>();
        let m = &self.cfg.mental;
        if u < m.valve_trait {
            MentalModelClass::ValveTrait
        } else if u < m.valve_trait + m.feedback_misestimate {
            MentalModelClass::FeedbackMisestimate
        } else {
            MentalModelClass::Feedback
        }
    }

    fn draw_steps(&mut self) -> u32 {
        let n = self.cfg.max_dod_steps;
        let d = self.cfg.dod_decay;
        let total: f64 = (0..n).map(|i| d.powi(i as i32)).sum();
        let mut u = self.rng.random::<f64>() * total;
        for k in 1..=n {
            u -= d.powi(k as i32 - 1);
            if u < 0.0 {
                return k;
            }
        }
        n
    }

    /// Maybe starts an override episode reacting to the programmed change at `t0`.
    /// `next` indexes the first schedule point after `t0`. Returns the hold's end.
    fn opportunity(&mut self, t0: f64, next: usize) -> Option<f64> {
        if self.rng.random::<f64>() >= self.cfg.reaction_prob {
            return None;
        }
        let mode = self.mode_at(t0);
        let law = self.cfg.law;
        let horizon = t0 + law.cap_minutes + TRANSITION_MARGIN_MINUTES;
        let episode_budget = law.cap_minutes
            + f64::from(self.cfg.valve_follow_ups.1) * (law.follow_up_cap_minutes + STEP)
            + TRANSITION_MARGIN_MINUTES;
        let current = match mode {
            HvacMode::Heat => self.heat.current(),
            HvacMode::Cool => self.cool.current(),
        };
        let next_change = self.points[next..]
            .iter()
            .find(|p| {
                let v = match mode {
                    HvacMode::Heat => p.heat,
                    HvacMode::Cool => p.cool,
                };
                v != current
            })
            .map_or(f64::INFINITY, |p| p.t);
        // Feasibility depends only on t0, never on the draws, so it cannot bias the TTDs.
        if t0 - self.last_msc < EPISODE_GAP_MINUTES
            || t0 + episode_budget > self.total
            || next_change < horizon
            || !self.occupied_through(t0, horizon)
        {
            return None;
        }

        let class = self.draw_class();
        let follow_ups = match class {
            MentalModelClass::ValveTrait => {
                let (lo, hi) = self.cfg.valve_follow_ups;
                self.rng.random_range(lo..=hi)
            }
            MentalModelClass::FeedbackMisestimate => 1,
            MentalModelClass::Feedback => 0,
        };
        let hours = self.cfg.hold_hours[self.rng.random_range(0..self.cfg.hold_hours.len())];
        let hold = EventKind::ManualHold(hold_kind(hours));
        let unit = usize::from(self.celsius);
        let step = if self.celsius { 0.5 } else { 1.0 };
        let episode = self.episodes.len();
        self.episodes.push(TrueEpisode {
            class,
            mode,
            follow_ups,
        });

        let k = self.draw_steps();
        let intensive = self.rng.random::<f64>() < self.cfg.intensive_fraction;
        let first_sign = if intensive {
            mode.intensive_sign()
        } else {
            -mode.intensive_sign()
        };
        let immediate = self.rng.random::<f64>() < law.immediate_fraction;
        let ttd = if immediate {
            uniform(&mut self.rng, law.immediate)
        } else {
            self.laws.initial[unit][k as usize - 1].sample(&mut self.rng)
        };
        let mut t = self.place(t0 + ttd);
        let mut prev_t = t0;
        let mut value = current + first_sign * k as f64 * step;
        self.override_to(t, mode, value, hold, t - prev_t, immediate, false, episode);

        for j in 0..follow_ups {
            let (lo, hi) = self.cfg.follow_up_steps;
            let k = self.rng.random_range(lo..=hi);
            // Valve-trait users push further, then back off; others correct either way.
            let sign = match class {
                MentalModelClass::ValveTrait if j == 0 => first_sign,
                MentalModelClass::ValveTrait => -first_sign,
                _ => {
                    if self.rng.random::<bool>() {
                        first_sign
                    } else {
                        -first_sign
                    }
                }
            };
            let gap = self.laws.follow[unit][k as usize - 1].sample(&mut self.rng);
            prev_t = t;
            t = self.place(t + gap);
            value += sign * k as f64 * step;
            self.override_to(t, mode, value, hold, t - prev_t, false, true, episode);
        }
        self.last_msc = t;

        // Nobody leaves mid-episode.
        let stay_until = t + TRANSITION_MARGIN_MINUTES;
        let i = self.absences.partition_point(|x| x.1 <= t0);
        let mut j = i;
        while j < self.absences.len() && self.absences[j].0 < stay_until {
            self.absences[j].0 = stay_until;
            j += 1;
        }
        self.absences.retain(|x| x.0 < x.1);

        Some(t + hours * 60.0)
    }

    #[allow(clippy::too_many_arguments)]
    fn override_to(
        &mut self,
        t: f64,
        mode: HvacMode,
        value: f64,
        hold: EventKind,
        ttd: f64,
        immediate: bool,
        follow_up: bool,
        episode: usize,
    ) {
        let prev = self.column(mode).current();
        self.column(mode).0.push((t, value));
        self.events.push((t, hold));
        let change = self.record(t, mode, prev, value, Cause::Manual);
        let dod = self.to_f(value) - self.to_f(prev);
        self.mscs.push(TrueMsc {
            change,
            dod,
            ttd_minutes: ttd,
            immediate,
            follow_up,
            episode,
        });
    }

    fn run(&mut self) {
        let mut hold: Option<f64> = None;
        let (mut p_heat, mut p_cool, mut p_event) = (self.heat.current(), self.cool.current(), self.events[0].1);
        let mut i = 0;
        loop {
            let next_t = self.points.get(i).map_or(f64::INFINITY, |p| p.t);
            if let Some(end) = hold {
                if end <= next_t {
                    hold = None;
                    if end >= self.total {
                        break;
                    }
                    if next_t - end < HOLD_MERGE_MINUTES {
                        continue;
                    }
                    self.events.push((end, p_event));
                    if self.apply(end, p_heat, p_cool, Cause::Programmed(p_event)) {
                        hold = self.opportunity(end, i);
                    }
                    continue;
                }
            }
            let Some(p) = self.points.get(i).copied() else {
                break;
            };
            i += 1;
            (p_heat, p_cool, p_event) = (p.heat, p.cool, p.event);
            if hold.is_some() {
                continue;
            }
            self.events.push((p.t, p.event));
            if self.apply(p.t, p.heat, p.cool, Cause::Programmed(p.event)) {
                hold = self.opportunity(p.t, i);
            }
        }
    }
}

/// One synthetic home, reproducible from `(cfg.seed, index)` alone.
pub(crate) fn generate_home(
    cfg: &SynthConfig,
    laws: &LawTable,
    index: usize,
    mental_type: MentalModelClass,
) -> SynthHome {
    let mut rng = home_rng(cfg.seed, index);
    let id = home_id(index);
    let celsius = rng.random::<f64>() >= cfg.fahrenheit_fraction;
    let occupants = if rng.random::<f64>() < cfg.single_occupant_fraction {
        1
    } else {
        rng.random_range(2..=4u32)
    };
    let smart = rng.random::<f64>() < cfg.smart_recovery_fraction;
    let floor_area = (rng.random_range(800.0..3500.0f64) / 10.0).round() * 10.0;

    // Levels per period: awake, away, home, sleep.
    let (heat_lv, cool_lv) = if celsius {
        let h = 20.0 + 0.5 * rng.random_range(0..=4) as f64;
        let c = 23.5 + 0.5 * rng.random_range(0..=3) as f64;
        ([h, h - 3.0, h, h - 2.0], [c, c + 3.0, c, c + 2.0])
    } else {
        let h = rng.random_range(68..=72) as f64;
        let c = rng.random_range(74..=77) as f64;
        ([h, h - 6.0, h, h - 4.0], [c, c + 6.0, c, c + 3.0])
    };

    let start = cfg.start.and_hms_opt(0, 0, 0).expect("midnight");
    let s = cfg.schedule;
    let occ = cfg.occupancy;
    let mut points = Vec::new();
    let mut absences = Vec::new();
    let mut day_modes = Vec::with_capacity(cfg.days as usize);
    let mut daily_mean = Vec::with_capacity(cfg.days as usize);
    for d in 0..cfg.days {
        let date = cfg.start + Duration::days(d as i64);
        let mean = outdoor_daily_mean(cfg, date.ordinal());
        daily_mean.push(mean);
        day_modes.push(if mean < cfg.heat_below_f { HvacMode::Heat } else { HvacMode::Cool });
        let base = d as f64 * DAY;
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        let periods: &[(u32, EventKind, usize)] = if weekend {
            &[(s.awake, EventKind::ScheduleAwake, 0), (s.sleep, EventKind::ScheduleSleep, 3)]
        } else {
            &[
                (s.awake, EventKind::ScheduleAwake, 0),
                (s.away, EventKind::ScheduleAway, 1),
                (s.home, EventKind::ScheduleHome, 2),
                (s.sleep, EventKind::ScheduleSleep, 3),
            ]
        };
        for &(minute, event, lv) in periods {
            let t = base + minute as f64;
            let comfort = matches!(event, EventKind::ScheduleAwake | EventKind::ScheduleHome);
            if smart && comfort {
                points.push(SchedPoint {
                    t: t - cfg.smart_recovery_lead_minutes,
                    event: EventKind::SmartRecovery,
                    heat: heat_lv[lv],
                    cool: cool_lv[lv],
                });
            }
            points.push(SchedPoint {
                t,
                event,
                heat: heat_lv[lv],
                cool: cool_lv[lv],
            });
        }
        if weekend {
            if rng.random::<f64>() < occ.weekend_outing_prob {
                let a = base + uniform(&mut rng, occ.outing_start);
                absences.push((a, a + uniform(&mut rng, occ.outing_minutes)));
            }
        } else if rng.random::<f64>() >= occ.stay_home_prob {
            let a = base + uniform(&mut rng, occ.depart);
            let b = base + uniform(&mut rng, occ.return_home);
            if b > a {
                absences.push((a, b));
            }
        }
    }
    points.retain(|p| p.t >= 0.0);

    let mut sim = Sim {
        cfg,
        laws,
        rng,
        celsius,
        mental_type,
        day_modes,
        total: cfg.days as f64 * DAY,
        points,
        absences,
        heat: Timeline(vec![(0.0, heat_lv[3])]),
        cool: Timeline(vec![(0.0, cool_lv[3])]),
        events: vec![(0.0, EventKind::ScheduleSleep)],
        changes: Vec::new(),
        mscs: Vec::new(),
        episodes: Vec::new(),
        last_msc: f64::NEG_INFINITY,
        start,
    };
    sim.run();

    let samples = render(&mut sim, &daily_mean);
    let truth = HomeTruth {
        home_id: id.clone(),
        unit: if celsius { TempUnit::Celsius } else { TempUnit::Fahrenheit },
        mental_type,
        smart_recovery: smart,
        absences: sim.absences,
        changes: sim.changes,
        mscs: sim.mscs,
        episodes: sim.episodes,
    };
    let meta = HomeMeta {
        home_id: id,
        occupant_count: Some(occupants),
        floor_area: Some(floor_area),
        country: Some(if celsius { "CA" } else { "US" }.to_string()),
        extra: Default::default(),
    };
    SynthHome { meta, samples, truth }
}

/// Five-minute samples: setpoints averaged over each interval, event tag as of its end.
fn render(sim: &mut Sim<'_>, daily_mean: &[f64]) -> Vec<Sample> {
    let n = (sim.total / STEP) as usize;
    let cfg = sim.cfg;
    let mut override_slots = vec![false; n];
    if cfg.motion_at_override {
        for m in &sim.mscs {
            let k = (sim.changes[m.change].minute / STEP) as usize;
            if k < n {
                override_slots[k] = true;
            }
        }
    }
    let alpha = 1.0 - (-STEP / INDOOR_TAU_MINUTES).exp();
    let heat_tl = std::mem::take(&mut sim.heat.0);
    let cool_tl = std::mem::take(&mut sim.cool.0);
    let mut heat = Averager { tl: &heat_tl, j: 0 };
    let mut cool = Averager { tl: &cool_tl, j: 0 };
    let mut ev = 0;
    let mut absent = 0;
    let mut indoor = f64::NAN;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let a = k as f64 * STEP;
        let b = a + STEP;
        let h = sim.to_f(heat.mean(a, b));
        let c = sim.to_f(cool.mean(a, b));
        while ev + 1 < sim.events.len() && sim.events[ev + 1].0 < b {
            ev += 1;
        }
        let mid = a + STEP / 2.0;
        while absent < sim.absences.len() && sim.absences[absent].1 <= mid {
            absent += 1;
        }
        let present = sim.absences.get(absent).is_none_or(|x| mid < x.0);
        let p = if present { cfg.sensor.tpr } else { cfg.sensor.fpr };
        let motion = sim.rng.random::<f64>() < p || override_slots[k];

        let day = (k as f64 * STEP / DAY) as usize;
        let mode = sim.day_modes[day];
        let target = match mode {
            HvacMode::Heat => h,
            HvacMode::Cool => c,
        };
        if indoor.is_nan() {
            indoor = target;
        }
        let demand = match mode {
            HvacMode::Heat => target - indoor,
            HvacMode::Cool => indoor - target,
        };
        let runtime = (90.0 + 120.0 * demand).clamp(0.0, 300.0).round() as u16;
        let (heat_runtime, cool_runtime) = match mode {
            HvacMode::Heat => (runtime, 0),
            HvacMode::Cool => (0, runtime),
        };
        let minute_of_day = a % DAY;
        let outdoor = daily_mean[day]
            + DIURNAL_AMPLITUDE_F * (2.0 * std::f64::consts::PI * (minute_of_day - 540.0) / DAY).sin();
        out.push(Sample {
            timestamp: sim.start + Duration::minutes(k as i64 * SAMPLE_MINUTES),
            heat_setpoint: h,
            cool_setpoint: c,
            indoor_temp: indoor,
            outdoor_temp: Some(outdoor),
            event: sim.events[ev].1,
            motion,
            heat_runtime,
            cool_runtime,
            mode_hint: None,
        });
        indoor += (target - indoor) * alpha;
    }
    out
}
