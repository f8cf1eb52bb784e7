use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

/// Inferred thermostat mental model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MentalModelClass {
    /// Two or more follow-up overrides: treats the setpoint like a valve.
    ValveTrait,
    /// Exactly one follow-up: right model, wrong guess of the comfortable setpoint.
    FeedbackMisestimate,
    /// No follow-up.
    Feedback,
}

impl MentalModelClass {
    pub const ALL: [MentalModelClass; 3] = [
        MentalModelClass::ValveTrait,
        MentalModelClass::FeedbackMisestimate,
        MentalModelClass::Feedback,
    ];

    pub fn from_follow_ups(n: usize) -> Self {
        match n {
            0 => MentalModelClass::Feedback,
            1 => MentalModelClass::FeedbackMisestimate,
            _ => MentalModelClass::ValveTrait,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MentalModelClass::ValveTrait => "valve_trait",
            MentalModelClass::FeedbackMisestimate => "feedback_misestimate",
            MentalModelClass::Feedback => "feedback",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeCounts {
    pub valve_trait: u64,
    pub feedback_misestimate: u64,
    pub feedback: u64,
}

impl EpisodeCounts {
    pub fn get(&self, c: MentalModelClass) -> u64 {
        match c {
            MentalModelClass::ValveTrait => self.valve_trait,
            MentalModelClass::FeedbackMisestimate => self.feedback_misestimate,
            MentalModelClass::Feedback => self.feedback,
        }
    }

    pub fn add(&mut self, c: MentalModelClass, n: u64) {
        match c {
            MentalModelClass::ValveTrait => self.valve_trait += n,
            MentalModelClass::FeedbackMisestimate => self.feedback_misestimate += n,
            MentalModelClass::Feedback => self.feedback += n,
        }
    }

    pub fn total(&self) -> u64 {
        self.valve_trait + self.feedback_misestimate + self.feedback
    }

    pub fn merge(&mut self, o: &EpisodeCounts) {
        self.valve_trait += o.valve_trait;
        self.feedback_misestimate += o.feedback_misestimate;
        self.feedback += o.feedback;
    }

    /// Modal class; ties go to valve trait, then misestimate. `None` when empty.
    pub fn modal(&self) -> Option<MentalModelClass> {
        if self.total() == 0 {
            return None;
        }
        // ALL is ordered by tie priority, and max_by_key keeps the last maximum.
        MentalModelClass::ALL
            .iter()
            .rev()
            .copied()
            .max_by_key(|&c| self.get(c))
    }

    pub fn fractions(&self) -> Option<[f64; 3]> {
        let n = self.total();
        (n > 0).then(|| MentalModelClass::ALL.map(|c| self.get(c) as f64 / n as f64))
    }
}

/// Follow-up counts of each override episode.
///
/// An episode is a maximal chain of manual changes in which each one comes at most
/// `window_minutes` after the one before it; its follow-ups are all but the first.
pub fn episode_follow_ups(manual_times: &[NaiveDateTime], window_minutes: i64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut last: Option<NaiveDateTime> = None;
    for &t in manual_times {
        match (last, out.last_mut()) {
            (Some(prev), Some(n)) if (t - prev).num_minutes() <= window_minutes => *n += 1,
            _ => out.push(0),
        }
        last = Some(t);
    }
    out
}

/// Episode counts per class and the home's modal class (`None` without manual changes).
pub fn classify_mental_model(
    manual_times: &[NaiveDateTime],
    window_minutes: i64,
) -> (Option<MentalModelClass>, EpisodeCounts) {
    let mut counts = EpisodeCounts::default();
    for n in episode_follow_ups(manual_times, window_minutes) {
        counts.add(MentalModelClass::from_follow_ups(n), 1);
    }
    (counts.modal(), counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, NaiveDate};

    fn t(min: i64) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2017, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
            + Duration::minutes(min)
    }

    #[test]
    fn lone_overrides_are_feedback() {
        let (c, n) = classify_mental_model(&[t(0), t(300), t(900)], 60);
        assert_eq!(c, Some(MentalModelClass::Feedback));
        assert_eq!(n.feedback, 3);
    }

    #[test]
    fn two_follow_ups_make_valve() {
        assert_eq!(episode_follow_ups(&[t(0), t(10), t(25)], 60), vec![2]);
        let (c, _) = classify_mental_model(&[t(0), t(10), t(25)], 60);
        assert_eq!(c, Some(MentalModelClass::ValveTrait));
    }

    #[test]
    fn chain_boundary() {
        assert_eq!(episode_follow_ups(&[t(0), t(60), t(121)], 60), vec![1, 0]);
    }

    #[test]
    fn ties_prefer_valve_then_misestimate() {
        let mut c = EpisodeCounts::default();
        c.add(MentalModelClass::Feedback, 2);
        c.add(MentalModelClass::FeedbackMisestimate, 2);
        assert_eq!(c.modal(), Some(MentalModelClass::FeedbackMisestimate));
        c.add(MentalModelClass::ValveTrait, 2);
        assert_eq!(c.modal(), Some(MentalModelClass::ValveTrait));
        assert_eq!(classify_mental_model(&[], 60).0, None);
    }
}
