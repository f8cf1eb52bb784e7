use std::fmt;

use serde::{Deserialize, Serialize};

/// How long a manual hold lasts before the thermostat resumes its program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HoldDuration {
    TwoHours,
    FourHours,
    UntilNext,
    Indefinite,
}

/// The event in force during a telemetry interval. Exactly one per sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum EventKind {
    ManualHold(HoldDuration),
    ScheduleAwake,
    ScheduleAway,
    ScheduleHome,
    ScheduleSleep,
    SmartAway,
    SmartHome,
    SmartRecovery,
    DemandResponse,
    None,
}

impl EventKind {
    /// Every kind, in a stable order (used for report tables).
    pub const ALL: [EventKind; 13] = [
        EventKind::ManualHold(HoldDuration::TwoHours),
        EventKind::ManualHold(HoldDuration::FourHours),
        EventKind::ManualHold(HoldDuration::UntilNext),
        EventKind::ManualHold(HoldDuration::Indefinite),
        EventKind::ScheduleAwake,
        EventKind::ScheduleAway,
        EventKind::ScheduleHome,
        EventKind::ScheduleSleep,
        EventKind::SmartAway,
        EventKind::SmartHome,
        EventKind::SmartRecovery,
        EventKind::DemandResponse,
        EventKind::None,
    ];

    /// Canonical token written to CSV and JSON.
    pub fn token(self) -> &'static str {
        match self {
            EventKind::ManualHold(HoldDuration::TwoHours) => "hold_2h",
            EventKind::ManualHold(HoldDuration::FourHours) => "hold_4h",
            EventKind::ManualHold(HoldDuration::UntilNext) => "hold_next",
            EventKind::ManualHold(HoldDuration::Indefinite) => "hold_indefinite",
            EventKind::ScheduleAwake => "awake",
            EventKind::ScheduleAway => "away",
            EventKind::ScheduleHome => "home",
            EventKind::ScheduleSleep => "sleep",
            EventKind::SmartAway => "smart_away",
            EventKind::SmartHome => "smart_home",
            EventKind::SmartRecovery => "smart_recovery",
            EventKind::DemandResponse => "demand_response",
            EventKind::None => "none",
        }
    }

    /// Parse a token leniently: case, spaces, underscores and hyphens are ignored, and a
    /// handful of spellings seen in thermostat exports are accepted. An empty string is
    /// [`EventKind::None`]. Returns `None` for unrecognised tokens.
    pub fn parse_token(raw: &str) -> Option<EventKind> {
        let norm: String = raw
            .chars()
            .filter(|c| !matches!(c, ' ' | '_' | '-' | '/'))
            .flat_map(char::to_lowercase)
            .collect();
        let kind = match norm.as_str() {
            "" | "none" | "null" | "nan" => EventKind::None,
            "hold2h" | "hold2hr" | "hold2hours" | "twohourhold" => {
                EventKind::ManualHold(HoldDuration::TwoHours)
            }
            "hold4h" | "hold4hr" | "hold4hours" | "fourhourhold" => {
                EventKind::ManualHold(HoldDuration::FourHours)
            }
            "hold" | "holdnext" | "holduntilnext" | "holdnextevent" | "temporaryhold" => {
                EventKind::ManualHold(HoldDuration::UntilNext)
            }
            "holdindefinite" | "holdindefinitely" | "permanenthold" | "indefinitehold" => {
                EventKind::ManualHold(HoldDuration::Indefinite)
            }
            "awake" | "wake" | "wakeup" | "scheduleawake" => EventKind::ScheduleAwake,
            "away" | "scheduleaway" => EventKind::ScheduleAway,
            "home" | "schedulehome" => EventKind::ScheduleHome,
            "sleep" | "schedulesleep" => EventKind::ScheduleSleep,
            "smartaway" => EventKind::SmartAway,
            "smarthome" => EventKind::SmartHome,
            "smartrecovery" => EventKind::SmartRecovery,
            "demandresponse" | "dr" | "demandresponseevent" => EventKind::DemandResponse,
            _ => return None,
        };
        Some(kind)
    }

    pub fn is_manual(self) -> bool {
        matches!(self, EventKind::ManualHold(_))
    }

    pub fn is_schedule(self) -> bool {
        matches!(
            self,
            EventKind::ScheduleAwake
                | EventKind::ScheduleAway
                | EventKind::ScheduleHome
                | EventKind::ScheduleSleep
        )
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl From<EventKind> for String {
    fn from(kind: EventKind) -> String {
        kind.token().to_string()
    }
}

impl TryFrom<String> for EventKind {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        EventKind::parse_token(&s).ok_or_else(|| format!("unknown event token '{s}'"))
    }
}

/// Which column wins when both the event and schedule columns carry a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventPrecedence {
    /// Holds, smart events and DR from the event column override the schedule period.
    #[default]
    EventFirst,
    /// The schedule period wins whenever it is present.
    ScheduleFirst,
}

impl EventPrecedence {
    pub fn resolve(self, event: Option<EventKind>, schedule: Option<EventKind>) -> EventKind {
        let event = event.filter(|e| *e != EventKind::None);
        let schedule = schedule.filter(|e| *e != EventKind::None);
        match self {
            EventPrecedence::EventFirst => event.or(schedule),
            EventPrecedence::ScheduleFirst => schedule.or(event),
        }
        .unwrap_or(EventKind::None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_tokens_parse_back() {
        for kind in EventKind::ALL {
            assert_eq!(EventKind::parse_token(kind.token()), Some(kind));
        }
    }

    #[test]
    fn lenient_spellings() {
        assert_eq!(
            EventKind::parse_token("Smart Recovery"),
            Some(EventKind::SmartRecovery)
        );
        assert_eq!(
            EventKind::parse_token("Hold"),
            Some(EventKind::ManualHold(HoldDuration::UntilNext))
        );
        assert_eq!(EventKind::parse_token(""), Some(EventKind::None));
        assert_eq!(EventKind::parse_token("vacation"), None);
    }

    #[test]
    fn precedence() {
        let hold = Some(EventKind::ManualHold(HoldDuration::TwoHours));
        let home = Some(EventKind::ScheduleHome);
        assert_eq!(EventPrecedence::EventFirst.resolve(hold, home), hold.unwrap());
        assert_eq!(EventPrecedence::ScheduleFirst.resolve(hold, home), home.unwrap());
        assert_eq!(
            EventPrecedence::EventFirst.resolve(Some(EventKind::None), home),
            home.unwrap()
        );
        assert_eq!(EventPrecedence::EventFirst.resolve(None, None), EventKind::None);
    }
}
