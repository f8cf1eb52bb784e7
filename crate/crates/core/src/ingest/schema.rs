use serde::{Deserialize, Serialize};

use super::event::EventPrecedence;

/// Unit the temperature columns of a telemetry file are stored in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawUnit {
    #[default]
    Fahrenheit,
    Celsius,
}

/// Maps telemetry CSV headers onto [`Sample`](super::Sample) fields.
///
/// Defaults follow the Donate-Your-Data export header names. Every name can be
/// overridden from a config file, since the exact headers differ between data releases.
///
/// | field            | default header(s)                                         | required |
/// |------------------|-----------------------------------------------------------|----------|
/// | `timestamp`      | `DateTime`                                                | yes      |
/// | `heat_setpoint`  | `T_stp_heat`                                              | yes      |
/// | `cool_setpoint`  | `T_stp_cool`                                              | yes      |
/// | `indoor_temp`    | `T_ctrl`                                                  | yes      |
/// | `outdoor_temp`   | `T_out`                                                   | no       |
/// | `event`          | `Event`                                                   | yes      |
/// | `schedule`       | `Schedule`                                                | no       |
/// | `motion`         | `Thermostat_Motion` plus any header ending in `_Motion`   | no       |
/// | `heat_runtime`   | `auxHeat1..3`, `compHeat1..2` (max across stages)         | no       |
/// | `cool_runtime`   | `compCool1..2` (max across stages)                        | no       |
/// | `mode_hint`      | none                                                      | no       |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub timestamp: String,
    /// chrono format string; the default format has a fast path.
    pub timestamp_format: String,
    pub heat_setpoint: String,
    pub cool_setpoint: String,
    pub indoor_temp: String,
    pub outdoor_temp: Option<String>,
    pub event: String,
    pub schedule: Option<String>,
    pub precedence: EventPrecedence,
    pub motion: Vec<String>,
    pub motion_suffix: Option<String>,
    pub heat_runtime: Vec<String>,
    pub cool_runtime: Vec<String>,
    pub mode_hint: Option<String>,
    pub raw_unit: RawUnit,
}

pub const DEFAULT_TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            timestamp: "DateTime".into(),
            timestamp_format: DEFAULT_TIMESTAMP_FORMAT.into(),
            heat_setpoint: "T_stp_heat".into(),
            cool_setpoint: "T_stp_cool".into(),
            indoor_temp: "T_ctrl".into(),
            outdoor_temp: Some("T_out".into()),
            event: "Event".into(),
            schedule: Some("Schedule".into()),
            precedence: EventPrecedence::EventFirst,
            motion: vec!["Thermostat_Motion".into()],
            motion_suffix: Some("_Motion".into()),
            heat_runtime: ["auxHeat1", "auxHeat2", "auxHeat3", "compHeat1", "compHeat2"]
                .map(String::from)
                .to_vec(),
            cool_runtime: ["compCool1", "compCool2"].map(String::from).to_vec(),
            mode_hint: None,
            raw_unit: RawUnit::Fahrenheit,
        }
    }
}

/// Header names of the metadata CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetaColumnMap {
    pub home_id: String,
    pub occupant_count: String,
    pub floor_area: String,
    pub country: String,
}

impl Default for MetaColumnMap {
    fn default() -> Self {
        MetaColumnMap {
            home_id: "Identifier".into(),
            occupant_count: "Number of Occupants".into(),
            floor_area: "Floor Area [ft2]".into(),
            country: "Country".into(),
        }
    }
}

/// Column positions resolved against one header row.
#[derive(Debug, Clone)]
pub(crate) struct ResolvedColumns {
    pub timestamp: usize,
    pub heat_setpoint: usize,
    pub cool_setpoint: usize,
    pub indoor_temp: usize,
    pub outdoor_temp: Option<usize>,
    pub event: usize,
    pub schedule: Option<usize>,
    pub motion: Vec<usize>,
    pub heat_runtime: Vec<usize>,
    pub cool_runtime: Vec<usize>,
    pub mode_hint: Option<usize>,
}

impl ResolvedColumns {
    pub fn resolve(map: &ColumnMap, header: &[&str]) -> Result<Self, String> {
        let find = |name: &str| header.iter().position(|h| h.trim() == name);
        let required = |name: &str| find(name).ok_or_else(|| name.to_string());
        let optional = |name: &Option<String>| name.as_deref().and_then(find);
        let many = |names: &[String]| -> Vec<usize> {
            names.iter().filter_map(|n| find(n)).collect()
        };

        let mut motion = many(&map.motion);
        if let Some(suffix) = map.motion_suffix.as_deref() {
            for (i, h) in header.iter().enumerate() {
                if h.trim().ends_with(suffix) && !motion.contains(&i) {
                    motion.push(i);
                }
            }
        }
        motion.sort_unstable();

        Ok(ResolvedColumns {
            timestamp: required(&map.timestamp)?,
            heat_setpoint: required(&map.heat_setpoint)?,
            cool_setpoint: required(&map.cool_setpoint)?,
            indoor_temp: required(&map.indoor_temp)?,
            outdoor_temp: optional(&map.outdoor_temp),
            event: required(&map.event)?,
            schedule: optional(&map.schedule),
            motion,
            heat_runtime: many(&map.heat_runtime),
            cool_runtime: many(&map.cool_runtime),
            mode_hint: optional(&map.mode_hint),
        })
    }
}
