use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Equipment mode a setpoint change applies to. Also used as the "season" of an override.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HvacMode {
    Heat,
    Cool,
}

impl HvacMode {
    pub const ALL: [HvacMode; 2] = [HvacMode::Heat, HvacMode::Cool];

    pub fn as_str(self) -> &'static str {
        match self {
            HvacMode::Heat => "heat",
            HvacMode::Cool => "cool",
        }
    }

    /// Sign of an energy-intensive setpoint change in this mode.
    pub fn intensive_sign(self) -> f64 {
        match self {
            HvacMode::Heat => 1.0,
            HvacMode::Cool => -1.0,
        }
    }

    pub fn flip(self) -> HvacMode {
        match self {
            HvacMode::Heat => HvacMode::Cool,
            HvacMode::Cool => HvacMode::Heat,
        }
    }
}

impl fmt::Display for HvacMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HvacMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "heat" | "heating" => Ok(HvacMode::Heat),
            "cool" | "cooling" => Ok(HvacMode::Cool),
            other => Err(format!("unknown hvac mode '{other}'")),
        }
    }
}

pub fn f_to_c(f: f64) -> f64 {
    (f - 32.0) / 1.8
}

pub fn c_to_f(c: f64) -> f64 {
    c * 1.8 + 32.0
}

pub fn f_delta_to_c(df: f64) -> f64 {
    df / 1.8
}

pub fn c_delta_to_f(dc: f64) -> f64 {
    dc * 1.8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        for c in [-10.0, 0.0, 20.5, 22.5, 37.0] {
            assert!((f_to_c(c_to_f(c)) - c).abs() < 1e-12);
        }
        assert_eq!(c_delta_to_f(5.0), 9.0);
        assert_eq!("Cooling".parse::<HvacMode>().unwrap(), HvacMode::Cool);
        assert!("off".parse::<HvacMode>().is_err());
    }
}
