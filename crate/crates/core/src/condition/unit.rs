use serde::{Deserialize, Serialize};

use crate::temperature::f_delta_to_c;

/// The increment a user's thermostat steps in, which reveals the display unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TempUnit {
    /// 1.0 °F steps.
    Fahrenheit,
    /// 0.5 °C steps.
    Celsius,
    Unknown,
}

impl TempUnit {
    /// Step size in the unit's own degrees. `None` for [`TempUnit::Unknown`].
    pub fn increment(self) -> Option<f64> {
        match self {
            TempUnit::Fahrenheit => Some(1.0),
            TempUnit::Celsius => Some(0.5),
            TempUnit::Unknown => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TempUnit::Fahrenheit => "fahrenheit",
            TempUnit::Celsius => "celsius",
            TempUnit::Unknown => "unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnitDetectConfig {
    /// Largest distance from an increment multiple that still counts as on-grid.
    pub tol: f64,
    /// Fraction of deltas that must pass a unit's test.
    pub majority: f64,
    pub min_deltas: usize,
}

impl Default for UnitDetectConfig {
    fn default() -> Self {
        UnitDetectConfig {
            tol: 0.001,
            majority: 0.95,
            min_deltas: 3,
        }
    }
}

/// Classify a user from nonzero setpoint deltas given in °F.
///
/// Celsius when at least 95 % of the deltas, expressed in °C, sit within `tol` of a 0.5 °C
/// multiple and the Fahrenheit test fails; Fahrenheit symmetrically with 1 °F multiples.
/// Both passing (every delta a multiple of 5 °C = 9 °F), both failing, or fewer than
/// [`UnitDetectConfig::min_deltas`] deltas gives [`TempUnit::Unknown`].
pub fn detect_unit(deltas_f: &[f64], tol: f64) -> TempUnit {
    detect_unit_with(
        deltas_f,
        &UnitDetectConfig {
            tol,
            ..UnitDetectConfig::default()
        },
    )
}

pub fn detect_unit_with(deltas_f: &[f64], cfg: &UnitDetectConfig) -> TempUnit {
    let deltas: Vec<f64> = deltas_f
        .iter()
        .copied()
        .filter(|d| d.is_finite() && d.abs() > cfg.tol)
        .collect();
    if deltas.len() < cfg.min_deltas.max(1) {
        return TempUnit::Unknown;
    }
    let passes = |inc: f64, to_unit: &dyn Fn(f64) -> f64| {
        let ok = deltas
            .iter()
            .filter(|&&d| off_multiple(to_unit(d), inc) < cfg.tol)
            .count();
        ok as f64 >= cfg.majority * deltas.len() as f64
    };
    let c = passes(0.5, &f_delta_to_c);
    let f = passes(1.0, &|d| d);
    match (c, f) {
        (true, false) => TempUnit::Celsius,
        (false, true) => TempUnit::Fahrenheit,
        _ => TempUnit::Unknown,
    }
}

fn off_multiple(x: f64, inc: f64) -> f64 {
    let q = x / inc;
    (q - q.round()).abs() * inc
}

/// Deltas between consecutive settled setpoint levels.
///
/// Runs of equal samples are collapsed; a level lasting a single sample is treated as a
/// time-averaged transient and dropped before differencing, so averaging artifacts do not
/// pollute the unit test.
pub fn settled_deltas(series: &[f64]) -> Vec<f64> {
    let mut levels: Vec<(f64, usize)> = Vec::new();
    for &x in series {
        match levels.last_mut() {
            Some((v, n)) if (*v - x).abs() < 1e-9 => *n += 1,
            _ => levels.push((x, 1)),
        }
    }
    let last = levels.len().saturating_sub(1);
    let settled: Vec<f64> = levels
        .iter()
        .enumerate()
        .filter(|(i, (_, n))| *n > 1 || *i == 0 || *i == last)
        .map(|(_, (v, _))| *v)
        .collect();
    settled
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| d.abs() > 1e-9)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::temperature::c_delta_to_f;

    fn from_c(ds: &[f64]) -> Vec<f64> {
        ds.iter().map(|&d| c_delta_to_f(d)).collect()
    }

    #[test]
    fn celsius_half_degree_steps() {
        assert_eq!(detect_unit(&from_c(&[0.5, -1.0, 1.5]), 0.001), TempUnit::Celsius);
    }

    #[test]
    fn fahrenheit_steps() {
        assert_eq!(detect_unit(&[1.0, -2.0, 3.0], 0.001), TempUnit::Fahrenheit);
    }

    #[test]
    fn five_degree_c_multiples_are_ambiguous() {
        assert_eq!(detect_unit(&from_c(&[5.0, -5.0, 10.0]), 0.001), TempUnit::Unknown);
    }

    #[test]
    fn too_few_deltas() {
        assert_eq!(detect_unit(&[1.0, 2.0], 0.001), TempUnit::Unknown);
        assert_eq!(detect_unit(&[0.0, 0.0, 0.0, 1.0], 0.001), TempUnit::Unknown);
    }

    #[test]
    fn single_corrupt_delta_tolerated() {
        let mut ds = vec![1.0; 30];
        ds.push(0.37);
        assert_eq!(detect_unit(&ds, 0.001), TempUnit::Fahrenheit);
    }

    #[test]
    fn settled_drops_transients() {
        // 70 -> (71.2 averaged) -> 72 held
        let s = [70.0, 70.0, 71.2, 72.0, 72.0, 68.0, 68.0];
        assert_eq!(settled_deltas(&s), vec![2.0, -4.0]);
    }
}
