//! Undo the time-averaging of sampled setpoints.
//!
//! A sample reports the mean setpoint over its 5-minute interval. If the setpoint switched
//! from `x0` to `x1` after `dt` minutes, the sample reads
//! `x̃ = (dt/5)·x0 + ((5 − dt)/5)·x1`. The switch time is unobservable, so `dt` is fixed at
//! 2.5 min and the estimate `x1 = 2·x̃ − x0` is snapped to the unit grid. For a one-step
//! change this is exact for any true `dt` in (1.25, 3.75).

use serde::{Deserialize, Serialize};

use super::{ConditionError, TempUnit};

/// Assumed minutes spent at the old setpoint within the switching interval.
pub const DT_ASSUMED: f64 = 2.5;

const INTERVAL: f64 = 5.0;

/// Forward model: what a sample reports when the setpoint switched after `dt` minutes.
pub fn time_average(x0: f64, x1: f64, dt: f64) -> f64 {
    (dt / INTERVAL) * x0 + ((INTERVAL - dt) / INTERVAL) * x1
}

/// Inverse of [`time_average`] at `dt = 2.5`, before snapping.
pub fn estimate_switched_setpoint(x0: f64, x_tilde: f64) -> f64 {
    2.0 * x_tilde - x0
}

pub fn round_to_increment(x: f64, inc: f64) -> f64 {
    (x / inc).round() * inc
}

pub fn is_on_grid(x: f64, inc: f64, tol: f64) -> bool {
    (x - round_to_increment(x, inc)).abs() < tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionKind {
    /// `2·x̃ − x0` snapped to the grid.
    Midpoint,
    /// Next sample was on-grid and consistent with a switch into it.
    Lookahead,
    /// Off-grid first sample; no `x0` available, so the value was only snapped.
    FirstSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeaverageRecord {
    pub index: usize,
    /// Previous corrected value. Absent for the first sample.
    pub x0: Option<f64>,
    pub x_tilde: f64,
    pub x1_est: f64,
    pub dt_assumed: f64,
    pub kind: CorrectionKind,
    /// Switch time implied by a lookahead correction, minutes into the interval.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub implied_dt: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeaverageOptions {
    pub tol: f64,
    /// Prefer the next on-grid sample as `x1` when the averaged value lies between it and `x0`.
    pub lookahead: bool,
}

impl Default for DeaverageOptions {
    fn default() -> Self {
        DeaverageOptions {
            tol: 0.001,
            lookahead: true,
        }
    }
}

/// Correct every off-grid sample with the fixed-`dt` midpoint rule. `series` is in the
/// unit's own degrees (°C for Celsius users).
pub fn deaverage_setpoints(
    series: &[f64],
    unit: TempUnit,
    tol: f64,
) -> Result<(Vec<f64>, Vec<DeaverageRecord>), ConditionError> {
    deaverage_with(
        series,
        unit,
        &DeaverageOptions {
            tol,
            lookahead: false,
        },
    )
}

pub fn deaverage_with(
    series: &[f64],
    unit: TempUnit,
    opts: &DeaverageOptions,
) -> Result<(Vec<f64>, Vec<DeaverageRecord>), ConditionError> {
    let inc = unit.increment().ok_or(ConditionError::UnknownUnit)?;
    let on_grid = |x: f64| is_on_grid(x, inc, opts.tol);
    let mut out = Vec::with_capacity(series.len());
    let mut records = Vec::new();

    for (i, &x) in series.iter().enumerate() {
        if on_grid(x) {
            // Snap away representation noise so downstream equality tests are exact.
            out.push(round_to_increment(x, inc));
            continue;
        }
        let Some(&x0) = out.last() else {
            let x1 = round_to_increment(x, inc);
            out.push(x1);
            records.push(DeaverageRecord {
                index: i,
                x0: None,
                x_tilde: x,
                x1_est: x1,
                dt_assumed: DT_ASSUMED,
                kind: CorrectionKind::FirstSample,
                implied_dt: None,
            });
            continue;
        };

        let mut corrected = None;
        if opts.lookahead {
            if let Some(&next) = series.get(i + 1).filter(|&&n| on_grid(n)) {
                let next = round_to_increment(next, inc);
                if (next - x0).abs() > opts.tol {
                    let r = (x - x0) / (next - x0);
                    if (-1e-9..=1.0 + 1e-9).contains(&r) {
                        corrected = Some((next, CorrectionKind::Lookahead, Some(INTERVAL * (1.0 - r))));
                    }
                }
            }
        }
        let (x1, kind, implied_dt) = corrected.unwrap_or_else(|| {
            (
                round_to_increment(estimate_switched_setpoint(x0, x), inc),
                CorrectionKind::Midpoint,
                None,
            )
        });
        out.push(x1);
        records.push(DeaverageRecord {
            index: i,
            x0: Some(x0),
            x_tilde: x,
            x1_est: x1,
            dt_assumed: DT_ASSUMED,
            kind,
            implied_dt,
        });
    }
    Ok((out, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn on_grid_passes_through() {
        let (out, recs) = deaverage_setpoints(&[70.0, 70.0], TempUnit::Fahrenheit, 0.001).unwrap();
        assert_eq!(out, vec![70.0, 70.0]);
        assert!(recs.is_empty());
    }

    #[test]
    fn midpoint_arithmetic() {
        let (out, recs) = deaverage_setpoints(&[70.0, 71.2], TempUnit::Fahrenheit, 0.001).unwrap();
        assert_eq!(out, vec![70.0, 72.0]);
        assert_eq!(recs.len(), 1);
        assert!((estimate_switched_setpoint(70.0, 71.2) - 72.4).abs() < 1e-12);
        assert_eq!(recs[0].dt_assumed, 2.5);
    }

    #[test]
    fn celsius_switch_at_half_interval() {
        let sampled = time_average(21.0, 22.5, 2.5);
        assert_eq!(sampled, 21.75);
        let (out, _) = deaverage_setpoints(&[21.0, sampled], TempUnit::Celsius, 0.001).unwrap();
        assert_eq!(out[1], 22.5);
    }

    #[test]
    fn first_sample_flagged() {
        let (out, recs) = deaverage_setpoints(&[70.4, 70.0], TempUnit::Fahrenheit, 0.001).unwrap();
        assert_eq!(out[0], 70.0);
        assert_eq!(recs[0].kind, CorrectionKind::FirstSample);
    }

    #[test]
    fn consecutive_off_grid_samples_chain() {
        // second correction uses the first corrected value as x0
        let (out, _) =
            deaverage_setpoints(&[70.0, 70.5, 71.5], TempUnit::Fahrenheit, 0.001).unwrap();
        assert_eq!(out, vec![70.0, 71.0, 72.0]);
    }

    #[test]
    fn unknown_unit_rejected() {
        assert!(deaverage_setpoints(&[1.0], TempUnit::Unknown, 0.001).is_err());
    }

    #[test]
    fn lookahead_repairs_large_early_switch() {
        // 64 -> 70 one minute into the interval reads 68.8; midpoint overshoots to 74.
        let x = time_average(64.0, 70.0, 1.0);
        let series = [64.0, x, 70.0];
        let (mid, _) = deaverage_setpoints(&series, TempUnit::Fahrenheit, 0.001).unwrap();
        assert_eq!(mid[1], 74.0);
        let (la, recs) =
            deaverage_with(&series, TempUnit::Fahrenheit, &DeaverageOptions::default()).unwrap();
        assert_eq!(la, vec![64.0, 70.0, 70.0]);
        assert_eq!(recs[0].kind, CorrectionKind::Lookahead);
        assert!((recs[0].implied_dt.unwrap() - 1.0).abs() < 1e-9);
    }
}
