use serde::{Deserialize, Serialize};

use super::{evaluate, ModelError, OverrideModel};
use crate::stats::{dod_bin, QuantileSurface};
use crate::HvacMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionSource {
    EmpiricalSurface,
    FittedModel,
}

/// Share of occupants expected to override within `horizon_minutes` of a setpoint change.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverridePrediction {
    pub mode: HvacMode,
    pub dod: f64,
    pub horizon_minutes: f64,
    pub fraction_overriding: f64,
    pub source: PredictionSource,
}

/// Empirical CDF of the DoD bin's TTD samples at the horizon.
pub fn predict_empirical(
    surface: &QuantileSurface,
    mode: HvacMode,
    dod: f64,
    horizon_minutes: f64,
) -> Result<OverridePrediction, ModelError> {
    let bin = dod_bin(dod).unwrap_or(0);
    let fraction = surface
        .cdf(bin, horizon_minutes)
        .ok_or(ModelError::EmptyBin { mode, bin })?;
    Ok(OverridePrediction {
        mode,
        dod,
        horizon_minutes,
        fraction_overriding: fraction,
        source: PredictionSource::EmpiricalSurface,
    })
}

/// Fraction read off a family of quantile-level models.
///
/// Each model gives the TTD by which its quantile of occupants has overridden. The fraction
/// at the horizon interpolates linearly between those crossing points, from zero at time
/// zero up to the lowest level, and is held at the highest fitted level beyond it (the
/// models say nothing about later quantiles).
pub fn predict_from_models(
    models: &[OverrideModel],
    dod: f64,
    horizon_minutes: f64,
) -> Result<OverridePrediction, ModelError> {
    let first = models.first().ok_or(ModelError::NoModels)?;
    let mut levels: Vec<(f64, f64)> = models
        .iter()
        .map(|m| (m.quantile, evaluate(m, dod).ttd_hours * 60.0))
        .collect();
    levels.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Separately fitted levels can cross; a running max keeps the curve monotone.
    let mut run = 0.0f64;
    for l in &mut levels {
        run = run.max(l.1);
        l.1 = run;
    }
    let h = horizon_minutes.max(0.0);
    let mut prev = (0.0, 0.0);
    let mut fraction = levels.last().unwrap().0;
    for &(q, t) in &levels {
        if h < t {
            let span = t - prev.1;
            fraction = if span > 0.0 { prev.0 + (q - prev.0) * (h - prev.1) / span } else { q };
            break;
        }
        prev = (q, t);
    }
    Ok(OverridePrediction {
        mode: first.mode,
        dod,
        horizon_minutes,
        fraction_overriding: fraction,
        source: PredictionSource::FittedModel,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_bin_fraction() {
        let mut s = QuantileSurface::new();
        for i in 0..100 {
            s.add(-2.0, if i < 28 { 5 } else { 30 });
        }
        let p = predict_empirical(&s, HvacMode::Cool, -2.0, 10.0).unwrap();
        assert_eq!(p.fraction_overriding, 0.28);
        assert_eq!(predict_empirical(&s, HvacMode::Cool, -2.0, f64::INFINITY).unwrap().fraction_overriding, 1.0);
        assert!(matches!(
            predict_empirical(&s, HvacMode::Cool, -3.0, 10.0),
            Err(ModelError::EmptyBin { bin: -3, .. })
        ));
    }

    #[test]
    fn model_levels_interpolate() {
        let ms = [
            OverrideModel::new(HvacMode::Cool, 0.25, 0.25, 0.0),
            OverrideModel::new(HvacMode::Cool, 0.5, 0.5, 0.0),
        ];
        let f = |h: f64| predict_from_models(&ms, -2.0, h).unwrap().fraction_overriding;
        assert_eq!(f(0.0), 0.0);
        assert!((f(7.5) - 0.125).abs() < 1e-12);
        assert!((f(15.0) - 0.25).abs() < 1e-12);
        assert!((f(22.5) - 0.375).abs() < 1e-12);
        assert_eq!(f(30.0), 0.5);
        assert_eq!(f(300.0), 0.5);
        assert!(predict_from_models(&[], 1.0, 1.0).is_err());
    }
}
