//! The TTD-quantile law `TTD_q(|DoD|) = a·exp(b·|DoD|)` (hours, °F): fitting, evaluation
//! and override-fraction prediction.
//!
//! DoD enters as a magnitude. Only the energy-intensive side of the surface is fitted:
//! positive DoD in heating, negative in cooling.

mod predict;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::QuantileSurface;
use crate::{HvacMode, FORMAT_VERSION};

pub use predict::{predict_empirical, predict_from_models, OverridePrediction, PredictionSource};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{mode}: {usable} usable DoD bins, at least 2 needed")]
    TooFewBins { mode: HvacMode, usable: usize },
    #[error("fit points need at least two distinct |DoD| values")]
    Degenerate,
    #[error("DoD bin {bin}: quantile {value} is not positive")]
    NonPositive { bin: i32, value: f64 },
    #[error("quantile {0} outside (0, 1)")]
    Quantile(f64),
    #[error("DoD bin {bin} has no samples in {mode}")]
    EmptyBin { mode: HvacMode, bin: i32 },
    #[error("no models given")]
    NoModels,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub quantile: f64,
    /// Drop TTDs at or below this many minutes before taking quantiles.
    pub truncate_minutes: Option<u32>,
    /// Bins with fewer samples are low-confidence and skipped.
    pub min_bin_samples: u64,
    /// Weight each bin by its sample count.
    pub weighted: bool,
    /// Sampling grid of the TTDs. `Some(w)` takes grouped-data quantiles over `w`-minute
    /// cells; `None` takes plain order-statistic quantiles.
    pub grid_minutes: Option<u32>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            quantile: 0.5,
            truncate_minutes: Some(10),
            min_bin_samples: 30,
            weighted: true,
            grid_minutes: Some(crate::SAMPLE_MINUTES as u32),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub dod_abs: f64,
    pub ttd_hours: f64,
    pub weight: f64,
}

/// Least-squares line through `(|DoD|, ln TTD)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub a_hours: f64,
    pub b_per_degf: f64,
    /// Standard errors, when at least three points were fitted.
    pub se_ln_a: Option<f64>,
    pub se_b: Option<f64>,
}

/// Weighted least squares of `ln(ttd_hours)` on `dod_abs`.
pub fn fit_points(points: &[FitPoint]) -> Result<LineFit, ModelError> {
    let sw: f64 = points.iter().map(|p| p.weight).sum();
    if points.len() < 2 || sw <= 0.0 {
        return Err(ModelError::Degenerate);
    }
    let xm = points.iter().map(|p| p.weight * p.dod_abs).sum::<f64>() / sw;
    let ym = points.iter().map(|p| p.weight * p.ttd_hours.ln()).sum::<f64>() / sw;
    let sxx: f64 = points.iter().map(|p| p.weight * (p.dod_abs - xm).powi(2)).sum();
    if sxx <= f64::EPSILON * sw.max(1.0) {
        return Err(ModelError::Degenerate);
    }
    let sxy: f64 = points
        .iter()
        .map(|p| p.weight * (p.dod_abs - xm) * (p.ttd_hours.ln() - ym))
        .sum();
    let b = sxy / sxx;
    let ln_a = ym - b * xm;
    let (se_ln_a, se_b) = if points.len() >= 3 {
        let rss: f64 = points
            .iter()
            .map(|p| p.weight * (p.ttd_hours.ln() - ln_a - b * p.dod_abs).powi(2))
            .sum();
        // Standard WLS errors; invariant to rescaling the weights.
        let s2 = rss / (points.len() - 2) as f64;
        (
            Some((s2 * (1.0 / sw + xm * xm / sxx)).sqrt()),
            Some((s2 / sxx).sqrt()),
        )
    } else {
        (None, None)
    };
    Ok(LineFit {
        a_hours: ln_a.exp(),
        b_per_degf: b,
        se_ln_a,
        se_b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinDiagnostic {
    pub dod: i32,
    pub dod_abs: f64,
    /// Samples used (after truncation).
    pub n: u64,
    pub ttd_hours: f64,
    pub fitted_hours: f64,
    /// ln(observed) − ln(fitted).
    pub residual: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub bins: Vec<BinDiagnostic>,
    /// Bins skipped as low-confidence: (DoD, samples after truncation).
    pub skipped: Vec<(i32, u64)>,
    pub se_ln_a: Option<f64>,
    pub se_b: Option<f64>,
    pub truncate_minutes: Option<u32>,
    pub weighted: bool,
    #[serde(default)]
    pub grid_minutes: Option<u32>,
}

/// A fitted (or given) TTD-quantile law for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverrideModel {
    pub mode: HvacMode,
    pub quantile: f64,
    pub a_hours: f64,
    #[serde(rename = "b_per_degF")]
    pub b_per_degf: f64,
    /// |DoD| span the law was fitted over, °F.
    pub fitted_range: (f64, f64),
    pub dod_convention: String,
    pub diagnostics: FitDiagnostics,
}

pub const DOD_CONVENTION: &str = "magnitude_degF";

impl OverrideModel {
    /// A model from known constants, valid over |DoD| in [1, 10] °F.
    pub fn new(mode: HvacMode, quantile: f64, a_hours: f64, b_per_degf: f64) -> Self {
        OverrideModel {
            mode,
            quantile,
            a_hours,
            b_per_degf,
            fitted_range: (1.0, 10.0),
            dod_convention: DOD_CONVENTION.into(),
            diagnostics: FitDiagnostics::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub ttd_hours: f64,
    /// |DoD| outside the fitted range.
    pub extrapolated: bool,
    /// DoD sign is the energy-saving direction for the model's mode.
    pub against_direction: bool,
}

/// `a·exp(b·|dod|)` in hours.
pub fn evaluate(model: &OverrideModel, dod: f64) -> Evaluation {
    let mag = dod.abs();
    let (lo, hi) = model.fitted_range;
    Evaluation {
        ttd_hours: model.a_hours * (model.b_per_degf * mag).exp(),
        extrapolated: mag < lo || mag > hi,
        against_direction: dod * model.mode.intensive_sign() < 0.0,
    }
}

/// Fit the law to the energy-intensive side of `surface`.
pub fn fit(surface: &QuantileSurface, mode: HvacMode, opts: &FitOptions) -> Result<OverrideModel, ModelError> {
    if !(opts.quantile > 0.0 && opts.quantile < 1.0) {
        return Err(ModelError::Quantile(opts.quantile));
    }
    let sign = mode.intensive_sign() as i32;
    let mut used = Vec::new();
    let mut skipped = Vec::new();
    for bin in surface.bins().filter(|b| b.signum() == sign) {
        let n = surface.count_above(bin, opts.truncate_minutes);
        if n < opts.min_bin_samples.max(1) {
            skipped.push((bin, n));
            continue;
        }
        let minutes = match opts.grid_minutes {
            Some(w) => surface.grouped_quantile(bin, opts.quantile, opts.truncate_minutes, w),
            None => surface.quantile(bin, opts.quantile, opts.truncate_minutes),
        }
        .expect("bin has samples");
        if minutes <= 0.0 {
            return Err(ModelError::NonPositive { bin, value: minutes });
        }
        used.push((bin, n, minutes / 60.0));
    }
    if used.len() < 2 {
        return Err(ModelError::TooFewBins { mode, usable: used.len() });
    }
    let points: Vec<FitPoint> = used
        .iter()
        .map(|&(bin, n, h)| FitPoint {
            dod_abs: f64::from(bin.abs()),
            ttd_hours: h,
            weight: if opts.weighted { n as f64 } else { 1.0 },
        })
        .collect();
    let line = fit_points(&points)?;
    let bins: Vec<BinDiagnostic> = used
        .iter()
        .map(|&(bin, n, h)| {
            let x = f64::from(bin.abs());
            let fitted = line.a_hours * (line.b_per_degf * x).exp();
            BinDiagnostic {
                dod: bin,
                dod_abs: x,
                n,
                ttd_hours: h,
                fitted_hours: fitted,
                residual: h.ln() - fitted.ln(),
            }
        })
        .collect();
    let lo = points.iter().map(|p| p.dod_abs).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.dod_abs).fold(f64::NEG_INFINITY, f64::max);
    Ok(OverrideModel {
        mode,
        quantile: opts.quantile,
        a_hours: line.a_hours,
        b_per_degf: line.b_per_degf,
        fitted_range: (lo, hi),
        dod_convention: DOD_CONVENTION.into(),
        diagnostics: FitDiagnostics {
            bins,
            skipped,
            se_ln_a: line.se_ln_a,
            se_b: line.se_b,
            truncate_minutes: opts.truncate_minutes,
            weighted: opts.weighted,
            grid_minutes: opts.grid_minutes,
        },
    })
}

/// One quantile level of a model file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelFit {
    pub quantile: f64,
    pub a_hours: f64,
    #[serde(rename = "b_per_degF")]
    pub b_per_degf: f64,
}

/// On-disk model: the primary (median) fit plus any other fitted quantile levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub model: OverrideModel,
    #[serde(default)]
    pub levels: Vec<LevelFit>,
}

impl ModelFile {
    pub fn new(model: OverrideModel, levels: &[OverrideModel], seed: Option<u64>) -> Self {
        ModelFile {
            format_version: FORMAT_VERSION,
            seed,
            model,
            levels: levels
                .iter()
                .map(|m| LevelFit {
                    quantile: m.quantile,
                    a_hours: m.a_hours,
                    b_per_degf: m.b_per_degf,
                })
                .collect(),
        }
    }

    /// Every level as a model, the primary included, sorted by quantile.
    pub fn level_models(&self) -> Vec<OverrideModel> {
        let mut out: Vec<OverrideModel> = self
            .levels
            .iter()
            .map(|l| OverrideModel {
                fitted_range: self.model.fitted_range,
                ..OverrideModel::new(self.model.mode, l.quantile, l.a_hours, l.b_per_degf)
            })
            .collect();
        if !out.iter().any(|m| m.quantile == self.model.quantile) {
            out.push(self.model.clone());
        }
        out.sort_by(|a, b| a.quantile.total_cmp(&b.quantile));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn published_constants() {
        let m = OverrideModel::new(HvacMode::Heat, 0.5, 0.5368, -0.083);
        assert!(close(evaluate(&m, 2.0).ttd_hours, 0.4547, 5e-5));
        assert!(close(evaluate(&m, 8.0).ttd_hours, 0.2764, 1e-4));
        assert_eq!(evaluate(&m, 0.0).ttd_hours, 0.5368);
        assert!(evaluate(&m, 0.0).extrapolated);
        assert!(evaluate(&m, -2.0).against_direction);
        assert!(!evaluate(&m, 2.0).against_direction);
    }

    #[test]
    fn two_point_fit_inverts_law() {
        let pts = [
            FitPoint { dod_abs: 2.0, ttd_hours: 0.5368 * (-0.083f64 * 2.0).exp(), weight: 1.0 },
            FitPoint { dod_abs: 8.0, ttd_hours: 0.5368 * (-0.083f64 * 8.0).exp(), weight: 1.0 },
        ];
        let f = fit_points(&pts).unwrap();
        assert!(close(f.a_hours, 0.5368, 1e-12));
        assert!(close(f.b_per_degf, -0.083, 1e-12));
        assert_eq!(f.se_b, None);
    }

    #[test]
    fn flat_surface() {
        let mut s = QuantileSurface::new();
        for d in 1..=5 {
            for _ in 0..40 {
                s.add(-f64::from(d), 30);
            }
        }
        let raw = FitOptions { grid_minutes: None, ..FitOptions::default() };
        let m = fit(&s, HvacMode::Cool, &raw).unwrap();
        assert!(close(m.b_per_degf, 0.0, 1e-12));
        assert!(close(m.a_hours, 0.5, 1e-12));
        assert_eq!(m.fitted_range, (1.0, 5.0));
        // On the grid every sample at 30 stands for a delay in [30, 35).
        let grouped = fit(&s, HvacMode::Cool, &FitOptions::default()).unwrap();
        assert!(close(grouped.a_hours, 32.5 / 60.0, 1e-12));
    }

    #[test]
    fn fit_errors() {
        let mut s = QuantileSurface::new();
        for _ in 0..40 {
            s.add(2.0, 30);
            s.add(-3.0, 30);
        }
        assert!(matches!(
            fit(&s, HvacMode::Heat, &FitOptions::default()),
            Err(ModelError::TooFewBins { usable: 1, .. })
        ));
        let opts = FitOptions { quantile: 1.0, ..FitOptions::default() };
        assert!(matches!(fit(&s, HvacMode::Heat, &opts), Err(ModelError::Quantile(_))));
        let mut z = QuantileSurface::new();
        for _ in 0..40 {
            z.add(1.0, 0);
            z.add(2.0, 0);
        }
        let opts = FitOptions { truncate_minutes: None, grid_minutes: None, ..FitOptions::default() };
        assert!(matches!(fit(&z, HvacMode::Heat, &opts), Err(ModelError::NonPositive { .. })));
    }

    #[test]
    fn model_file_serialization() {
        let m = OverrideModel::new(HvacMode::Cool, 0.5, 0.58, -0.074);
        let f = ModelFile::new(m.clone(), &[m], Some(7));
        let js = serde_json::to_string(&f).unwrap();
        assert!(js.contains("\"b_per_degF\":-0.074"));
        assert!(js.contains("\"a_hours\":0.58"));
        let back: ModelFile = serde_json::from_str(&js).unwrap();
        assert_eq!(back, f);
    }
}
