use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::GroundTruth;
use crate::features::{MscFeature, SetpointChange};
use crate::model::OverrideModel;
use crate::HvacMode;

/// What the pipeline reported for one home.
#[derive(Debug, Clone, Default)]
pub struct HomeObservation {
    pub home_id: String,
    pub changes: Vec<SetpointChange>,
    pub mscs: Vec<MscFeature>,
    pub timestamps: Vec<NaiveDateTime>,
    /// Filtered occupancy per sample.
    pub occupied: Vec<bool>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub n: u64,
    pub mean_abs: f64,
    pub max_abs: f64,
}

impl ErrorSummary {
    fn add(&mut self, err: f64) {
        let e = err.abs();
        self.n += 1;
        self.mean_abs += (e - self.mean_abs) / self.n as f64;
        self.max_abs = self.max_abs.max(e);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitComparison {
    pub mode: HvacMode,
    pub planted_a_hours: f64,
    #[serde(rename = "planted_b_per_degF")]
    pub planted_b_per_degf: f64,
    pub fitted_a_hours: f64,
    #[serde(rename = "fitted_b_per_degF")]
    pub fitted_b_per_degf: f64,
    pub rel_err_a: f64,
    pub rel_err_b: f64,
}

/// Pipeline output scored against what was planted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub homes: usize,
    /// Observed homes absent from the ground truth.
    pub unmatched_homes: Vec<String>,
    pub true_changes: u64,
    pub detected_changes: u64,
    pub matched_changes: u64,
    pub sc_recall: f64,
    pub sc_precision: f64,
    /// Matched changes whose manual/programmed attribution is right.
    pub cause_accuracy: f64,
    pub true_mscs: u64,
    pub matched_mscs: u64,
    pub msc_recall: f64,
    pub occupancy_recall: f64,
    pub occupancy_precision: f64,
    /// °F, over matched overrides.
    pub dod_error: ErrorSummary,
    /// Minutes, over matched overrides that got a TTD.
    pub ttd_error: ErrorSummary,
    pub fits: Vec<FitComparison>,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

/// Scores detection, attribution, DoD, TTD and occupancy per home, plus any fitted
/// median models against the planted law.
pub fn oracle_compare(observed: &[HomeObservation], truth: &GroundTruth, fitted: &[OverrideModel]) -> DiscrepancyReport {
    let start = truth.config.start.and_hms_opt(0, 0, 0).expect("midnight");
    let by_id: HashMap<&str, usize> = truth.homes.iter().enumerate().map(|(i, h)| (h.home_id.as_str(), i)).collect();
    let mut r = DiscrepancyReport {
        homes: observed.len(),
        ..Default::default()
    };
    let (mut cause_ok, mut occ_tp, mut occ_fp, mut occ_fn) = (0u64, 0u64, 0u64, 0u64);
    for obs in observed {
        let Some(&hi) = by_id.get(obs.home_id.as_str()) else {
            r.unmatched_homes.push(obs.home_id.clone());
            continue;
        };
        let home = &truth.homes[hi];
        let mut planted: BTreeMap<(NaiveDateTime, HvacMode), usize> = BTreeMap::new();
        for (i, c) in home.changes.iter().enumerate() {
            planted.insert((c.time, c.mode), i);
        }
        let msc_of: HashMap<usize, usize> = home.mscs.iter().enumerate().map(|(i, m)| (m.change, i)).collect();
        r.true_changes += home.changes.len() as u64;
        r.true_mscs += home.mscs.len() as u64;
        r.detected_changes += obs.changes.len() as u64;
        for c in &obs.changes {
            if let Some(&i) = planted.get(&(c.time, c.mode)) {
                r.matched_changes += 1;
                cause_ok += u64::from(c.cause.is_manual() == home.changes[i].cause.is_manual());
            }
        }
        for m in &obs.mscs {
            let Some(&ci) = planted.get(&(m.sc.time, m.sc.mode)) else {
                continue;
            };
            let Some(&mi) = msc_of.get(&ci) else {
                continue;
            };
            let t = &home.mscs[mi];
            r.matched_mscs += 1;
            r.dod_error.add(m.dod - t.dod);
            if let Some(ttd) = m.ttd_minutes {
                r.ttd_error.add(f64::from(ttd) - t.ttd_minutes);
            }
        }
        for (ts, &occ) in obs.timestamps.iter().zip(&obs.occupied) {
            let minute = (*ts - start).num_seconds() as f64 / 60.0 + 2.5;
            match (home.present_at(minute), occ) {
                (true, true) => occ_tp += 1,
                (false, true) => occ_fp += 1,
                (true, false) => occ_fn += 1,
                (false, false) => {}
            }
        }
    }
    r.sc_recall = ratio(r.matched_changes, r.true_changes);
    r.sc_precision = ratio(r.matched_changes, r.detected_changes);
    r.cause_accuracy = ratio(cause_ok, r.matched_changes);
    r.msc_recall = ratio(r.matched_mscs, r.true_mscs);
    r.occupancy_recall = ratio(occ_tp, occ_tp + occ_fn);
    r.occupancy_precision = ratio(occ_tp, occ_tp + occ_fp);

    let law = truth.config.law;
    for m in fitted.iter().filter(|m| (m.quantile - 0.5).abs() < 1e-12) {
        r.fits.push(FitComparison {
            mode: m.mode,
            planted_a_hours: law.a_hours,
            planted_b_per_degf: law.b_per_degf,
            fitted_a_hours: m.a_hours,
            fitted_b_per_degf: m.b_per_degf,
            rel_err_a: (m.a_hours - law.a_hours) / law.a_hours,
            rel_err_b: (m.b_per_degf - law.b_per_degf) / law.b_per_degf,
        });
    }
    r
}
