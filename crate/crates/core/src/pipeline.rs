//! Whole-corpus driver: parse, condition and extract every home in parallel, then select
//! the cohort and merge per-home statistics in home-id order.
//!
//! Every home is reduced to its own [`StatsAccumulator`] independently, and the cohort's
//! accumulators are merged serially in sorted order, so results never depend on the number
//! of worker threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::condition::{condition_home, write_conditioned_csv, ConditionConfig, ConditionError, TempUnit};
use crate::features::{extract_home, mscs_at_window, DetectDiagnostics, FeatureConfig, HomeFeatures, MscFeature};
use crate::ingest::{
    list_homes, parse_home, read_corpus_metadata, select_cohort, CohortCriteria, ColumnMap, HomeMeta,
    IngestError, MetaColumnMap, ParseReport, ParsedHome,
};
use crate::model::FitOptions;
use crate::stats::{StatsAccumulator, StatsConfig, StatsError};
use crate::synth::HomeObservation;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub columns: ColumnMap,
    pub meta_columns: MetaColumnMap,
    pub condition: ConditionConfig,
    pub features: FeatureConfig,
    pub stats: StatsConfig,
    pub cohort: CohortCriteria,
    /// Occupancy windows (minutes) re-run for the window-sensitivity tables.
    pub sensitivity_windows: Vec<u32>,
    pub fit: FitOptions,
    /// Quantile levels fitted besides `fit.quantile`.
    pub fit_levels: Vec<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            columns: ColumnMap::default(),
            meta_columns: MetaColumnMap::default(),
            condition: ConditionConfig::default(),
            features: FeatureConfig::default(),
            stats: StatsConfig::default(),
            cohort: CohortCriteria::default(),
            sensitivity_windows: vec![10, 20, 30, 45, 60],
            fit: FitOptions::default(),
            fit_levels: vec![0.25, 0.5, 0.75],
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        for &w in &self.sensitivity_windows {
            if w % crate::SAMPLE_MINUTES as u32 != 0 {
                return Err(PipelineError::Config(format!("sensitivity window {w} is not a multiple of 5")));
            }
        }
        if let Some(q) = self.fit_levels.iter().chain([&self.fit.quantile]).find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(PipelineError::Config(format!("quantile level {q} not in (0, 1)")));
        }
        StatsAccumulator::new(self.stats.clone())?;
        Ok(())
    }

    /// Windows for segment-length tables: the sensitivity set plus the working window.
    fn segment_windows(&self) -> BTreeSet<u32> {
        let mut w: BTreeSet<u32> = self.sensitivity_windows.iter().copied().collect();
        w.insert(self.condition.occupancy.window_minutes());
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomeStatus {
    Ok,
    /// Setpoint unit could not be identified; the home is excluded.
    UnknownUnit,
    /// Telemetry could not be read; the home is excluded.
    Failed,
}

/// One line of `diagnostics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeDiagnostic {
    pub home_id: String,
    pub status: HomeStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub parse: ParseReport,
    pub unit: TempUnit,
    pub changes: u64,
    pub mscs: u64,
    pub detect: DetectDiagnostics,
    pub in_cohort: bool,
}

/// A conditioned home and everything derived from it.
#[derive(Debug, Clone)]
pub struct ProcessedHome {
    pub features: HomeFeatures,
    pub unit: TempUnit,
    pub report: ParseReport,
    pub stats: StatsAccumulator,
    pub observation: Option<HomeObservation>,
}

/// Options that only change what is kept or written, never the statistics.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions<'a> {
    /// Write `<id>.csv` conditioned series here.
    pub conditioned_dir: Option<&'a Path>,
    /// Keep per-home observations for [`crate::synth::oracle_compare`].
    pub keep_observations: bool,
}

/// Condition, extract and reduce one parsed home.
pub fn process_home(
    parsed: &ParsedHome,
    cfg: &PipelineConfig,
    opts: &RunOptions<'_>,
) -> Result<ProcessedHome, PipelineError> {
    let home = condition_home(parsed, &cfg.condition)?;
    if let Some(dir) = opts.conditioned_dir {
        let mut w = BufWriter::new(File::create(dir.join(format!("{}.csv", home.home_id)))?);
        write_conditioned_csv(&mut w, &home).map_err(|e| PipelineError::Ingest(e.into()))?;
        w.flush()?;
    }
    let features = extract_home(&home, &cfg.features);
    let mut stats = StatsAccumulator::new(cfg.stats.clone())?;
    stats.add_home(&home.home_id, home.samples.len() as u64, features.msc_count());
    for m in &features.mscs {
        stats.accumulate(m);
    }
    stats.add_mental(features.mental_class, &features.episodes);
    let timestamps = home.timestamps();
    let motion = home.motion();
    for w in cfg.segment_windows() {
        let window = crate::condition::OccupancyFilterConfig::new(w)?;
        let occupied = home.occupancy_at(window);
        let segments = crate::condition::segment_occupancy(&timestamps, &motion, &occupied);
        stats.add_segments(w, &segments);
        if cfg.sensitivity_windows.contains(&w) {
            let mscs = mscs_at_window(&home, &features.changes, &occupied);
            stats.add_sensitivity(w, &mscs);
        }
    }
    let observation = opts.keep_observations.then(|| HomeObservation {
        home_id: home.home_id.clone(),
        changes: features.changes.clone(),
        mscs: features.mscs.clone(),
        timestamps,
        occupied: home.occupied.clone(),
    });
    Ok(ProcessedHome {
        unit: home.unit,
        report: parsed.report,
        features,
        stats,
        observation,
    })
}

/// Pipeline result for a corpus.
#[derive(Debug, Clone)]
pub struct CorpusRun {
    /// Cohort statistics.
    pub stats: StatsAccumulator,
    pub cohort: Vec<String>,
    pub diagnostics: Vec<HomeDiagnostic>,
    /// Cohort overrides in home-id then time order.
    pub features: Vec<MscFeature>,
    /// Cohort homes only, when requested.
    pub observations: Vec<HomeObservation>,
}

impl CorpusRun {
    pub fn failed_homes(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.status == HomeStatus::Failed).count()
    }

    pub fn unknown_unit_fraction(&self) -> f64 {
        let n = self.diagnostics.iter().filter(|d| d.status != HomeStatus::Failed).count();
        let unknown = self.diagnostics.iter().filter(|d| d.status == HomeStatus::UnknownUnit).count();
        if n == 0 {
            0.0
        } else {
            unknown as f64 / n as f64
        }
    }
}

/// Runs homes `0..metas.len()`, obtaining each from `load`. `metas` must be sorted by id.
pub fn run_homes<L>(
    metas: &[HomeMeta],
    load: L,
    cfg: &PipelineConfig,
    opts: &RunOptions<'_>,
) -> Result<CorpusRun, PipelineError>
where
    L: Fn(usize) -> Result<ParsedHome, IngestError> + Sync,
{
    cfg.validate()?;
    let outcomes: Vec<Result<ProcessedHome, HomeDiagnostic>> = (0..metas.len())
        .into_par_iter()
        .map(|i| {
            let id = &metas[i].home_id;
            let fail = |status, message: String, parse| HomeDiagnostic {
                home_id: id.clone(),
                status,
                message: Some(message),
                parse,
                unit: TempUnit::Unknown,
                changes: 0,
                mscs: 0,
                detect: DetectDiagnostics::default(),
                in_cohort: false,
            };
            let parsed = load(i).map_err(|e| fail(HomeStatus::Failed, e.to_string(), ParseReport::default()))?;
            process_home(&parsed, cfg, opts).map_err(|e| match e {
                PipelineError::Condition(ConditionError::UnknownUnit) => {
                    fail(HomeStatus::UnknownUnit, e.to_string(), parsed.report)
                }
                e => fail(HomeStatus::Failed, e.to_string(), parsed.report),
            })
        })
        .collect();

    let counts: BTreeMap<String, u64> = outcomes
        .iter()
        .filter_map(|o| o.as_ref().ok())
        .map(|p| (p.features.home_id.clone(), p.features.msc_count()))
        .collect();
    let cohort = select_cohort(metas, &counts, &cfg.cohort);
    let in_cohort: BTreeSet<&str> = cohort.iter().map(String::as_str).collect();

    let mut stats = StatsAccumulator::new(cfg.stats.clone())?;
    let mut diagnostics = Vec::with_capacity(outcomes.len());
    let mut features = Vec::new();
    let mut observations = Vec::new();
    for o in outcomes {
        match o {
            Ok(p) => {
                let member = in_cohort.contains(p.features.home_id.as_str());
                diagnostics.push(HomeDiagnostic {
                    home_id: p.features.home_id.clone(),
                    status: HomeStatus::Ok,
                    message: None,
                    parse: p.report,
                    unit: p.unit,
                    changes: p.features.changes.len() as u64,
                    mscs: p.features.msc_count(),
                    detect: p.features.diagnostics,
                    in_cohort: member,
                });
                if member {
                    stats.merge(&p.stats)?;
                    features.extend(p.features.mscs);
                    observations.extend(p.observation);
                }
            }
            Err(d) => diagnostics.push(d),
        }
    }
    Ok(CorpusRun {
        stats,
        cohort,
        diagnostics,
        features,
        observations,
    })
}

/// Runs every home under `<corpus>/homes`.
pub fn run_corpus(corpus: &Path, cfg: &PipelineConfig, opts: &RunOptions<'_>) -> Result<CorpusRun, PipelineError> {
    let files = list_homes(corpus)?;
    let metas = read_corpus_metadata(corpus, &files, &cfg.meta_columns)?;
    if let Some(dir) = opts.conditioned_dir {
        std::fs::create_dir_all(dir)?;
    }
    run_homes(
        &metas,
        |i| {
            let f = &files[i];
            parse_home(BufReader::new(File::open(&f.path)?), &f.home_id, &cfg.columns)
        },
        cfg,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{SynthConfig, Synthesizer};

    #[test]
    fn synthetic_corpus_end_to_end() {
        let synth = Synthesizer::new(SynthConfig {
            seed: 5,
            n_homes: 8,
            days: 30,
            ..SynthConfig::default()
        })
        .unwrap();
        let (homes, _) = synth.generate();
        let metas: Vec<HomeMeta> = homes.iter().map(|h| h.meta.clone()).collect();
        let cfg = PipelineConfig::default();
        let run = run_homes(
            &metas,
            |i| {
                Ok(ParsedHome {
                    home_id: homes[i].meta.home_id.clone(),
                    samples: homes[i].samples.clone(),
                    report: ParseReport::default(),
                })
            },
            &cfg,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(run.diagnostics.len(), 8);
        assert!(!run.cohort.is_empty());
        assert!(run.stats.surface.heat.total() + run.stats.surface.cool.total() > 0);
        assert!(run.features.windows(2).all(|w| w[0].sc.home_id <= w[1].sc.home_id));
    }

    #[test]
    fn bad_sensitivity_window_rejected() {
        let cfg = PipelineConfig {
            sensitivity_windows: vec![12],
            ..PipelineConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(PipelineError::Config(_))));
    }
}
