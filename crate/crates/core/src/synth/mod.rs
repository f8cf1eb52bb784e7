//! Synthetic telemetry with a planted override law, and the ground truth to check against.
//!
//! Every home is generated from `(seed, index)` alone, so corpora are reproducible and can
//! be produced in parallel in any order.

mod config;
mod home;
mod law;
mod oracle;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{
    BehaviorLaw, ChangeTiming, MentalMix, OccupancyPattern, ScheduleTemplate, SensorBias, SynthConfig,
};
pub use home::{HomeTruth, SynthHome, TrueChange, TrueEpisode, TrueMsc};
pub use law::TruncatedLogNormal;
pub use oracle::{oracle_compare, DiscrepancyReport, ErrorSummary, FitComparison, HomeObservation};

use crate::features::MentalModelClass;
use crate::ingest::{write_home_csv, write_metadata, HomeMeta, IngestError, HOMES_DIR, META_FILE};
use home::{generate_home, LawTable};

pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const SYNTH_CONFIG_FILE: &str = "synth_config.json";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// What was planted across a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub format_version: u32,
    pub config: SynthConfig,
    pub homes: Vec<HomeTruth>,
}

impl GroundTruth {
    pub fn home(&self, id: &str) -> Option<&HomeTruth> {
        self.homes
            .binary_search_by(|h| h.home_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.homes[i])
    }
}

/// Validated configuration plus the per-corpus tables homes draw from.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    cfg: SynthConfig,
    laws: LawTable,
    types: Vec<MentalModelClass>,
}

impl Synthesizer {
    pub fn new(cfg: SynthConfig) -> Result<Self, SynthError> {
        cfg.validate().map_err(SynthError::Config)?;
        let laws = LawTable::new(&cfg).map_err(SynthError::Config)?;
        // Home types by quota, shuffled, so the mix holds exactly in small corpora too.
        let n = cfg.n_homes;
        let n_valve = (cfg.mental.valve_trait * n as f64).round() as usize;
        let n_mis = ((cfg.mental.feedback_misestimate * n as f64).round() as usize).min(n - n_valve.min(n));
        let mut types = Vec::with_capacity(n);
        types.extend(std::iter::repeat_n(MentalModelClass::ValveTrait, n_valve.min(n)));
        types.extend(std::iter::repeat_n(MentalModelClass::FeedbackMisestimate, n_mis));
        types.resize(n, MentalModelClass::Feedback);
        types.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
        Ok(Synthesizer { cfg, laws, types })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    pub fn n_homes(&self) -> usize {
        self.cfg.n_homes
    }

    /// Home `index`, identical however and whenever it is asked for.
    pub fn home(&self, index: usize) -> SynthHome {
        assert!(index < self.cfg.n_homes, "home index {index} out of range");
        generate_home(&self.cfg, &self.laws, index, self.types[index])
    }

    /// Writes `homes/<id>.csv`, `meta.csv`, the ground truth and the configuration.
    ///
    /// Homes are generated on the current rayon pool; output does not depend on its size.
    pub fn write_corpus(&self, dir: &Path) -> Result<GroundTruth, SynthError> {
        let homes_dir = dir.join(HOMES_DIR);
        fs::create_dir_all(&homes_dir)?;
        let parts: Vec<(HomeMeta, HomeTruth)> = (0..self.n_homes())
            .into_par_iter()
            .map(|i| -> Result<_, SynthError> {
                let home = self.home(i);
                let path = homes_dir.join(format!("{}.csv", home.meta.home_id));
                let mut w = BufWriter::new(File::create(path)?);
                write_home_csv(&mut w, &home.samples)?;
                w.flush()?;
                Ok((home.meta, home.truth))
            })
            .collect::<Result<_, _>>()?;
        let (metas, homes): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
        write_metadata(BufWriter::new(File::create(dir.join(META_FILE))?), &metas)?;
        let truth = GroundTruth {
            format_version: crate::FORMAT_VERSION,
            config: self.cfg.clone(),
            homes,
        };
        write_json(&dir.join(GROUND_TRUTH_FILE), &truth)?;
        write_json(&dir.join(SYNTH_CONFIG_FILE), &self.cfg)?;
        Ok(truth)
    }

    /// Whole corpus in memory. Meant for small corpora; use [`Synthesizer::home`] to stream.
    pub fn generate(&self) -> (Vec<SynthHome>, GroundTruth) {
        let homes: Vec<SynthHome> = (0..self.n_homes()).into_par_iter().map(|i| self.home(i)).collect();
        let truth = GroundTruth {
            format_version: crate::FORMAT_VERSION,
            config: self.cfg.clone(),
            homes: homes.iter().map(|h| h.truth.clone()).collect(),
        };
        (homes, truth)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), SynthError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_ground_truth(path: &Path) -> Result<GroundTruth, SynthError> {
    let f = std::io::BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(f)?)
}
