use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thermodyn::condition::OccupancyFilterConfig;
use thermodyn::ingest::CohortCriteria;
use thermodyn::pipeline::PipelineConfig;
use thermodyn::synth::SynthConfig;

use crate::CliError;

/// Contents of a `--config` TOML file. Command-line flags win over anything set here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub pipeline: PipelineConfig,
    pub synth: SynthConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Cohort {
    /// Single-occupant homes only.
    Single,
    All,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
    }
}

/// Flags that adjust the analysis; each one left out keeps the configured value.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct AnalysisFlags {
    /// Occupancy filter window in minutes (multiple of 5).
    #[arg(long)]
    pub window: Option<u32>,
    #[arg(long, value_enum)]
    pub cohort: Option<Cohort>,
    /// Minimum manual setpoint changes for a home to enter the cohort.
    #[arg(long)]
    pub min_msc: Option<u64>,
    /// Quantile level of the primary fit.
    #[arg(long)]
    pub quantile: Option<f64>,
    /// Drop TTDs at or below this many minutes before fitting; 0 keeps all.
    #[arg(long)]
    pub truncate_min: Option<u32>,
}

impl AnalysisFlags {
    pub fn apply(&self, cfg: &mut PipelineConfig) -> Result<(), CliError> {
        if let Some(w) = self.window {
            cfg.condition.occupancy = OccupancyFilterConfig::new(w).map_err(|e| CliError::Usage(e.to_string()))?;
        }
        match self.cohort {
            Some(Cohort::Single) => cfg.cohort.occupant_count = CohortCriteria::single_occupant().occupant_count,
            Some(Cohort::All) => cfg.cohort.occupant_count = None,
            None => {}
        }
        if let Some(n) = self.min_msc {
            cfg.cohort.min_msc_count = n;
        }
        if let Some(q) = self.quantile {
            cfg.fit.quantile = q;
        }
        if let Some(t) = self.truncate_min {
            cfg.fit.truncate_minutes = (t > 0).then_some(t);
        }
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_sections_parse() {
        let cfg: RunConfig = toml::from_str(
            r#"
            seed = 9
            format = "csv"
            [pipeline.cohort]
            min_msc_count = 3
            [pipeline.condition]
            occupancy = 45
            [synth]
            n_homes = 4
            "#,
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.format, Some(Format::Csv));
        assert_eq!(cfg.pipeline.cohort.min_msc_count, 3);
        assert_eq!(cfg.pipeline.condition.occupancy.window_minutes(), 45);
        assert_eq!(cfg.synth.n_homes, 4);
        assert_eq!(cfg.synth.days, SynthConfig::default().days);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("thread = 2").is_err());
    }

    #[test]
    fn flags_override() {
        let mut cfg = PipelineConfig::default();
        let flags = AnalysisFlags {
            window: Some(60),
            cohort: Some(Cohort::Single),
            min_msc: Some(0),
            quantile: Some(0.75),
            truncate_min: Some(0),
        };
        flags.apply(&mut cfg).unwrap();
        assert_eq!(cfg.condition.occupancy.window_minutes(), 60);
        assert_eq!(cfg.cohort.occupant_count, Some(1));
        assert_eq!(cfg.cohort.min_msc_count, 0);
        assert_eq!(cfg.fit.quantile, 0.75);
        assert_eq!(cfg.fit.truncate_minutes, None);
        let bad = AnalysisFlags {
            window: Some(7),
            ..AnalysisFlags::default()
        };
        assert!(matches!(bad.apply(&mut cfg), Err(CliError::Usage(_))));
    }
}
