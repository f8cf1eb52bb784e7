use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thermodyn::ingest::HOMES_DIR;
use thermodyn::model::{
    fit, predict_empirical, predict_from_models, FitOptions, ModelFile, OverrideModel, OverridePrediction,
};
use thermodyn::pipeline::{run_corpus, CorpusRun, HomeDiagnostic, HomeStatus, PipelineConfig, RunOptions};
use thermodyn::stats::{summarize, write_figures, PerMode, QuantileSurface};
use thermodyn::synth::{Synthesizer, SYNTH_CONFIG_FILE};
use thermodyn::{HvacMode, FORMAT_VERSION};

use crate::config::{AnalysisFlags, Format, RunConfig};
use crate::{Cli, CliError, Command, PredictArgs, SynthArgs};

pub const REPORT_FILE: &str = "report.json";
pub const SURFACE_FILE: &str = "surface.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";
pub const FEATURES_FILE: &str = "features.csv";
pub const FIGURES_DIR: &str = "figures";
pub const CONDITIONED_DIR: &str = "conditioned";

/// Global flags merged over the configuration file.
struct Context {
    cfg: RunConfig,
    input: Option<PathBuf>,
    output: Option<PathBuf>,
    seed: Option<u64>,
    format: Format,
}

impl Context {
    fn input(&self) -> Result<&Path, CliError> {
        let p = self.input.as_deref().ok_or_else(|| CliError::Usage("--input is required".into()))?;
        if !p.is_dir() {
            return Err(CliError::Usage(format!("input directory {} does not exist", p.display())));
        }
        Ok(p)
    }

    fn corpus(&self) -> Result<&Path, CliError> {
        let p = self.input()?;
        if !p.join(HOMES_DIR).is_dir() {
            return Err(CliError::Usage(format!("{} has no {HOMES_DIR}/ directory", p.display())));
        }
        Ok(p)
    }

    fn output(&self) -> Result<&Path, CliError> {
        self.output.as_deref().ok_or_else(|| CliError::Usage("--output is required".into()))
    }

    fn pipeline(&self, flags: &AnalysisFlags) -> Result<PipelineConfig, CliError> {
        let mut p = self.cfg.pipeline.clone();
        flags.apply(&mut p)?;
        Ok(p)
    }

    /// Flag, then config, then whatever seed produced the input.
    fn seed_from_input(&self, file: &str) -> Option<u64> {
        self.seed.or_else(|| {
            let p = self.input.as_ref()?.join(file);
            read_json::<SeedOnly>(&p).ok().and_then(|v| v.seed)
        })
    }
}

#[derive(Deserialize)]
struct SeedOnly {
    seed: Option<u64>,
}

/// Per-mode quantile surfaces as stored between `stats` and `fit`.
#[derive(Debug, Serialize, Deserialize)]
struct SurfaceFile {
    format_version: u32,
    seed: Option<u64>,
    heat: QuantileSurface,
    cool: QuantileSurface,
}

impl SurfaceFile {
    fn new(s: &PerMode<QuantileSurface>, seed: Option<u64>) -> Self {
        SurfaceFile {
            format_version: FORMAT_VERSION,
            seed,
            heat: s.get(HvacMode::Heat).clone(),
            cool: s.get(HvacMode::Cool).clone(),
        }
    }

    fn get(&self, m: HvacMode) -> &QuantileSurface {
        match m {
            HvacMode::Heat => &self.heat,
            HvacMode::Cool => &self.cool,
        }
    }
}

#[derive(Debug, Serialize)]
struct DiagnosticsFile<'a> {
    format_version: u32,
    seed: Option<u64>,
    homes: usize,
    ok: usize,
    unknown_unit: usize,
    failed: usize,
    unknown_unit_fraction: f64,
    cohort: usize,
    per_home: &'a [HomeDiagnostic],
}

#[derive(Debug, Serialize)]
struct PredictOutput {
    #[serde(flatten)]
    prediction: OverridePrediction,
    seed: Option<u64>,
}

pub(crate) fn dispatch(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let threads = cli.threads.or(cfg.threads);
    let ctx = Context {
        input: cli.input.or_else(|| cfg.input.clone()),
        output: cli.output.or_else(|| cfg.output.clone()),
        seed: cli.seed.or(cfg.seed),
        format: cli.format.or(cfg.format).unwrap_or_default(),
        cfg,
    };
    let command = cli.command;
    match threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
            .install(|| execute(&ctx, command)),
        None => execute(&ctx, command),
    }
}

fn execute(ctx: &Context, command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(a) => synth(ctx, &a),
        Command::Condition(f) => condition(ctx, &f),
        Command::Extract(f) => analyze(ctx, &f, Stage::Extract),
        Command::Stats(f) => analyze(ctx, &f, Stage::Stats),
        Command::All(f) => analyze(ctx, &f, Stage::All),
        Command::Fit(f) => fit_stored(ctx, &f),
        Command::Predict(a) => predict(ctx, &a),
    }
}

fn synth(ctx: &Context, a: &SynthArgs) -> Result<(), CliError> {
    let mut cfg = ctx.cfg.synth.clone();
    if let Some(n) = a.homes {
        cfg.n_homes = n;
    }
    if let Some(d) = a.days {
        cfg.days = d;
    }
    if let Some(s) = ctx.seed {
        cfg.seed = s;
    }
    if a.noiseless {
        cfg = cfg.noiseless();
    }
    let synth = Synthesizer::new(cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let out = ctx.output()?;
    synth.write_corpus(out).map_err(|e| CliError::Data(e.to_string()))?;
    eprintln!("wrote {} homes to {}", synth.n_homes(), out.display());
    Ok(())
}

fn condition(ctx: &Context, flags: &AnalysisFlags) -> Result<(), CliError> {
    let corpus = ctx.corpus()?;
    let out = ctx.output()?;
    let cfg = ctx.pipeline(flags)?;
    let seed = ctx.seed_from_input(SYNTH_CONFIG_FILE);
    let dir = out.join(CONDITIONED_DIR);
    let opts = RunOptions {
        conditioned_dir: Some(&dir),
        keep_observations: false,
    };
    let run = run_corpus(corpus, &cfg, &opts).map_err(|e| CliError::Data(e.to_string()))?;
    write_diagnostics(out, &run, seed)?;
    home_failures(&run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stage {
    Extract,
    Stats,
    All,
}

fn analyze(ctx: &Context, flags: &AnalysisFlags, stage: Stage) -> Result<(), CliError> {
    let corpus = ctx.corpus()?;
    let out = ctx.output()?;
    let cfg = ctx.pipeline(flags)?;
    let seed = ctx.seed_from_input(SYNTH_CONFIG_FILE);
    let run = run_corpus(corpus, &cfg, &RunOptions::default()).map_err(|e| CliError::Data(e.to_string()))?;
    fs::create_dir_all(out)?;
    write_diagnostics(out, &run, seed)?;
    if stage != Stage::Stats {
        let mut w = BufWriter::new(File::create(out.join(FEATURES_FILE))?);
        thermodyn::features::write_features_csv(&mut w, &run.features).map_err(|e| CliError::Data(e.to_string()))?;
        w.flush()?;
    }
    let mut fit_result = Ok(());
    if stage != Stage::Extract {
        write_json(&out.join(REPORT_FILE), &summarize(&run.stats, seed))?;
        write_figures(&run.stats, &out.join(FIGURES_DIR))?;
        let surfaces = SurfaceFile::new(&run.stats.surface, seed);
        write_json(&out.join(SURFACE_FILE), &surfaces)?;
        if stage == Stage::All {
            fit_result = fit_and_write(&surfaces, &cfg, out, seed);
        }
    }
    home_failures(&run)?;
    fit_result
}

fn fit_stored(ctx: &Context, flags: &AnalysisFlags) -> Result<(), CliError> {
    let input = ctx.input()?;
    let path = input.join(SURFACE_FILE);
    if !path.is_file() {
        return Err(CliError::Usage(format!("{} not found; run `stats` first", path.display())));
    }
    let out = ctx.output()?;
    let cfg = ctx.pipeline(flags)?;
    let surfaces: SurfaceFile = read_json(&path)?;
    let seed = ctx.seed.or(surfaces.seed);
    fs::create_dir_all(out)?;
    fit_and_write(&surfaces, &cfg, out, seed)
}

pub fn model_file_name(mode: HvacMode) -> String {
    format!("model_{}.json", mode.as_str())
}

/// Fits every mode and writes the ones that succeed; any failure is a data error.
fn fit_and_write(surfaces: &SurfaceFile, cfg: &PipelineConfig, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let mut errors = Vec::new();
    for mode in HvacMode::ALL {
        let surface = surfaces.get(mode);
        let primary = match fit(surface, mode, &cfg.fit) {
            Ok(m) => m,
            Err(e) => {
                errors.push(format!("{mode}: {e}"));
                continue;
            }
        };
        let levels: Vec<OverrideModel> = cfg
            .fit_levels
            .iter()
            .filter_map(|&q| fit(surface, mode, &FitOptions { quantile: q, ..cfg.fit }).ok())
            .collect();
        write_json(&out.join(model_file_name(mode)), &ModelFile::new(primary, &levels, seed))?;
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(CliError::Data(format!("fit failed for {}", errors.join("; "))))
    }
}

fn predict(ctx: &Context, a: &PredictArgs) -> Result<(), CliError> {
    if !a.horizon.is_finite() || a.horizon < 0.0 || !a.dod.is_finite() {
        return Err(CliError::Usage("--dod must be finite and --horizon non-negative".into()));
    }
    let mode = match a.mode {
        Some(m) => m,
        None if a.dod > 0.0 => HvacMode::Heat,
        None if a.dod < 0.0 => HvacMode::Cool,
        None => return Err(CliError::Usage("--mode is required when --dod is 0".into())),
    };
    let input = ctx.input()?;
    let (prediction, seed) = if a.empirical {
        let path = input.join(SURFACE_FILE);
        if !path.is_file() {
            return Err(CliError::Usage(format!("{} not found", path.display())));
        }
        let s: SurfaceFile = read_json(&path)?;
        let p = predict_empirical(s.get(mode), mode, a.dod, a.horizon).map_err(|e| CliError::Data(e.to_string()))?;
        (p, s.seed)
    } else {
        let path = input.join(model_file_name(mode));
        if !path.is_file() {
            return Err(CliError::Usage(format!("{} not found", path.display())));
        }
        let m: ModelFile = read_json(&path)?;
        let p = predict_from_models(&m.level_models(), a.dod, a.horizon).map_err(|e| CliError::Data(e.to_string()))?;
        (p, m.seed)
    };
    let out = PredictOutput {
        prediction,
        seed: ctx.seed.or(seed),
    };
    let text = match ctx.format {
        Format::Json => serde_json::to_string_pretty(&out).map_err(|e| CliError::Data(e.to_string()))? + "\n",
        Format::Csv => {
            let p = &out.prediction;
            format!(
                "mode,dod_f,horizon_minutes,fraction_overriding,source,seed\n{},{},{},{},{},{}\n",
                p.mode,
                p.dod,
                p.horizon_minutes,
                p.fraction_overriding,
                serde_json::to_value(p.source).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                out.seed.map(|s| s.to_string()).unwrap_or_default()
            )
        }
    };
    std::io::stdout().write_all(text.as_bytes())?;
    Ok(())
}

fn write_diagnostics(out: &Path, run: &CorpusRun, seed: Option<u64>) -> Result<(), CliError> {
    let count = |s| run.diagnostics.iter().filter(|d| d.status == s).count();
    let file = DiagnosticsFile {
        format_version: FORMAT_VERSION,
        seed,
        homes: run.diagnostics.len(),
        ok: count(HomeStatus::Ok),
        unknown_unit: count(HomeStatus::UnknownUnit),
        failed: count(HomeStatus::Failed),
        unknown_unit_fraction: run.unknown_unit_fraction(),
        cohort: run.cohort.len(),
        per_home: &run.diagnostics,
    };
    fs::create_dir_all(out)?;
    write_json(&out.join(DIAGNOSTICS_FILE), &file)
}

fn home_failures(run: &CorpusRun) -> Result<(), CliError> {
    match run.failed_homes() {
        0 => Ok(()),
        n => Err(CliError::Data(format!("{n} home(s) could not be read; see {DIAGNOSTICS_FILE}"))),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Data(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let r = BufReader::new(File::open(path)?);
    serde_json::from_reader(r).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
