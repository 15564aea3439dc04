//! The `texturekit` command-line frontend.
//!
//! Every subcommand runs one pipeline stage against a run directory. Flags
//! override the JSON file given with `--config`, which overrides defaults.
//! Each invocation writes `config.echo` (the effective [`RunConfig`]) and a
//! log under `logs/` into the run directory.

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use commands::{cluster, correlate, cv, explain, extract, grid, report, select, synth_cmd, train};
pub use config::{ExplainOptions, GridOptions, RunConfig, SelectionOptions};

use crate::error::{Error, Result};
use crate::learners::{ClassWeight, FeatureSubset, Kernel, ModelSpec, RFParams, SvmParams};
use crate::patchio::Preprocessing;
use crate::synth::ClassEffect;

#[derive(Debug, Parser)]
#[command(name = "texturekit", version, about = "Texture-feature classification pipeline for multiparametric MRI patches")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    /// Dataset manifest.
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true, env = "TEXTUREKIT_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_parser = parse_prep)]
    pub prep: Option<Preprocessing>,
    #[arg(long, global = true)]
    pub patch_size: Option<usize>,
    /// Augmented copies per original sample.
    #[arg(long, global = true)]
    pub augment_count: Option<usize>,
    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Rf,
    Svm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Linear,
    Rbf,
}

/// Single-model hyperparameters. Forest flags conflict with an SVM model
/// and vice versa.
#[derive(Debug, Default, Args)]
pub struct ModelArgs {
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long, global = true)]
    pub trees: Option<usize>,
    /// 0 means unlimited.
    #[arg(long, global = true)]
    pub max_depth: Option<usize>,
    #[arg(long, global = true)]
    pub min_leaf: Option<usize>,
    #[arg(long, global = true)]
    pub min_split: Option<usize>,
    /// `sqrt`, `all` or a count.
    #[arg(long, global = true, value_parser = parse_subset)]
    pub features_per_split: Option<FeatureSubset>,
    #[arg(long, global = true)]
    pub no_bootstrap: bool,
    #[arg(long, global = true)]
    pub balanced: bool,
    #[arg(long, global = true, value_enum)]
    pub kernel: Option<KernelArg>,
    #[arg(long, global = true)]
    pub c: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic three-modality dataset.
    Synth(SynthArgs),
    /// Resize, augment and extract features into features.csv.
    Extract,
    /// Fit one model on the whole feature table.
    Train {
        /// Restrict to the features listed in this file.
        #[arg(long)]
        subset: Option<PathBuf>,
    },
    /// Patient-grouped cross-validation of one model.
    Cv {
        /// Re-extract per fold from the dataset instead of using features.csv.
        #[arg(long)]
        image_level: bool,
        #[arg(long)]
        subset: Option<PathBuf>,
    },
    /// Cross-validate the model grid and rank it.
    Grid {
        /// Sweep preprocessing variants and patch sizes from the dataset.
        #[arg(long)]
        image_level: bool,
        /// Restrict the grid to one model family.
        #[arg(long, value_enum)]
        family: Option<ModelKind>,
    },
    /// Cluster ranked configurations by their metrics.
    Cluster {
        #[arg(long)]
        k: Option<usize>,
    },
    /// Sequential backward floating feature selection.
    Select {
        #[arg(long)]
        prefilter: bool,
        #[arg(long)]
        prefilter_threshold: Option<f64>,
        #[arg(long)]
        patience: Option<usize>,
        #[arg(long)]
        min_size: Option<usize>,
    },
    /// Shapley attribution of the trained forest.
    Explain {
        /// Model file; defaults to models/model.json.
        #[arg(long)]
        model_file: Option<PathBuf>,
        /// Include augmented rows.
        #[arg(long)]
        all_rows: bool,
        #[arg(long)]
        cutoff_share: Option<f64>,
    },
    /// Pearson correlation of the extracted features.
    Correlate,
    /// Render SVG figures from the run directory.
    Report {
        /// Omit the generation-time comment for byte-stable output.
        #[arg(long)]
        no_timestamp: bool,
        #[arg(long)]
        top: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory; defaults to <run-dir>/data.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub patients: Option<usize>,
    #[arg(long)]
    pub samples_per_patient: Option<usize>,
    #[arg(long, value_parser = parse_effect)]
    pub class_effect: Option<ClassEffect>,
    #[arg(long)]
    pub noise: Option<f64>,
}

fn parse_prep(s: &str) -> std::result::Result<Preprocessing, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_effect(s: &str) -> std::result::Result<ClassEffect, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_subset(s: &str) -> std::result::Result<FeatureSubset, String> {
    match s {
        "sqrt" => Ok(FeatureSubset::Sqrt),
        "all" => Ok(FeatureSubset::All),
        n => n
            .parse()
            .map(FeatureSubset::Count)
            .map_err(|_| format!("expected sqrt, all or a count, got {n:?}")),
    }
}

impl ModelArgs {
    fn any_forest_flag(&self) -> bool {
        self.trees.is_some()
            || self.max_depth.is_some()
            || self.min_leaf.is_some()
            || self.min_split.is_some()
            || self.features_per_split.is_some()
            || self.no_bootstrap
            || self.balanced
    }

    fn any_svm_flag(&self) -> bool {
        self.kernel.is_some() || self.c.is_some() || self.gamma.is_some()
    }

    fn apply(&self, spec: &mut ModelSpec) -> Result<()> {
        match (self.model, &spec) {
            (Some(ModelKind::Rf), ModelSpec::Svm(_)) => *spec = ModelSpec::RandomForest(RFParams::default()),
            (Some(ModelKind::Svm), ModelSpec::RandomForest(_)) => *spec = ModelSpec::Svm(SvmParams::default()),
            _ => {}
        }
        match spec {
            ModelSpec::RandomForest(p) => {
                if self.any_svm_flag() {
                    return Err(Error::Config("SVM flags given for a random forest model".into()));
                }
                if let Some(v) = self.trees {
                    p.n_trees = v;
                }
                if let Some(v) = self.max_depth {
                    p.max_depth = v;
                }
                if let Some(v) = self.min_leaf {
                    p.min_samples_leaf = v;
                }
                if let Some(v) = self.min_split {
                    p.min_samples_split = v;
                }
                if let Some(v) = self.features_per_split {
                    p.features_per_split = v;
                }
                if self.no_bootstrap {
                    p.bootstrap = false;
                }
                if self.balanced {
                    p.class_weight = ClassWeight::Balanced;
                }
            }
            ModelSpec::Svm(p) => {
                if self.any_forest_flag() {
                    return Err(Error::Config("forest flags given for an SVM model".into()));
                }
                if let Some(k) = self.kernel {
                    p.kernel = match k {
                        KernelArg::Linear => Kernel::Linear,
                        KernelArg::Rbf => Kernel::Rbf,
                    };
                }
                if let Some(v) = self.c {
                    p.c = v;
                }
                if let Some(v) = self.gamma {
                    p.gamma = v;
                }
            }
        }
        Ok(())
    }
}

/// Resolves the effective configuration: defaults, then `--config`, then
/// flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &g.run_dir {
        cfg.run_dir = v.clone();
    }
    if let Some(v) = &g.dataset {
        cfg.dataset = Some(v.clone());
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
        cfg.synth.seed = v;
    }
    if let Some(v) = g.prep {
        cfg.prep = v;
    }
    if let Some(v) = g.patch_size {
        cfg.patch_size = v;
        cfg.synth.patch_size = v;
    }
    if let Some(v) = g.augment_count {
        cfg.augment.per_sample_count = v;
    }
    if let Some(v) = g.folds {
        cfg.folds = v;
    }
    g.model.apply(&mut cfg.model)?;
    match &cli.command {
        Command::Synth(a) => {
            if let Some(v) = a.patients {
                cfg.synth.n_patients = v;
            }
            if let Some(v) = a.samples_per_patient {
                cfg.synth.samples_per_patient = v;
            }
            if let Some(v) = a.class_effect {
                cfg.synth.class_effect = v;
            }
            if let Some(v) = a.noise {
                cfg.synth.noise_level = v;
            }
        }
        Command::Grid { family: Some(f), .. } => {
            cfg.grid.models.retain(|m| {
                matches!(
                    (f, m),
                    (ModelKind::Rf, ModelSpec::RandomForest(_)) | (ModelKind::Svm, ModelSpec::Svm(_))
                )
            });
        }
        Command::Cluster { k: Some(k) } => cfg.clusters = *k,
        Command::Select {
            prefilter,
            prefilter_threshold,
            patience,
            min_size,
        } => {
            cfg.selection.prefilter |= *prefilter;
            if let Some(v) = prefilter_threshold {
                cfg.selection.prefilter_threshold = *v;
            }
            if let Some(v) = patience {
                cfg.selection.sbfs.patience = *v;
            }
            if let Some(v) = min_size {
                cfg.selection.sbfs.min_size = *v;
            }
        }
        Command::Explain {
            all_rows,
            cutoff_share,
            ..
        } => {
            cfg.explain.all_rows |= *all_rows;
            if let Some(v) = cutoff_share {
                cfg.explain.cutoff_share = *v;
            }
        }
        Command::Report { no_timestamp, top } => {
            if *no_timestamp {
                cfg.explain.timestamp = false;
            }
            if let Some(v) = top {
                cfg.explain.top_features = *v;
            }
        }
        _ => {}
    }
    cfg.validate()?;
    cfg.synth.validate()?;
    Ok(cfg)
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Extract => "extract",
            Command::Train { .. } => "train",
            Command::Cv { .. } => "cv",
            Command::Grid { .. } => "grid",
            Command::Cluster { .. } => "cluster",
            Command::Select { .. } => "select",
            Command::Explain { .. } => "explain",
            Command::Correlate => "correlate",
            Command::Report { .. } => "report",
        }
    }
}

#[derive(Serialize)]
struct RunLog<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    threads: usize,
    wall_time_s: f64,
    outputs: Vec<String>,
    config: &'a RunConfig,
}

fn dispatch(cmd: &Command, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    match cmd {
        Command::Synth(a) => synth_cmd(cfg, a.out.as_deref()),
        Command::Extract => extract(cfg),
        Command::Train { subset } => train(cfg, subset.as_deref()),
        Command::Cv { image_level, subset } => cv(cfg, *image_level, subset.as_deref()),
        Command::Grid { image_level, .. } => grid(cfg, *image_level),
        Command::Cluster { .. } => cluster(cfg),
        Command::Select { .. } => select(cfg),
        Command::Explain { model_file, .. } => explain(cfg, model_file.as_deref()),
        Command::Correlate => correlate(cfg),
        Command::Report { .. } => report(cfg),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Runs a parsed command line and returns the paths it wrote.
pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = resolve_config(cli)?;
    let threads = match cli.global.threads {
        Some(0) => return Err(Error::Config("--threads must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let start = Instant::now();
    write_file(&cfg.run_dir.join("config.echo"), &cfg.to_json())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outputs = pool.install(|| dispatch(&cli.command, &cfg))?;
    let log = RunLog {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        threads,
        wall_time_s: start.elapsed().as_secs_f64(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        config: &cfg,
    };
    let mut text = serde_json::to_string_pretty(&log)?;
    text.push('\n');
    write_file(&cfg.run_dir.join("logs").join(format!("{}.json", log.command)), &text)?;
    Ok(outputs)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code: 0 success, 2 usage, 3 data, 4 numeric failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("texturekit {}: {e}", cli.command.name());
            e.exit_code()
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("texturekit").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn best_forest_flags_are_accepted() {
        let cli = parse(&["train", "--trees", "100", "--max-depth", "0", "--min-leaf", "2", "--min-split", "1"]);
        let cfg = resolve_config(&cli).unwrap();
        let ModelSpec::RandomForest(p) = cfg.model else {
            panic!("expected a forest")
        };
        assert_eq!((p.n_trees, p.max_depth, p.min_samples_leaf, p.min_samples_split), (100, 0, 2, 1));
    }

    #[test]
    fn mixed_family_flags_are_usage_errors() {
        let cli = parse(&["train", "--trees", "10", "--c", "2"]);
        assert_eq!(resolve_config(&cli).unwrap_err().exit_code(), 2);
        let cli = parse(&["cv", "--model", "svm", "--kernel", "linear", "--c", "2"]);
        let cfg = resolve_config(&cli).unwrap();
        assert!(matches!(cfg.model, ModelSpec::Svm(SvmParams { kernel: Kernel::Linear, c, .. }) if c == 2.0));
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"seed": 5, "folds": 3, "patch_size": 24}"#).unwrap();
        let cli = parse(&["extract", "--config", p.to_str().unwrap(), "--seed", "7"]);
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!((cfg.seed, cfg.folds, cfg.patch_size), (7, 3, 24));
    }

    #[test]
    fn grid_family_filter() {
        let cfg = resolve_config(&parse(&["grid", "--family", "rf"])).unwrap();
        assert_eq!(cfg.grid.models.len(), 36);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["texturekit", "--bogus"]), 2);
        assert_eq!(run(["texturekit", "--help"]), 0);
        let dir = tempfile::tempdir().unwrap();
        let rd = dir.path().to_str().unwrap();
        assert_eq!(run(["texturekit", "train", "--run-dir", rd]), 3);
        assert_eq!(run(["texturekit", "cv", "--run-dir", rd, "--folds", "1"]), 2);
    }
}
