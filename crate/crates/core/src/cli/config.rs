use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::AugmentSpec;
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::learners::{ModelSpec, RFParams};
use crate::patchio::Preprocessing;
use crate::select::SbfsOptions;
use crate::synth::SyntheticSpec;

/// Models and image settings swept by the `grid` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridOptions {
    /// Only used for image-level grids; a feature table fixes both.
    pub preps: Vec<Preprocessing>,
    pub patch_sizes: Vec<usize>,
    pub models: Vec<ModelSpec>,
}

impl Default for GridOptions {
    fn default() -> Self {
        let mut models = ModelSpec::rf_grid();
        models.extend(ModelSpec::svm_grid());
        GridOptions {
            preps: Preprocessing::ALL.to_vec(),
            patch_sizes: vec![16],
            models,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionOptions {
    /// Drop near-duplicate columns before the wrapper search.
    pub prefilter: bool,
    pub prefilter_threshold: f64,
    pub sbfs: SbfsOptions,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions {
            prefilter: false,
            prefilter_threshold: 0.98,
            sbfs: SbfsOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainOptions {
    /// Features are flagged until their cumulative share reaches this.
    pub cutoff_share: f64,
    /// Rows drawn in the strip plot and bar chart.
    pub top_features: usize,
    /// Attribute augmented rows too, not only the originals.
    pub all_rows: bool,
    pub timestamp: bool,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions {
            cutoff_share: 0.7,
            top_features: 20,
            all_rows: false,
            timestamp: true,
        }
    }
}

/// Everything a run depends on besides its input files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Manifest of the input dataset.
    pub dataset: Option<PathBuf>,
    pub run_dir: PathBuf,
    pub prep: Preprocessing,
    pub patch_size: usize,
    pub augment: AugmentSpec,
    pub features: FeatureConfig,
    pub model: ModelSpec,
    pub grid: GridOptions,
    pub folds: usize,
    pub clusters: usize,
    pub seed: u64,
    pub synth: SyntheticSpec,
    pub selection: SelectionOptions,
    pub explain: ExplainOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            run_dir: PathBuf::from("run"),
            prep: Preprocessing::None,
            patch_size: 16,
            augment: AugmentSpec::default(),
            features: FeatureConfig::default(),
            model: ModelSpec::RandomForest(RFParams::default()),
            grid: GridOptions::default(),
            folds: 5,
            clusters: 3,
            seed: 0,
            synth: SyntheticSpec::default(),
            selection: SelectionOptions::default(),
            explain: ExplainOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        self.augment.validate()?;
        self.features.validate()?;
        self.model.validate()?;
        for m in &self.grid.models {
            m.validate()?;
        }
        if self.patch_size < 8 || self.grid.patch_sizes.iter().any(|&s| s < 8) {
            return Err(Error::Config("patch sizes must be at least 8".into()));
        }
        if self.folds < 2 {
            return Err(Error::Config("at least 2 folds are needed".into()));
        }
        if self.clusters == 0 {
            return Err(Error::Config("clusters must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.explain.cutoff_share) {
            return Err(Error::Config("cutoff_share must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.selection.prefilter_threshold) {
            return Err(Error::Config("prefilter_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn dataset(&self) -> Result<&Path> {
        self.dataset
            .as_deref()
            .ok_or_else(|| Error::Config("no dataset manifest given (--dataset)".into()))
    }

    pub fn features_path(&self) -> PathBuf {
        self.run_dir.join("features.csv")
    }

    pub fn var_edges_path(&self) -> PathBuf {
        self.run_dir.join("var_edges.json")
    }

    pub fn metrics_path(&self) -> PathBuf {
        self.run_dir.join("metrics.csv")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.run_dir.join("models")
    }

    pub fn model_path(&self) -> PathBuf {
        self.models_dir().join("model.json")
    }

    pub fn selection_dir(&self) -> PathBuf {
        self.run_dir.join("selection")
    }

    pub fn shap_dir(&self) -> PathBuf {
        self.run_dir.join("shap")
    }

    pub fn correlation_dir(&self) -> PathBuf {
        self.run_dir.join("correlation")
    }

    pub fn figures_dir(&self) -> PathBuf {
        self.run_dir.join("figures")
    }
}
