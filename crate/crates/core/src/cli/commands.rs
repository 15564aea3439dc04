//! One function per pipeline stage. Each reads the previous stage's files
//! from the run directory, validates them and returns the paths it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use crate::augment::augment_dataset;
use crate::error::{Error, Result};
use crate::evaluate::{
    cluster_configs, cross_validate_detailed, cross_validate_table_detailed, grid_search,
    grid_search_table, make_folds, make_folds_table, rank_summaries, read_metrics_csv,
    write_metrics_csv, CvConfig, CvRun, GridCell, GridSettings, MetricSummary,
};
use crate::explain::{
    correlation_heatmap_svg, metrics_bar_svg, pearson_matrix, shap_strip_svg, shap_summary,
    shap_table, summary_to_csv, ShapReport, SvgOptions,
};
use crate::features::{build_table, FeatureTable, VarEdges};
use crate::learners::{load_model, save_model, Learner, Model};
use crate::patchio::load_manifest;
use crate::rng::derive_seed;
use crate::select::{correlation_prefilter, read_subset, sbfs};
use crate::synth::synth;

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_text(path, &s)
}

fn read_table(cfg: &RunConfig) -> Result<FeatureTable> {
    let p = cfg.features_path();
    if !p.exists() {
        return Err(Error::InvalidData(format!(
            "{} not found; run `extract` first",
            p.display()
        )));
    }
    FeatureTable::read_csv(&p)
}

fn read_edges(cfg: &RunConfig) -> Result<Option<VarEdges>> {
    let p = cfg.var_edges_path();
    if !p.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    Ok(Some(serde_json::from_str(&text)?))
}

/// Config id prefix for tables extracted under `cfg`.
fn table_prefix(cfg: &RunConfig) -> String {
    format!("{}-{}px-", cfg.prep.name(), cfg.patch_size)
}

/// Writes a synthetic dataset to `out` (default `<run>/data`).
pub fn synth_cmd(cfg: &RunConfig, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let dir = out.map_or_else(|| cfg.run_dir.join("data"), Path::to_path_buf);
    let manifest = synth(&cfg.synth, &dir)?;
    println!("{}", manifest.display());
    Ok(vec![manifest])
}

#[derive(Serialize)]
struct ExtractSummary {
    samples: usize,
    originals: usize,
    patients: usize,
    features: usize,
    imputed_columns: Vec<String>,
}

/// Resizes, augments and extracts the dataset into `features.csv`.
pub fn extract(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let d = load_manifest(cfg.dataset()?)?;
    let originals = d.len();
    let resized = d.resized(cfg.patch_size)?;
    let augmented = augment_dataset(&resized, &cfg.augment, derive_seed(cfg.seed, &[0xA06]))?;
    let (table, edges) = build_table(&augmented, cfg.prep, &cfg.features)?;
    let (_, report) = table.impute();
    if !report.columns.is_empty() {
        log::warn!("{} columns have missing entries", report.columns.len());
    }
    let features = cfg.features_path();
    table.write_csv(&features)?;
    let summary = ExtractSummary {
        samples: table.len(),
        originals,
        patients: table.patients().len(),
        features: table.n_features(),
        imputed_columns: report.columns,
    };
    Ok(vec![
        features,
        write_json(&cfg.var_edges_path(), &edges)?,
        write_json(&cfg.run_dir.join("extract_summary.json"), &summary)?,
    ])
}

fn subset_of(path: Option<&Path>) -> Result<Option<Vec<String>>> {
    path.map(read_subset).transpose()
}

fn attach_edges(model: &mut Model, edges: Option<VarEdges>) {
    if let Model::Forest(f) = model {
        f.var_edges = edges;
    }
}

/// Fits the configured model on every row of the feature table.
pub fn train(cfg: &RunConfig, subset: Option<&Path>) -> Result<Vec<PathBuf>> {
    let mut table = read_table(cfg)?;
    if let Some(names) = subset_of(subset)? {
        table = table.project(&names)?;
    }
    let y = table.labels();
    let fitted = cfg.model.fit(&table.matrix(), &y, &table.names, derive_seed(cfg.seed, &[0x7A1]))?;
    let mut model = fitted
        .to_model()
        .ok_or_else(|| Error::ModelFormat("model has no serializable form".into()))?;
    attach_edges(&mut model, read_edges(cfg)?);
    let path = cfg.model_path();
    save_model(&model, &path)?;
    Ok(vec![path])
}

fn folds_csv(run: &CvRun) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "fold",
        "auc",
        "accuracy",
        "f1",
        "sensitivity",
        "specificity",
        "n_train",
        "n_test",
    ])?;
    for f in &run.folds {
        let o = &f.outcome;
        w.write_record([
            o.fold.to_string(),
            o.auc.map_or_else(String::new, |a| a.to_string()),
            o.metrics.accuracy.to_string(),
            o.metrics.f1.to_string(),
            o.metrics.sensitivity.to_string(),
            o.metrics.specificity.to_string(),
            o.n_train.to_string(),
            o.n_test.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

/// Patient-grouped cross-validation of the configured model.
///
/// Table level by default. With `image_level` the manifest is re-read and
/// augmentation plus variance-edge fitting happen inside each fold.
pub fn cv(cfg: &RunConfig, image_level: bool, subset: Option<&Path>) -> Result<Vec<PathBuf>> {
    let subset = subset_of(subset)?;
    let run = if image_level {
        let d = load_manifest(cfg.dataset()?)?.resized(cfg.patch_size)?;
        let plan = make_folds(&d, cfg.folds, cfg.seed)?;
        let cv_cfg = CvConfig {
            prep: cfg.prep,
            features: cfg.features.clone(),
            augment: cfg.augment.clone(),
            seed: cfg.seed,
        };
        cross_validate_detailed(&d, &cv_cfg, &cfg.model, &plan, subset.as_deref())?
    } else {
        let table = read_table(cfg)?;
        let plan = make_folds_table(&table, cfg.folds, cfg.seed)?;
        cross_validate_table_detailed(&table, &cfg.model, &plan, subset.as_deref(), cfg.seed)?
    };
    let mut summary = run.summary.clone();
    summary.config_id = format!("{}{}", table_prefix(cfg), summary.config_id);
    let mut out = Vec::new();
    let metrics = cfg.metrics_path();
    write_metrics_csv(&[summary], &metrics)?;
    out.push(metrics);
    out.push(write_text(&cfg.run_dir.join("folds.csv"), &folds_csv(&run)?)?);
    for f in &run.folds {
        if let Some(mut m) = f.model.to_model() {
            attach_edges(&mut m, f.var_edges.clone());
            let p = cfg.models_dir().join(format!("fold{}.json", f.fold));
            save_model(&m, &p)?;
            out.push(p);
        }
    }
    Ok(out)
}

/// Ranks every configured model by cross-validated AUC.
pub fn grid(cfg: &RunConfig, image_level: bool) -> Result<Vec<PathBuf>> {
    let ranked: Vec<MetricSummary> = if image_level {
        let d = load_manifest(cfg.dataset()?)?;
        let cells = GridCell::product(&cfg.grid.preps, &cfg.grid.patch_sizes, &cfg.grid.models);
        let settings = GridSettings {
            features: cfg.features.clone(),
            augment: cfg.augment.clone(),
            k: cfg.folds,
            seed: cfg.seed,
        };
        grid_search(&d, &cells, &settings)?
    } else {
        let table = read_table(cfg)?;
        let plan = make_folds_table(&table, cfg.folds, cfg.seed)?;
        let learners: Vec<&dyn Learner> = cfg.grid.models.iter().map(|m| m as &dyn Learner).collect();
        grid_search_table(&table, &learners, &plan, &table_prefix(cfg), cfg.seed)?
    };
    let path = cfg.metrics_path();
    write_metrics_csv(&ranked, &path)?;
    Ok(vec![path])
}

/// Adds a cluster column to `metrics.csv` and writes the centroids.
pub fn cluster(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let path = cfg.metrics_path();
    let summaries = read_metrics_csv(&path)?;
    let k = cfg.clusters.min(summaries.len());
    let fit = cluster_configs(&summaries, k, derive_seed(cfg.seed, &[0xC1]))?;
    let mut labelled: Vec<MetricSummary> = summaries
        .into_iter()
        .zip(&fit.assignments)
        .map(|(s, &c)| MetricSummary {
            cluster: Some(c),
            ..s
        })
        .collect();
    labelled = rank_summaries(labelled);
    write_metrics_csv(&labelled, &path)?;
    Ok(vec![path, write_json(&cfg.run_dir.join("clusters.json"), &fit)?])
}

#[derive(Serialize)]
struct SelectionSummary {
    candidates: usize,
    prefiltered_out: usize,
    full_criterion: f64,
    final_criterion: f64,
    final_size: usize,
    evaluations: usize,
}

/// Backward floating selection with the configured model as the wrapper.
pub fn select(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut table = read_table(cfg)?;
    let total = table.n_features();
    if cfg.selection.prefilter {
        let kept = correlation_prefilter(&table, cfg.selection.prefilter_threshold)?;
        table = table.project(&kept)?;
    }
    let plan = make_folds_table(&table, cfg.folds, cfg.seed)?;
    let trace = sbfs(&table, &cfg.model, &plan, &cfg.selection.sbfs, cfg.seed)?;
    let dir = cfg.selection_dir();
    trace.write(&dir)?;
    let summary = SelectionSummary {
        candidates: table.n_features(),
        prefiltered_out: total - table.n_features(),
        full_criterion: trace.full_criterion,
        final_criterion: trace.final_criterion,
        final_size: trace.final_subset.len(),
        evaluations: trace.evaluations,
    };
    Ok(vec![
        dir.join("trace.csv"),
        dir.join("subset.txt"),
        write_json(&dir.join("summary.json"), &summary)?,
    ])
}

/// Shapley attribution of the trained forest over the feature table.
pub fn explain(cfg: &RunConfig, model_path: Option<&Path>) -> Result<Vec<PathBuf>> {
    let mp = model_path.map_or_else(|| cfg.model_path(), Path::to_path_buf);
    let model = load_model(&mp)?;
    let Model::Forest(forest) = model else {
        return Err(Error::InvalidData(format!(
            "{} holds a {} model; attribution needs a random forest",
            mp.display(),
            model.kind()
        )));
    };
    let mut table = read_table(cfg)?;
    if !cfg.explain.all_rows {
        let keep: Vec<usize> = (0..table.len()).filter(|&i| !table.rows[i].augmented()).collect();
        table = table.select_rows(&keep);
    }
    let report = shap_table(&forest, &table)?;
    let dir = cfg.shap_dir();
    report.write(&dir)?;
    let summary = shap_summary(&report, cfg.explain.cutoff_share);
    Ok(vec![
        dir.join("shap.csv"),
        dir.join("shap_base.csv"),
        write_text(&dir.join("summary.csv"), &summary_to_csv(&summary)?)?,
    ])
}

/// Pearson matrix over every row of the feature table.
pub fn correlate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let table = read_table(cfg)?;
    let cm = pearson_matrix(&table)?;
    let dir = cfg.correlation_dir();
    cm.write(&dir)?;
    Ok(vec![dir.join("correlation.csv"), dir.join("correlation_invalid.txt")])
}

/// Renders whichever figures the run directory has inputs for.
pub fn report(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let opts = SvgOptions {
        timestamp: cfg.explain.timestamp,
    };
    let dir = cfg.figures_dir();
    let mut out = Vec::new();
    let metrics = cfg.metrics_path();
    if metrics.exists() {
        let s = read_metrics_csv(&metrics)?;
        let svg = metrics_bar_svg(&s, cfg.explain.top_features, opts);
        out.push(write_text(&dir.join("metrics.svg"), &svg)?);
    }
    if cfg.features_path().exists() {
        let cm = pearson_matrix(&read_table(cfg)?)?;
        out.push(write_text(&dir.join("correlation.svg"), &correlation_heatmap_svg(&cm, opts))?);
    }
    let shap = cfg.shap_dir().join("shap.csv");
    if shap.exists() {
        let text = fs::read_to_string(&shap).map_err(|e| Error::io(&shap, e))?;
        let report = ShapReport::from_csv(&text)?;
        let summary = shap_summary(&report, cfg.explain.cutoff_share);
        let svg = shap_strip_svg(&summary, cfg.explain.top_features, opts);
        out.push(write_text(&dir.join("shap.svg"), &svg)?);
    }
    if out.is_empty() {
        return Err(Error::InvalidData(format!(
            "{} has nothing to report on",
            cfg.run_dir.display()
        )));
    }
    Ok(out)
}
