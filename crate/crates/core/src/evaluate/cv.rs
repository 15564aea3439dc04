use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::FoldPlan;
use super::metrics::{roc_auc, Confusion, DEFAULT_THRESHOLD};
use super::summary::{FoldOutcome, MetricSummary};
use crate::augment::{augment_dataset, AugmentSpec};
use crate::error::{Error, Result};
use crate::features::{build_table, build_table_with_edges, FeatureConfig, FeatureTable, VarEdges};
use crate::learners::{Classifier, Learner};
use crate::patchio::{Dataset, Preprocessing};
use crate::rng::derive_seed;

/// Everything one fold produced, kept for attribution and audits.
pub struct FoldRun {
    pub fold: usize,
    /// Sample ids the model was trained on, augmented children included.
    pub train_ids: Vec<String>,
    pub train_patients: Vec<String>,
    pub test_table: FeatureTable,
    pub scores: Vec<f64>,
    pub model: Box<dyn Classifier>,
    /// Variance edges fitted on this fold's training portion, for image-level runs.
    pub var_edges: Option<VarEdges>,
    pub outcome: FoldOutcome,
}

pub struct CvRun {
    pub summary: MetricSummary,
    pub folds: Vec<FoldRun>,
}

fn score_fold(
    fold: usize,
    learner: &dyn Learner,
    train: &FeatureTable,
    test: FeatureTable,
    seed: u64,
) -> Result<FoldRun> {
    let y = train.labels();
    if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(Error::InvalidData(format!(
            "fold {fold}: training portion holds a single class"
        )));
    }
    let model = learner.fit(&train.matrix(), &y, &train.names, derive_seed(seed, &[fold as u64]))?;
    let scores = model.predict_many(&test.matrix())?;
    let labels = test.labels();
    let auc = match roc_auc(&scores, &labels) {
        Ok(a) => Some(a),
        Err(Error::InvalidData(_)) => {
            log::warn!("fold {fold}: test portion holds a single class, AUC skipped");
            None
        }
        Err(e) => return Err(e),
    };
    let outcome = FoldOutcome {
        fold,
        auc,
        metrics: Confusion::at(&scores, &labels, DEFAULT_THRESHOLD).metrics(),
        n_train: train.len(),
        n_test: test.len(),
    };
    let mut patients: Vec<String> = train.patients();
    patients.sort();
    Ok(FoldRun {
        fold,
        train_ids: train.rows.iter().map(|r| r.sample_id.clone()).collect(),
        train_patients: patients,
        test_table: test,
        scores,
        model,
        var_edges: None,
        outcome,
    })
}

/// Rows split by fold: training rows are every row (augmented or not) of
/// the other folds' patients, test rows are the fold's original samples.
pub fn split_rows(table: &FeatureTable, plan: &FoldPlan, fold: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let assign = plan.assignments();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, r) in table.rows.iter().enumerate() {
        let f = *assign.get(r.patient_id.as_str()).ok_or_else(|| {
            Error::Integrity(format!("patient {} is not in the fold plan", r.patient_id))
        })?;
        if f == fold {
            if !r.augmented() {
                test.push(i);
            }
        } else {
            train.push(i);
        }
    }
    Ok((train, test))
}

/// Cross-validation on a prepared feature table. Missing entries are read
/// as 0. `subset` restricts and orders the columns.
pub fn cross_validate_table_detailed(
    table: &FeatureTable,
    learner: &dyn Learner,
    plan: &FoldPlan,
    subset: Option<&[String]>,
    seed: u64,
) -> Result<CvRun> {
    let projected;
    let table = match subset {
        Some(names) => {
            projected = table.project(names)?;
            &projected
        }
        None => table,
    };
    let folds = (0..plan.k())
        .into_par_iter()
        .map(|f| {
            let (tr, te) = split_rows(table, plan, f)?;
            if te.is_empty() {
                return Err(Error::InvalidData(format!("fold {f} has no test samples")));
            }
            score_fold(f, learner, &table.select_rows(&tr), table.select_rows(&te), seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes: Vec<FoldOutcome> = folds.iter().map(|f| f.outcome.clone()).collect();
    Ok(CvRun {
        summary: MetricSummary::from_folds(learner.id(), &outcomes)?,
        folds,
    })
}

pub fn cross_validate_table(
    table: &FeatureTable,
    learner: &dyn Learner,
    plan: &FoldPlan,
    subset: Option<&[String]>,
    seed: u64,
) -> Result<MetricSummary> {
    cross_validate_table_detailed(table, learner, plan, subset, seed).map(|r| r.summary)
}

/// Settings for image-level cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub prep: Preprocessing,
    pub features: FeatureConfig,
    pub augment: AugmentSpec,
    pub seed: u64,
}

/// Image-level cross-validation. Per fold, only the training patients'
/// original samples are augmented; variance edges are fitted on that
/// augmented training set and reused for the held-out originals.
pub fn cross_validate_detailed(
    d: &Dataset,
    cfg: &CvConfig,
    learner: &dyn Learner,
    plan: &FoldPlan,
    subset: Option<&[String]>,
) -> Result<CvRun> {
    d.require_trainable()?;
    let assign = plan.assignments();
    for s in &d.samples {
        if !assign.contains_key(s.patient_id()) {
            return Err(Error::Integrity(format!(
                "patient {} is not in the fold plan",
                s.patient_id()
            )));
        }
    }
    let originals: Vec<_> = d.samples.iter().filter(|s| !s.augmented()).collect();
    let mut folds = Vec::with_capacity(plan.k());
    for f in 0..plan.k() {
        let pick = |want_test: bool| -> Result<Dataset> {
            let samples = originals
                .iter()
                .filter(|s| (assign[s.patient_id()] == f) == want_test)
                .map(|s| (*s).clone())
                .collect();
            Dataset::new(format!("{}-fold{f}", d.name), samples)
        };
        let train = augment_dataset(&pick(false)?, &cfg.augment, derive_seed(cfg.seed, &[0xA06, f as u64]))?;
        let test = pick(true)?;
        if test.is_empty() {
            return Err(Error::InvalidData(format!("fold {f} has no test samples")));
        }
        let (mut train_t, edges) = build_table(&train, cfg.prep, &cfg.features)?;
        let mut test_t = build_table_with_edges(&test, cfg.prep, &cfg.features, &edges)?;
        if let Some(names) = subset {
            train_t = train_t.project(names)?;
            test_t = test_t.project(names)?;
        }
        let mut run = score_fold(f, learner, &train_t, test_t, cfg.seed)?;
        run.var_edges = Some(edges);
        folds.push(run);
    }
    let outcomes: Vec<FoldOutcome> = folds.iter().map(|f| f.outcome.clone()).collect();
    Ok(CvRun {
        summary: MetricSummary::from_folds(learner.id(), &outcomes)?,
        folds,
    })
}

pub fn cross_validate(
    d: &Dataset,
    cfg: &CvConfig,
    learner: &dyn Learner,
    plan: &FoldPlan,
    subset: Option<&[String]>,
) -> Result<MetricSummary> {
    cross_validate_detailed(d, cfg, learner, plan, subset).map(|r| r.summary)
}

/// Violations of patient separation: training samples whose patient, or
/// whose parent sample's patient, appears among the fold's test rows.
pub fn leakage_violations(run: &CvRun, table_patient_of: impl Fn(&str) -> Option<String>) -> Vec<String> {
    let mut bad = Vec::new();
    for f in &run.folds {
        let test_patients: HashSet<&str> =
            f.test_table.rows.iter().map(|r| r.patient_id.as_str()).collect();
        for id in &f.train_ids {
            let parent = crate::patchio::parent_id(id);
            if let Some(p) = table_patient_of(parent) {
                if test_patients.contains(p.as_str()) {
                    bad.push(format!("fold {}: {id}", f.fold));
                }
            }
        }
        for p in &f.train_patients {
            if test_patients.contains(p.as_str()) {
                bad.push(format!("fold {}: patient {p}", f.fold));
            }
        }
    }
    bad
}
