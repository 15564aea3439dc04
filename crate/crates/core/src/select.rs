//! Sequential backward floating selection with cross-validated AUC as the
//! criterion.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Mutex;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluate::{cross_validate_table, FoldPlan};
use crate::explain::pearson_matrix;
use crate::features::FeatureTable;
use crate::learners::Learner;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SbfsOptions {
    pub min_size: usize,
    /// Stop after this many consecutive sizes that did not change the best
    /// subset found so far.
    pub patience: usize,
    /// A conditional re-add must beat the best criterion at its size by more
    /// than this.
    pub min_improvement: f64,
}

impl Default for SbfsOptions {
    fn default() -> Self {
        SbfsOptions {
            min_size: 1,
            patience: 20,
            min_improvement: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    Remove,
    ConditionalAdd,
}

impl StepAction {
    pub fn name(self) -> &'static str {
        match self {
            StepAction::Remove => "remove",
            StepAction::ConditionalAdd => "conditional_add",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub action: StepAction,
    pub feature: String,
    /// Size after the step.
    pub subset_size: usize,
    pub criterion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub full_criterion: f64,
    pub steps: Vec<SelectionStep>,
    pub best_subset_per_size: BTreeMap<usize, (Vec<String>, f64)>,
    pub final_subset: Vec<String>,
    pub final_criterion: f64,
    /// Distinct subsets whose criterion was computed.
    pub evaluations: usize,
}

struct Evaluator<'a> {
    table: &'a FeatureTable,
    learner: &'a dyn Learner,
    plan: &'a FoldPlan,
    seed: u64,
    cache: Mutex<HashMap<Vec<String>, f64>>,
}

impl Evaluator<'_> {
    /// Mean CV AUC of the subset, or 0 when evaluation fails. Results are
    /// cached per subset: floating steps revisit subsets often.
    fn criterion(&self, subset: &[String]) -> f64 {
        if let Some(&c) = self.cache.lock().expect("cache lock").get(subset) {
            return c;
        }
        let c = self.evaluate(subset);
        self.cache.lock().expect("cache lock").insert(subset.to_vec(), c);
        c
    }

    fn evaluate(&self, subset: &[String]) -> f64 {
        match cross_validate_table(self.table, self.learner, self.plan, Some(subset), self.seed) {
            Ok(s) if s.auc.mean.is_finite() => s.auc.mean,
            Ok(_) => {
                log::warn!("criterion undefined for subset of {} features", subset.len());
                0.0
            }
            Err(e) => {
                log::warn!("criterion failed for subset of {} features: {e}", subset.len());
                0.0
            }
        }
    }
}

/// Best of `(criterion, name)` candidates: highest criterion, ties to the
/// lexicographically smallest name.
fn pick(cands: Vec<(f64, String)>) -> Option<(f64, String)> {
    cands.into_iter().reduce(|a, b| {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    })
}

/// Argmax over sizes with ties going to the smaller subset.
fn overall_best(best: &BTreeMap<usize, (Vec<String>, f64)>) -> (usize, f64) {
    let mut out = (usize::MAX, f64::NEG_INFINITY);
    for (&size, (_, c)) in best {
        if *c > out.1 {
            out = (size, *c);
        }
    }
    out
}

/// Runs SBFS from the full column set of `table`. Subsets keep the table's
/// column order.
pub fn sbfs(
    table: &FeatureTable,
    learner: &dyn Learner,
    plan: &FoldPlan,
    opts: &SbfsOptions,
    seed: u64,
) -> Result<SelectionTrace> {
    let n = table.n_features();
    if n < 2 {
        return Err(Error::InvalidData("selection needs at least 2 features".into()));
    }
    if opts.min_size == 0 || opts.min_size > n {
        return Err(Error::Config(format!("min_size must lie in 1..={n}")));
    }
    let ev = Evaluator {
        table,
        learner,
        plan,
        seed,
        cache: Mutex::new(HashMap::new()),
    };
    let order: BTreeMap<&str, usize> =
        table.names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let sorted = |set: &BTreeSet<String>| -> Vec<String> {
        let mut v: Vec<String> = set.iter().cloned().collect();
        v.sort_by_key(|s| order[s.as_str()]);
        v
    };

    let mut current: BTreeSet<String> = table.names.iter().cloned().collect();
    let full_criterion = ev.criterion(&table.names);
    let mut best: BTreeMap<usize, (Vec<String>, f64)> = BTreeMap::new();
    best.insert(n, (table.names.clone(), full_criterion));
    let mut steps = Vec::new();
    let mut leader = overall_best(&best);
    let mut stale = 0;

    while current.len() > opts.min_size {
        let cands: Vec<(f64, String)> = current
            .par_iter()
            .map(|f| {
                let mut s = current.clone();
                s.remove(f);
                (ev.criterion(&sorted(&s)), f.clone())
            })
            .collect();
        let (crit, removed) = pick(cands).expect("non-empty subset");
        current.remove(&removed);
        steps.push(SelectionStep {
            action: StepAction::Remove,
            feature: removed,
            subset_size: current.len(),
            criterion: crit,
        });
        let entry = best.entry(current.len()).or_insert((Vec::new(), f64::NEG_INFINITY));
        if crit > entry.1 {
            *entry = (sorted(&current), crit);
        }

        loop {
            let outside: Vec<&String> = table.names.iter().filter(|f| !current.contains(*f)).collect();
            if outside.is_empty() {
                break;
            }
            let cands: Vec<(f64, String)> = outside
                .par_iter()
                .map(|f| {
                    let mut s = current.clone();
                    s.insert((*f).clone());
                    (ev.criterion(&sorted(&s)), (*f).clone())
                })
                .collect();
                let (crit, added) = pick(cands).expect("non-empty candidates");
            let size = current.len() + 1;
            let known = best.get(&size).map_or(f64::NEG_INFINITY, |b| b.1);
            if crit > known + opts.min_improvement {
                current.insert(added.clone());
                best.insert(size, (sorted(&current), crit));
                steps.push(SelectionStep {
                    action: StepAction::ConditionalAdd,
                    feature: added,
                    subset_size: size,
                    criterion: crit,
                });
            } else {
                break;
            }
        }

        let now = overall_best(&best);
        if now != leader {
            leader = now;
            stale = 0;
        } else {
            stale += 1;
            if stale >= opts.patience {
                break;
            }
        }
    }

    let (size, final_criterion) = overall_best(&best);
    Ok(SelectionTrace {
        full_criterion,
        steps,
        final_subset: best[&size].0.clone(),
        final_criterion,
        best_subset_per_size: best,
        evaluations: ev.cache.into_inner().expect("cache lock").len(),
    })
}

/// Greedy correlation prefilter: walks columns in order and drops any
/// column whose |r| with an already kept column exceeds `threshold`.
/// Columns without a defined correlation are kept.
pub fn correlation_prefilter(table: &FeatureTable, threshold: f64) -> Result<Vec<String>> {
    let cm = pearson_matrix(table)?;
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..table.n_features() {
        let redundant = cm.valid[j]
            && kept
                .iter()
                .any(|&k| cm.valid[k] && cm.get(j, k).abs() > threshold);
        if !redundant {
            kept.push(j);
        }
    }
    Ok(kept.into_iter().map(|j| table.names[j].clone()).collect())
}

impl SelectionTrace {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["step", "action", "feature", "subset_size", "criterion"])?;
        for (i, s) in self.steps.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                s.action.name().to_owned(),
                s.feature.clone(),
                s.subset_size.to_string(),
                s.criterion.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let trace = dir.join("trace.csv");
        fs::write(&trace, self.to_csv()?).map_err(|e| Error::io(&trace, e))?;
        write_subset(&self.final_subset, &dir.join("subset.txt"))
    }
}

pub fn write_subset(names: &[String], path: &Path) -> Result<()> {
    let mut text = names.join("\n");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a one-name-per-line subset file; blank lines are ignored.
pub fn read_subset(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let names: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect();
    if names.is_empty() {
        return Err(Error::Parse(format!("{} lists no features", path.display())));
    }
    Ok(names)
}
