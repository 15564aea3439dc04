use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cv::cross_validate_table;
use super::folds::{make_folds, FoldPlan};
use super::summary::{rank_summaries, MetricSummary};
use crate::augment::{augment_dataset, AugmentSpec};
use crate::error::{Error, Result};
use crate::features::{build_table, FeatureConfig, FeatureTable};
use crate::learners::{Learner, ModelSpec};
use crate::patchio::{Dataset, Preprocessing};
use crate::rng::derive_seed;

/// One configuration of the search grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub prep: Preprocessing,
    pub patch_size: usize,
    pub model: ModelSpec,
}

impl GridCell {
    pub fn config_id(&self) -> String {
        format!("{}-{}px-{}", self.prep.name(), self.patch_size, self.model)
    }

    /// Every combination of the given preprocessing variants, patch sizes
    /// and models.
    pub fn product(preps: &[Preprocessing], sizes: &[usize], models: &[ModelSpec]) -> Vec<GridCell> {
        let mut out = Vec::new();
        for &prep in preps {
            for &patch_size in sizes {
                for model in models {
                    out.push(GridCell {
                        prep,
                        patch_size,
                        model: model.clone(),
                    });
                }
            }
        }
        out
    }
}

/// Learner wrapper that reports a caller-chosen id.
struct Named<'a> {
    id: String,
    inner: &'a dyn Learner,
}

impl Learner for Named<'_> {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn fit(
        &self,
        x: &crate::matrix::Matrix,
        y: &[bool],
        names: &[String],
        seed: u64,
    ) -> Result<Box<dyn crate::learners::Classifier>> {
        self.inner.fit(x, y, names, seed)
    }
}

/// Scores each learner on one table with a shared fold plan and returns the
/// summaries ranked. Ids are `prefix` followed by the learner id.
pub fn grid_search_table(
    table: &FeatureTable,
    learners: &[&dyn Learner],
    plan: &FoldPlan,
    prefix: &str,
    seed: u64,
) -> Result<Vec<MetricSummary>> {
    if learners.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    let out = learners
        .par_iter()
        .map(|l| {
            let named = Named {
                id: format!("{prefix}{}", l.id()),
                inner: *l,
            };
            cross_validate_table(table, &named, plan, None, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_summaries(out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSettings {
    pub features: FeatureConfig,
    pub augment: AugmentSpec,
    pub k: usize,
    pub seed: u64,
}

/// Full grid over preprocessing variants, patch sizes and models.
///
/// Each (variant, size) pair is resized, augmented and extracted once; the
/// models then share that table and one patient-grouped fold plan built
/// before augmentation.
pub fn grid_search(d: &Dataset, cells: &[GridCell], settings: &GridSettings) -> Result<Vec<MetricSummary>> {
    if cells.is_empty() {
        return Err(Error::Config("empty grid".into()));
    }
    d.require_trainable()?;
    let plan = make_folds(d, settings.k, settings.seed)?;
    let mut groups: BTreeMap<(String, usize), Vec<&GridCell>> = BTreeMap::new();
    for c in cells {
        groups.entry((c.prep.name().to_owned(), c.patch_size)).or_default().push(c);
    }
    let mut out = Vec::with_capacity(cells.len());
    for ((_, size), group) in groups {
        let prep = group[0].prep;
        let resized = d.resized(size)?;
        let augmented = augment_dataset(&resized, &settings.augment, derive_seed(settings.seed, &[0xA06]))?;
        let (table, _) = build_table(&augmented, prep, &settings.features)?;
        let ranked = group
            .par_iter()
            .map(|c| {
                let named = Named {
                    id: c.config_id(),
                    inner: &c.model,
                };
                cross_validate_table(&table, &named, &plan, None, settings.seed)
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(ranked);
    }
    Ok(rank_summaries(out))
}
