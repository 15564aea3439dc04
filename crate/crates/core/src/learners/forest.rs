use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{train_tree_presorted, Presorted, Tree};
use super::{check_training_input, train_fingerprint, Classifier, Model};
use crate::error::{Error, Result};
use crate::features::VarEdges;
use crate::matrix::Matrix;
use crate::rng::{derive_seed, rng_for};

/// How many features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    /// `ceil(sqrt(p))` features.
    Sqrt,
    All,
    Count(usize),
}

impl FeatureSubset {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            FeatureSubset::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            FeatureSubset::All => n_features,
            FeatureSubset::Count(k) => k,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeight {
    None,
    /// Weights inversely proportional to class frequency.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RFParams {
    pub n_trees: usize,
    /// 0 means unlimited.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Values below 2 impose no constraint.
    pub min_samples_split: usize,
    pub features_per_split: FeatureSubset,
    pub bootstrap: bool,
    pub class_weight: ClassWeight,
}

impl Default for RFParams {
    /// 100 trees, unlimited depth, leaves of at least 2, no split minimum.
    fn default() -> Self {
        RFParams {
            n_trees: 100,
            max_depth: 0,
            min_samples_leaf: 2,
            min_samples_split: 1,
            features_per_split: FeatureSubset::Sqrt,
            bootstrap: true,
            class_weight: ClassWeight::None,
        }
    }
}

impl RFParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be positive".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Config("min_samples_leaf must be positive".into()));
        }
        if self.features_per_split == FeatureSubset::Count(0) {
            return Err(Error::Config("features_per_split must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: RFParams,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
    pub train_fingerprint: String,
    /// Local-variance edges the training features were extracted with.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_edges: Option<VarEdges>,
}

impl ForestModel {
    /// A forest built from given trees, for tests and hand-made models.
    pub fn from_trees(trees: Vec<Tree>, feature_names: Vec<String>) -> Result<ForestModel> {
        let m = ForestModel {
            params: RFParams {
                n_trees: trees.len(),
                ..RFParams::default()
            },
            seed: 0,
            feature_names,
            trees,
            train_fingerprint: String::new(),
            var_edges: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trees.is_empty() {
            return Err(Error::ModelFormat("forest without trees".into()));
        }
        for t in &self.trees {
            t.validate(self.feature_names.len())?;
        }
        Ok(())
    }

    /// Indices of features used by at least one split.
    pub fn used_features(&self) -> Vec<bool> {
        let mut used = vec![false; self.feature_names.len()];
        for t in &self.trees {
            for n in &t.nodes {
                if let super::TreeNode::Split { feature, .. } = n {
                    used[*feature] = true;
                }
            }
        }
        used
    }
}

impl Classifier for ForestModel {
    fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    fn score_row(&self, x: &[f64]) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        (s / self.trees.len() as f64).clamp(0.0, 1.0)
    }

    fn as_forest(&self) -> Option<&ForestModel> {
        Some(self)
    }

    fn to_model(&self) -> Option<Model> {
        Some(Model::Forest(self.clone()))
    }
}

/// Trains `n_trees` trees in parallel. Tree `t` draws its bootstrap sample
/// and feature subsets from a stream keyed by `(seed, t)` only.
pub fn train_forest(
    x: &Matrix,
    y: &[bool],
    feature_names: &[String],
    params: &RFParams,
    seed: u64,
) -> Result<ForestModel> {
    params.validate()?;
    check_training_input(x, y, feature_names)?;
    let n = x.rows();
    let data = Presorted::new(x);
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut weights = vec![0.0; n];
            if params.bootstrap {
                let mut rng = rng_for(seed, &[t as u64, 0]);
                for _ in 0..n {
                    weights[rng.random_range(0..n)] += 1.0;
                }
            } else {
                weights.fill(1.0);
            }
            train_tree_presorted(&data, y, params, &weights, derive_seed(seed, &[t as u64, 1]))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        params: params.clone(),
        seed,
        feature_names: feature_names.to_vec(),
        trees,
        train_fingerprint: train_fingerprint(x, y),
        var_edges: None,
    })
}
