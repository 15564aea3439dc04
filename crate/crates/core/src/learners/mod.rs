//! Decision trees, random forests and soft-margin SVMs.
//!
//! Every learner is deterministic given its seed. Models serialize to a
//! self-describing JSON document through [`save_model`] / [`load_model`].

mod forest;
mod io;
mod svm;
mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub use forest::{train_forest, ClassWeight, FeatureSubset, ForestModel, RFParams};
pub use io::{load_model, model_from_json, model_to_json, save_model, Model, MODEL_FORMAT_VERSION};
pub use svm::{train_svm, train_svm_traced, Kernel, SvmModel, SvmParams, SvmTrace};
pub use tree::{train_tree, Tree, TreeNode};

/// A fitted binary classifier producing positive-class probabilities.
pub trait Classifier: Send + Sync {
    fn n_features(&self) -> usize;

    /// Probability of the positive class for one row. The caller has
    /// already checked the row length.
    fn score_row(&self, x: &[f64]) -> f64;

    fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        check_width(self.n_features(), x.len())?;
        Ok(self.score_row(x))
    }

    fn predict_many(&self, x: &Matrix) -> Result<Vec<f64>> {
        check_width(self.n_features(), x.cols())?;
        Ok((0..x.rows()).map(|r| self.score_row(x.row(r))).collect())
    }

    /// The underlying forest, when there is one. Shapley attribution needs it.
    fn as_forest(&self) -> Option<&ForestModel> {
        None
    }

    /// Serializable form, when the classifier has one.
    fn to_model(&self) -> Option<Model> {
        None
    }
}

/// Something that can be fitted to a labelled design matrix.
pub trait Learner: Send + Sync {
    /// Stable identifier used in metric tables.
    fn id(&self) -> String;

    fn fit(
        &self,
        x: &Matrix,
        y: &[bool],
        feature_names: &[String],
        seed: u64,
    ) -> Result<Box<dyn Classifier>>;
}

/// Hyperparameters for either model family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    RandomForest(RFParams),
    Svm(SvmParams),
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::RandomForest(p) => write!(
                f,
                "rf-t{}-d{}-l{}-s{}",
                p.n_trees, p.max_depth, p.min_samples_leaf, p.min_samples_split
            ),
            ModelSpec::Svm(p) => match p.kernel {
                Kernel::Linear => write!(f, "svm-linear-c{}", p.c),
                Kernel::Rbf => write!(f, "svm-rbf-c{}-g{}", p.c, p.gamma),
            },
        }
    }
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::RandomForest(p) => p.validate(),
            ModelSpec::Svm(p) => p.validate(),
        }
    }

    /// The canonical random-forest grid: 3 tree counts, 2 depths, 2 leaf
    /// sizes and 3 split sizes.
    pub fn rf_grid() -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for n_trees in [50, 100, 150] {
            for max_depth in [0, 20] {
                for min_samples_leaf in [2, 4] {
                    for min_samples_split in [1, 20, 40] {
                        out.push(ModelSpec::RandomForest(RFParams {
                            n_trees,
                            max_depth,
                            min_samples_leaf,
                            min_samples_split,
                            ..RFParams::default()
                        }));
                    }
                }
            }
        }
        out
    }

    /// A small SVM grid over kernels and regularization strengths.
    pub fn svm_grid() -> Vec<ModelSpec> {
        let mut out = Vec::new();
        for c in [0.1, 1.0, 10.0] {
            out.push(ModelSpec::Svm(SvmParams {
                kernel: Kernel::Linear,
                c,
                ..SvmParams::default()
            }));
            for gamma in [0.001, 0.01, 0.1] {
                out.push(ModelSpec::Svm(SvmParams {
                    kernel: Kernel::Rbf,
                    c,
                    gamma,
                    ..SvmParams::default()
                }));
            }
        }
        out
    }
}

impl Learner for ModelSpec {
    fn id(&self) -> String {
        self.to_string()
    }

    fn fit(
        &self,
        x: &Matrix,
        y: &[bool],
        feature_names: &[String],
        seed: u64,
    ) -> Result<Box<dyn Classifier>> {
        match self {
            ModelSpec::RandomForest(p) => {
                Ok(Box::new(train_forest(x, y, feature_names, p, seed)?))
            }
            ModelSpec::Svm(p) => Ok(Box::new(train_svm(x, y, feature_names, p)?)),
        }
    }
}

pub(crate) fn check_width(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

pub(crate) fn check_training_input(x: &Matrix, y: &[bool], names: &[String]) -> Result<()> {
    if x.rows() == 0 || x.cols() == 0 {
        return Err(Error::InvalidData("empty training matrix".into()));
    }
    check_width(x.rows(), y.len())?;
    check_width(x.cols(), names.len())?;
    if !x.all_finite() {
        return Err(Error::InvalidData(
            "training matrix contains non-finite values; impute first".into(),
        ));
    }
    Ok(())
}

/// SHA-256 over shape, values and labels of the training data.
pub fn train_fingerprint(x: &Matrix, y: &[bool]) -> String {
    let mut h = Sha256::new();
    h.update((x.rows() as u64).to_le_bytes());
    h.update((x.cols() as u64).to_le_bytes());
    for v in x.data() {
        h.update(v.to_bits().to_le_bytes());
    }
    h.update(y.iter().map(|&b| b as u8).collect::<Vec<_>>());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rf_grid_has_36_cells() {
        let g = ModelSpec::rf_grid();
        assert_eq!(g.len(), 36);
        let ids: std::collections::BTreeSet<_> = g.iter().map(|s| s.id()).collect();
        assert_eq!(ids.len(), 36);
    }

    #[test]
    fn fingerprint_depends_on_labels() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert_ne!(train_fingerprint(&x, &[true, false]), train_fingerprint(&x, &[false, true]));
        assert_eq!(train_fingerprint(&x, &[true, false]).len(), 64);
    }

    #[test]
    fn spec_json_is_tagged() {
        let s = ModelSpec::RandomForest(RFParams::default());
        let j = serde_json::to_string(&s).unwrap();
        assert!(j.starts_with("{\"kind\":\"random_forest\""));
        let back: ModelSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }
}
