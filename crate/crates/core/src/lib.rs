//! Texture-based classification of MRI patches.
//!
//! The pipeline reads multi-modality patches ([`patchio`]), grows the training
//! set with label-preserving transforms ([`augment`]), computes first-order,
//! Haralick and rotation-invariant LBP descriptors ([`features`]), fits random
//! forests or SVMs ([`learners`]), scores them with patient-grouped
//! cross-validation ([`evaluate`]), shrinks the feature set with sequential
//! floating backward selection ([`select`]) and attributes forest predictions
//! with exact TreeSHAP ([`explain`]). [`cli`] wires all of this into the
//! `texturekit` binary.
//!
//! Runnable walkthroughs live in `examples/`:
//!
//! | example | shows |
//! |---|---|
//! | `synthetic_dataset` | generating and reloading a labelled patch corpus |
//! | `extract_features` | one patch to a named feature vector |
//! | `train_and_predict` | forest training, prediction and model round trip |
//! | `cross_validation` | patient-grouped folds with augmentation inside each fold |
//! | `grid_and_cluster` | a hyperparameter grid ranked and clustered |
//! | `feature_selection` | correlation prefilter followed by SBFS |
//! | `shapley_attribution` | per-sample attributions and their additivity |
//! | `svm_classifier` | linear versus RBF kernels on non-separable data |
//! | `correlation_report` | feature correlation matrix and SVG figures |
//! | `cli_pipeline` | the whole run driven through the command-line entry point |

pub mod augment;
pub mod cli;
pub mod error;
pub mod evaluate;
pub mod explain;
pub mod features;
pub mod grid;
pub mod learners;
pub mod matrix;
pub mod patchio;
pub mod rng;
pub mod select;
pub mod synth;

pub use error::{Error, Result};
pub use grid::Grid;
pub use matrix::Matrix;
