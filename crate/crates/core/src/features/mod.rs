//! Per-modality texture features and the 159-column feature vector.
//!
//! Each modality contributes 53 values in this order: four first-order
//! moments, fourteen Haralick statistics, and 35 LBP histogram bins
//! (10 riu2 bins at P=8/R=1, 18 riu2 bins at P=16/R=2, 7 local-variance
//! bins).

mod eigen;
mod first_order;
mod glcm;
mod haralick;
mod lbp;
mod table;

pub use eigen::symmetric_eigenvalues;
pub use first_order::first_order;
pub use glcm::{compute_glcm, compute_glcms, quantize, Direction, Glcm};
pub use haralick::{haralick_features, haralick_single, HaralickConfig, HARALICK_COUNT};
pub use lbp::{
    local_variances, lbp_features, quantile_edges, riu2_code, riu2_histogram, variance_bin,
    variance_histogram, Circle, LbpConfig,
};
pub use table::{build_table, build_table_with_edges, FeatureRow, FeatureTable, ImputeReport};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::patchio::{Dataset, Modality, Preprocessing, SampleTriple};

pub const FIRST_ORDER_TAGS: [&str; 4] = ["mean", "std", "skewness", "kurtosis"];
pub const LBP_COUNT: usize = 35;
pub const FEATURES_PER_MODALITY: usize = FIRST_ORDER_TAGS.len() + HARALICK_COUNT + LBP_COUNT;
pub const FEATURE_COUNT: usize = 3 * FEATURES_PER_MODALITY;

/// Which family a feature column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureFamily {
    FirstOrder,
    Haralick,
    Lbp,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureName {
    pub modality: Modality,
    pub tag: String,
}

impl FeatureName {
    pub fn family(&self) -> FeatureFamily {
        if self.tag.starts_with("haralick") {
            FeatureFamily::Haralick
        } else if self.tag.starts_with("lbp") {
            FeatureFamily::Lbp
        } else {
            FeatureFamily::FirstOrder
        }
    }

    pub fn parse(s: &str) -> Option<FeatureName> {
        Modality::ALL.into_iter().find_map(|m| {
            let tag = s.strip_prefix(m.tag())?.strip_prefix('_')?;
            let valid = FIRST_ORDER_TAGS.contains(&tag)
                || tag
                    .strip_prefix("haralick")
                    .and_then(|n| n.parse::<usize>().ok())
                    .is_some_and(|n| (1..=HARALICK_COUNT).contains(&n))
                || tag
                    .strip_prefix("lbp-")
                    .and_then(|n| n.parse::<usize>().ok())
                    .is_some_and(|n| (1..=LBP_COUNT).contains(&n));
            valid.then(|| FeatureName {
                modality: m,
                tag: tag.to_owned(),
            })
        })
    }
}

impl std::fmt::Display for FeatureName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}_{}", self.modality.tag(), self.tag)
    }
}

fn modality_tags() -> Vec<String> {
    let mut tags: Vec<String> = FIRST_ORDER_TAGS.iter().map(|s| s.to_string()).collect();
    tags.extend((1..=HARALICK_COUNT).map(|k| format!("haralick{k:02}")));
    tags.extend((1..=LBP_COUNT).map(|k| format!("lbp-{k:02}")));
    tags
}

/// The 159 names in canonical column order.
pub fn feature_names() -> Vec<FeatureName> {
    let tags = modality_tags();
    Modality::ALL
        .into_iter()
        .flat_map(|m| {
            tags.iter().map(move |t| FeatureName {
                modality: m,
                tag: t.clone(),
            })
        })
        .collect()
}

pub fn feature_name_strings() -> Vec<String> {
    feature_names().iter().map(ToString::to_string).collect()
}

/// Feature values in canonical order with a parallel missing mask. Missing
/// entries hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
}

impl FeatureVector {
    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }
}

/// Local-variance histogram edges per modality, fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarEdges {
    pub t2w: Vec<f64>,
    pub adc: Vec<f64>,
    pub dwi: Vec<f64>,
}

impl VarEdges {
    pub fn uniform(edges: Vec<f64>) -> Self {
        VarEdges {
            t2w: edges.clone(),
            adc: edges.clone(),
            dwi: edges,
        }
    }

    pub fn get(&self, m: Modality) -> &[f64] {
        match m {
            Modality::T2w => &self.t2w,
            Modality::Adc => &self.adc,
            Modality::Dwi => &self.dwi,
        }
    }
}

impl Default for VarEdges {
    /// Decade-spaced placeholder edges for unfitted use on unit-range data.
    fn default() -> Self {
        VarEdges::uniform(vec![1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub glcm_levels: usize,
    pub glcm_distance: usize,
    pub haralick: HaralickConfig,
    pub lbp: LbpConfig,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            glcm_levels: 32,
            glcm_distance: 1,
            haralick: HaralickConfig::default(),
            lbp: LbpConfig::default(),
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        self.lbp.validate()?;
        if self.lbp.len() != LBP_COUNT {
            return Err(Error::Config(format!(
                "LBP configuration yields {} bins; the feature layout has {LBP_COUNT}",
                self.lbp.len()
            )));
        }
        if self.glcm_levels < 2 || self.glcm_distance == 0 {
            return Err(Error::Config("GLCM needs ≥ 2 levels and distance ≥ 1".into()));
        }
        Ok(())
    }
}

/// The 53 features of one preprocessed grid. `None` marks a missing value.
pub fn modality_features(
    grid: &Grid,
    config: &FeatureConfig,
    var_edges: &[f64],
) -> Result<Vec<Option<f64>>> {
    let mut out: Vec<Option<f64>> = first_order(grid).into_iter().map(Some).collect();
    let glcms = compute_glcms(grid, config.glcm_levels, config.glcm_distance)?;
    out.extend(haralick_features(&glcms, &config.haralick));
    out.extend(lbp_features(grid, &config.lbp, var_edges)?.into_iter().map(Some));
    Ok(out)
}

pub fn extract_features(
    s: &SampleTriple,
    prep: Preprocessing,
    config: &FeatureConfig,
    edges: &VarEdges,
) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(FEATURE_COUNT);
    let mut missing = Vec::with_capacity(FEATURE_COUNT);
    for m in Modality::ALL {
        let grid = prep.apply(s.patch(m));
        let feats = modality_features(&grid, config, edges.get(m)).map_err(|e| match e {
            Error::UnusablePatch(why) => {
                Error::UnusablePatch(format!("sample {} ({m}): {why}", s.sample_id()))
            }
            other => other,
        })?;
        for f in feats {
            match f {
                Some(v) if v.is_finite() => {
                    values.push(v);
                    missing.push(false);
                }
                _ => {
                    values.push(0.0);
                    missing.push(true);
                }
            }
        }
    }
    Ok(FeatureVector { values, missing })
}

/// Fits variance-histogram edges on the pooled local variances of every
/// sample in `d`, separately per modality.
pub fn fit_var_edges(d: &Dataset, prep: Preprocessing, config: &FeatureConfig) -> Result<VarEdges> {
    let per_modality = |m: Modality| -> Result<Vec<f64>> {
        let chunks: Vec<Vec<f64>> = d
            .samples
            .par_iter()
            .map(|s| local_variances(&prep.apply(s.patch(m)), config.lbp.variance))
            .collect::<Result<_>>()?;
        Ok(quantile_edges(
            chunks.into_iter().flatten().collect(),
            config.lbp.variance_bins,
        ))
    };
    Ok(VarEdges {
        t2w: per_modality(Modality::T2w)?,
        adc: per_modality(Modality::Adc)?,
        dwi: per_modality(Modality::Dwi)?,
    })
}
