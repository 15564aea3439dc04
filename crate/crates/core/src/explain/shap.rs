use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::learners::{Classifier, ForestModel, Tree, TreeNode};

/// Largest feature count the subset enumeration accepts.
pub const BRUTEFORCE_MAX_FEATURES: usize = 15;

/// Attribution of one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapRow {
    pub base_value: f64,
    pub phi: Vec<f64>,
    pub prediction: f64,
}

fn check_counts(m: &ForestModel) -> Result<()> {
    for (t, tree) in m.trees.iter().enumerate() {
        if tree.nodes.is_empty() {
            return Err(Error::ModelFormat(format!("tree {t} has no nodes")));
        }
        if let Some(i) = tree.nodes.iter().position(|n| !(n.n_samples() > 0.0)) {
            return Err(Error::ModelFormat(format!(
                "tree {t} node {i} lacks a training sample count"
            )));
        }
    }
    Ok(())
}

/// Output expectation of a tree over the training distribution, weighting
/// leaves by their share of root samples.
fn tree_expectation(t: &Tree) -> f64 {
    let root = t.nodes[0].n_samples();
    t.nodes
        .iter()
        .map(|n| match n {
            TreeNode::Leaf {
                probability,
                n_samples,
            } => probability * n_samples / root,
            TreeNode::Split { .. } => 0.0,
        })
        .sum()
}

pub fn expected_value(m: &ForestModel) -> f64 {
    m.trees.iter().map(tree_expectation).sum::<f64>() / m.trees.len() as f64
}

#[derive(Clone, Copy)]
struct PathElem {
    feature: Option<usize>,
    zero: f64,
    one: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElem>, zero: f64, one: f64, feature: Option<usize>) {
    let l = path.len();
    path.push(PathElem {
        feature,
        zero,
        one,
        weight: if l == 0 { 1.0 } else { 0.0 },
    });
    let denom = (l + 1) as f64;
    for i in (0..l).rev() {
        path[i + 1].weight += one * path[i].weight * (i + 1) as f64 / denom;
        path[i].weight = zero * path[i].weight * (l - i) as f64 / denom;
    }
}

fn unwind(path: &mut Vec<PathElem>, idx: usize) {
    let d = path.len() - 1;
    let PathElem { one, zero, .. } = path[idx];
    let mut next = path[d].weight;
    let denom = (d + 1) as f64;
    for i in (0..d).rev() {
        if one != 0.0 {
            let tmp = path[i].weight;
            path[i].weight = next * denom / ((i + 1) as f64 * one);
            next = tmp - path[i].weight * zero * (d - i) as f64 / denom;
        } else {
            path[i].weight = path[i].weight * denom / (zero * (d - i) as f64);
        }
    }
    for i in idx..d {
        path[i].feature = path[i + 1].feature;
        path[i].zero = path[i + 1].zero;
        path[i].one = path[i + 1].one;
    }
    path.pop();
}

fn unwound_sum(path: &[PathElem], idx: usize) -> f64 {
    let d = path.len() - 1;
    let PathElem { one, zero, .. } = path[idx];
    let mut next = path[d].weight;
    let denom = (d + 1) as f64;
    let mut total = 0.0;
    for i in (0..d).rev() {
        if one != 0.0 {
            let tmp = next * denom / ((i + 1) as f64 * one);
            total += tmp;
            next = path[i].weight - tmp * zero * (d - i) as f64 / denom;
        } else if zero != 0.0 {
            total += path[i].weight / zero / ((d - i) as f64 / denom);
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    t: &Tree,
    x: &[f64],
    phi: &mut [f64],
    node: usize,
    parent: &[PathElem],
    zero: f64,
    one: f64,
    feature: Option<usize>,
) {
    let mut path = parent.to_vec();
    extend(&mut path, zero, one, feature);
    match &t.nodes[node] {
        TreeNode::Leaf { probability, .. } => {
            for i in 1..path.len() {
                let w = unwound_sum(&path, i);
                let e = path[i];
                let f = e.feature.expect("only the root element lacks a feature");
                phi[f] += w * (e.one - e.zero) * probability;
            }
        }
        TreeNode::Split {
            feature: split,
            threshold,
            left,
            right,
            n_samples,
        } => {
            let (hot, cold) = if x[*split] <= *threshold {
                (*left, *right)
            } else {
                (*right, *left)
            };
            let hot_zero = t.nodes[hot].n_samples() / n_samples;
            let cold_zero = t.nodes[cold].n_samples() / n_samples;
            let mut in_zero = 1.0;
            let mut in_one = 1.0;
            if let Some(k) = path.iter().position(|e| e.feature == Some(*split)) {
                in_zero = path[k].zero;
                in_one = path[k].one;
                unwind(&mut path, k);
            }
            recurse(t, x, phi, hot, &path, hot_zero * in_zero, in_one, Some(*split));
            recurse(t, x, phi, cold, &path, cold_zero * in_zero, 0.0, Some(*split));
        }
    }
}

/// Exact path-dependent TreeSHAP on the probability output, averaged over
/// the forest's trees.
pub fn treeshap(m: &ForestModel, x: &[f64]) -> Result<ShapRow> {
    check_counts(m)?;
    let prediction = m.predict_proba(x)?;
    let mut phi = vec![0.0; m.feature_names.len()];
    for t in &m.trees {
        recurse(t, x, &mut phi, 0, &[], 1.0, 1.0, None);
    }
    let k = m.trees.len() as f64;
    phi.iter_mut().for_each(|v| *v /= k);
    Ok(ShapRow {
        base_value: expected_value(m),
        phi,
        prediction,
    })
}

/// Tree output with features in `mask` fixed to `x` and every other split
/// averaged by training fractions.
fn conditional_value(t: &Tree, x: &[f64], mask: u32, node: usize) -> f64 {
    match &t.nodes[node] {
        TreeNode::Leaf { probability, .. } => *probability,
        TreeNode::Split {
            feature,
            threshold,
            left,
            right,
            n_samples,
        } => {
            if mask >> feature & 1 == 1 {
                let next = if x[*feature] <= *threshold { *left } else { *right };
                conditional_value(t, x, mask, next)
            } else {
                (t.nodes[*left].n_samples() * conditional_value(t, x, mask, *left)
                    + t.nodes[*right].n_samples() * conditional_value(t, x, mask, *right))
                    / n_samples
            }
        }
    }
}

/// Shapley values by enumerating all coalitions. Refuses more than
/// [`BRUTEFORCE_MAX_FEATURES`] features.
pub fn shap_bruteforce(m: &ForestModel, x: &[f64]) -> Result<ShapRow> {
    check_counts(m)?;
    let n = m.feature_names.len();
    if n > BRUTEFORCE_MAX_FEATURES {
        return Err(Error::Config(format!(
            "subset enumeration over {n} features refused (limit {BRUTEFORCE_MAX_FEATURES})"
        )));
    }
    let prediction = m.predict_proba(x)?;
    let k = m.trees.len() as f64;
    let v: Vec<f64> = (0u32..1 << n)
        .map(|mask| m.trees.iter().map(|t| conditional_value(t, x, mask, 0)).sum::<f64>() / k)
        .collect();
    // Weight |S|! (n-|S|-1)! / n! for a coalition of size |S|.
    let mut fact = vec![1.0f64; n + 1];
    for i in 1..=n {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut phi = vec![0.0; n];
    for (i, p) in phi.iter_mut().enumerate() {
        let bit = 1u32 << i;
        for mask in 0u32..1 << n {
            if mask & bit == 0 {
                let s = mask.count_ones() as usize;
                let w = fact[s] * fact[n - s - 1] / fact[n];
                *p += w * (v[(mask | bit) as usize] - v[mask as usize]);
            }
        }
    }
    Ok(ShapRow {
        base_value: v[0],
        phi,
        prediction,
    })
}

/// Shapley values for every row of a table.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapReport {
    pub feature_names: Vec<String>,
    pub sample_ids: Vec<String>,
    /// Feature values the attributions were computed at.
    pub values: Vec<Vec<f64>>,
    pub rows: Vec<ShapRow>,
}

pub const SHAP_HEADER: [&str; 4] = ["sample_id", "feature", "phi", "feature_value"];

impl ShapReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(SHAP_HEADER)?;
        for ((id, row), vals) in self.sample_ids.iter().zip(&self.rows).zip(&self.values) {
            for ((name, phi), v) in self.feature_names.iter().zip(&row.phi).zip(vals) {
                w.write_record([id.clone(), name.clone(), phi.to_string(), v.to_string()])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }

    /// Per-sample base value, prediction and attribution total.
    pub fn base_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["sample_id", "base_value", "prediction", "phi_sum"])?;
        for (id, r) in self.sample_ids.iter().zip(&self.rows) {
            w.write_record([
                id.clone(),
                r.base_value.to_string(),
                r.prediction.to_string(),
                r.phi.iter().sum::<f64>().to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }

    /// Reads attributions back from the long-format CSV. Base values and
    /// predictions are not part of that file and come back as NaN.
    pub fn from_csv(text: &str) -> Result<ShapReport> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header != SHAP_HEADER {
            return Err(Error::Parse(format!("unexpected Shapley header {header:?}")));
        }
        let mut report = ShapReport {
            feature_names: Vec::new(),
            sample_ids: Vec::new(),
            values: Vec::new(),
            rows: Vec::new(),
        };
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let mut col = 0;
        for rec in r.records() {
            let rec = rec?;
            let new_sample = report.sample_ids.last().is_none_or(|id| id != &rec[0]);
            if new_sample {
                if !report.sample_ids.is_empty() && col != report.feature_names.len() {
                    return Err(Error::Parse("ragged Shapley table".into()));
                }
                report.sample_ids.push(rec[0].to_owned());
                report.values.push(Vec::new());
                report.rows.push(ShapRow {
                    base_value: f64::NAN,
                    phi: Vec::new(),
                    prediction: f64::NAN,
                });
                col = 0;
            }
            if report.sample_ids.len() == 1 {
                report.feature_names.push(rec[1].to_owned());
            } else if report.feature_names.get(col).map(String::as_str) != Some(&rec[1]) {
                return Err(Error::Parse(format!("unexpected feature {:?}", &rec[1])));
            }
            report.rows.last_mut().unwrap().phi.push(num(&rec[2])?);
            report.values.last_mut().unwrap().push(num(&rec[3])?);
            col += 1;
        }
        if col != report.feature_names.len() {
            return Err(Error::Parse("ragged Shapley table".into()));
        }
        Ok(report)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = dir.join("shap.csv");
        fs::write(&p, self.to_csv()?).map_err(|e| Error::io(&p, e))?;
        let b = dir.join("shap_base.csv");
        fs::write(&b, self.base_csv()?).map_err(|e| Error::io(&b, e))
    }
}

/// TreeSHAP over every row of `table`, after projecting it onto the
/// model's feature order. Missing entries are read as 0.
pub fn shap_table(m: &ForestModel, table: &FeatureTable) -> Result<ShapReport> {
    let t = table.project(&m.feature_names)?;
    let x = t.matrix();
    let rows = (0..x.rows())
        .into_par_iter()
        .map(|i| treeshap(m, x.row(i)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ShapReport {
        feature_names: m.feature_names.clone(),
        sample_ids: t.rows.iter().map(|r| r.sample_id.clone()).collect(),
        values: (0..x.rows()).map(|i| x.row(i).to_vec()).collect(),
        rows,
    })
}

/// Attribution profile of one feature across samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureAttribution {
    pub feature: String,
    pub mean_abs_phi: f64,
    /// Share of the total mean |phi| across all features.
    pub share: f64,
    /// True for the leading features needed to reach the cutoff share.
    pub within_cutoff: bool,
    /// `(phi, feature value)` per sample, in report order.
    pub points: Vec<(f64, f64)>,
}

/// Features ranked by mean |phi| (ties keep column order). Features are
/// flagged until their cumulative share first reaches `cutoff_share`.
pub fn shap_summary(report: &ShapReport, cutoff_share: f64) -> Vec<FeatureAttribution> {
    let n = report.rows.len().max(1) as f64;
    let mut out: Vec<FeatureAttribution> = report
        .feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let points: Vec<(f64, f64)> = report
                .rows
                .iter()
                .zip(&report.values)
                .map(|(r, v)| (r.phi[j], v[j]))
                .collect();
            FeatureAttribution {
                feature: name.clone(),
                mean_abs_phi: points.iter().map(|p| p.0.abs()).sum::<f64>() / n,
                share: 0.0,
                within_cutoff: false,
                points,
            }
        })
        .collect();
    out.sort_by(|a, b| b.mean_abs_phi.total_cmp(&a.mean_abs_phi));
    let total: f64 = out.iter().map(|f| f.mean_abs_phi).sum();
    let mut cum = 0.0;
    let mut reached = false;
    for f in &mut out {
        f.share = if total > 0.0 { f.mean_abs_phi / total } else { 0.0 };
        if !reached && total > 0.0 {
            f.within_cutoff = true;
            cum += f.share;
            reached = cum >= cutoff_share;
        }
    }
    out
}

/// Fraction of total mean |phi| held by the `k` top-ranked features.
pub fn top_k_share(summary: &[FeatureAttribution], k: usize) -> f64 {
    summary.iter().take(k).map(|f| f.share).sum()
}

pub fn summary_to_csv(summary: &[FeatureAttribution]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["rank", "feature", "mean_abs_phi", "share", "within_cutoff"])?;
    for (i, f) in summary.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            f.feature.clone(),
            f.mean_abs_phi.to_string(),
            f.share.to_string(),
            f.within_cutoff.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train_forest, RFParams};
    use crate::matrix::Matrix;
    use crate::rng::rng_for;
    use rand::Rng;

    fn stump(feature: usize, nl: f64, nr: f64, pl: f64, pr: f64) -> Tree {
        Tree {
            nodes: vec![
                TreeNode::Split {
                    feature,
                    threshold: 0.5,
                    left: 1,
                    right: 2,
                    n_samples: nl + nr,
                },
                TreeNode::Leaf {
                    probability: pl,
                    n_samples: nl,
                },
                TreeNode::Leaf {
                    probability: pr,
                    n_samples: nr,
                },
            ],
        }
    }

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn constant_model_has_zero_phi() {
        let m = ForestModel::from_trees(vec![Tree::leaf(0.3, 10.0)], names(3)).unwrap();
        for r in [treeshap(&m, &[1.0, 2.0, 3.0]).unwrap(), shap_bruteforce(&m, &[1.0, 2.0, 3.0]).unwrap()] {
            assert_eq!(r.phi, vec![0.0; 3]);
            assert_eq!(r.base_value, 0.3);
        }
    }

    #[test]
    fn stump_attributes_only_its_feature() {
        let m = ForestModel::from_trees(vec![stump(1, 3.0, 1.0, 0.0, 1.0)], names(3)).unwrap();
        let r = treeshap(&m, &[0.0, 0.9, 0.0]).unwrap();
        assert_eq!(r.phi[0], 0.0);
        assert_eq!(r.phi[2], 0.0);
        assert!((r.phi[1] - 0.75).abs() < 1e-15);
        assert!((r.base_value - 0.25).abs() < 1e-15);
    }

    #[test]
    fn symmetric_duplicate_stumps_share_credit() {
        let m = ForestModel::from_trees(
            vec![stump(0, 2.0, 2.0, 0.1, 0.9), stump(1, 2.0, 2.0, 0.1, 0.9)],
            names(2),
        )
        .unwrap();
        let r = shap_bruteforce(&m, &[0.7, 0.7]).unwrap();
        assert!((r.phi[0] - r.phi[1]).abs() < 1e-15);
        assert!((r.phi.iter().sum::<f64>() + r.base_value - r.prediction).abs() < 1e-12);
    }

    #[test]
    fn treeshap_matches_enumeration_on_trained_forests() {
        let mut rng = rng_for(17, &[]);
        for trial in 0..10 {
            let p = 2 + trial % 5;
            let data: Vec<f64> = (0..60 * p).map(|_| rng.random::<f64>()).collect();
            let x = Matrix::new(60, p, data).unwrap();
            let y: Vec<bool> = (0..60).map(|i| x.get(i, 0) + 0.5 * x.get(i, p - 1) > 0.7).collect();
            let params = RFParams {
                n_trees: 6,
                max_depth: 4,
                min_samples_leaf: 1,
                ..RFParams::default()
            };
            let m = train_forest(&x, &y, &names(p), &params, trial as u64).unwrap();
            for i in 0..5 {
                let a = treeshap(&m, x.row(i)).unwrap();
                let b = shap_bruteforce(&m, x.row(i)).unwrap();
                for (u, v) in a.phi.iter().zip(&b.phi) {
                    assert!((u - v).abs() < 1e-10, "{u} vs {v}");
                }
                assert!((a.base_value - b.base_value).abs() < 1e-12);
                assert!((a.phi.iter().sum::<f64>() + a.base_value - a.prediction).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repeated_feature_on_a_path() {
        let t = Tree {
            nodes: vec![
                TreeNode::Split { feature: 0, threshold: 0.5, left: 1, right: 4, n_samples: 10.0 },
                TreeNode::Split { feature: 0, threshold: 0.2, left: 2, right: 3, n_samples: 6.0 },
                TreeNode::Leaf { probability: 0.0, n_samples: 2.0 },
                TreeNode::Leaf { probability: 0.5, n_samples: 4.0 },
                TreeNode::Split { feature: 1, threshold: 0.5, left: 5, right: 6, n_samples: 4.0 },
                TreeNode::Leaf { probability: 0.25, n_samples: 1.0 },
                TreeNode::Leaf { probability: 1.0, n_samples: 3.0 },
            ],
        };
        let m = ForestModel::from_trees(vec![t], names(2)).unwrap();
        for x in [[0.1, 0.1], [0.3, 0.9], [0.8, 0.2], [0.8, 0.8]] {
            let a = treeshap(&m, &x).unwrap();
            let b = shap_bruteforce(&m, &x).unwrap();
            for (u, v) in a.phi.iter().zip(&b.phi) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn enumeration_refuses_wide_models() {
        let m = ForestModel::from_trees(vec![Tree::leaf(0.5, 1.0)], names(16)).unwrap();
        assert!(shap_bruteforce(&m, &[0.0; 16]).is_err());
    }

    #[test]
    fn missing_counts_are_rejected() {
        let mut m = ForestModel::from_trees(vec![stump(0, 1.0, 1.0, 0.0, 1.0)], names(1)).unwrap();
        m.trees[0].nodes[1] = TreeNode::Leaf { probability: 0.0, n_samples: 0.0 };
        assert!(matches!(treeshap(&m, &[0.0]), Err(Error::ModelFormat(_))));
    }

    #[test]
    fn summary_ranks_and_flags() {
        let report = ShapReport {
            feature_names: names(3),
            sample_ids: vec!["a".into(), "b".into()],
            values: vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            rows: vec![
                ShapRow { base_value: 0.5, phi: vec![0.0, 0.3, -0.1], prediction: 0.7 },
                ShapRow { base_value: 0.5, phi: vec![0.0, -0.3, 0.1], prediction: 0.3 },
            ],
        };
        let s = shap_summary(&report, 0.8);
        let order: Vec<&str> = s.iter().map(|f| f.feature.as_str()).collect();
        assert_eq!(order, ["f1", "f2", "f0"]);
        assert_eq!(s.iter().map(|f| f.within_cutoff).collect::<Vec<_>>(), [true, true, false]);
        assert!((top_k_share(&s, 1) - 0.75).abs() < 1e-12);
        assert_eq!(s[0].points, vec![(0.3, 2.0), (-0.3, 5.0)]);
        let csv = report.to_csv().unwrap();
        assert!(csv.starts_with("sample_id,feature,phi,feature_value\na,f0,0,1\n"));
        let back = ShapReport::from_csv(&csv).unwrap();
        assert_eq!(back.values, report.values);
        assert_eq!(back.rows[1].phi, report.rows[1].phi);
        assert!(ShapReport::from_csv(&csv[..csv.len() - 12]).is_err());
    }
}
