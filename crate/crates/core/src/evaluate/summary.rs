use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::ThresholdMetrics;
use crate::error::{Error, Result};

pub const METRICS_HEADER: [&str; 12] = [
    "config_id",
    "auc_mean",
    "auc_std",
    "acc_mean",
    "acc_std",
    "f1_mean",
    "f1_std",
    "sens_mean",
    "sens_std",
    "spec_mean",
    "spec_std",
    "cluster",
];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation across folds.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> MeanStd {
        if values.is_empty() {
            return MeanStd { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        MeanStd { mean, std: var.sqrt() }
    }
}

/// Outcome of one held-out fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub fold: usize,
    /// `None` when the test portion held a single class.
    pub auc: Option<f64>,
    pub metrics: ThresholdMetrics,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub config_id: String,
    pub auc: MeanStd,
    pub accuracy: MeanStd,
    pub f1: MeanStd,
    pub sensitivity: MeanStd,
    pub specificity: MeanStd,
    /// Folds whose AUC was undefined and left out of the mean.
    pub auc_skipped_folds: Vec<usize>,
    pub cluster: Option<usize>,
}

impl MetricSummary {
    pub fn from_folds(config_id: impl Into<String>, folds: &[FoldOutcome]) -> Result<MetricSummary> {
        let aucs: Vec<f64> = folds.iter().filter_map(|f| f.auc).collect();
        if aucs.is_empty() {
            return Err(Error::InvalidData("no fold had both classes in its test portion".into()));
        }
        let col = |g: fn(&ThresholdMetrics) -> f64| {
            MeanStd::of(&folds.iter().map(|f| g(&f.metrics)).collect::<Vec<_>>())
        };
        Ok(MetricSummary {
            config_id: config_id.into(),
            auc: MeanStd::of(&aucs),
            accuracy: col(|m| m.accuracy),
            f1: col(|m| m.f1),
            sensitivity: col(|m| m.sensitivity),
            specificity: col(|m| m.specificity),
            auc_skipped_folds: folds.iter().filter(|f| f.auc.is_none()).map(|f| f.fold).collect(),
            cluster: None,
        })
    }

    /// Means of the five metrics in CSV column order.
    pub fn means(&self) -> [f64; 5] {
        [
            self.auc.mean,
            self.accuracy.mean,
            self.f1.mean,
            self.sensitivity.mean,
            self.specificity.mean,
        ]
    }
}

/// AUC descending, then accuracy descending, then config id ascending.
pub fn rank_order(a: &MetricSummary, b: &MetricSummary) -> Ordering {
    b.auc
        .mean
        .total_cmp(&a.auc.mean)
        .then(b.accuracy.mean.total_cmp(&a.accuracy.mean))
        .then(a.config_id.cmp(&b.config_id))
}

pub fn rank_summaries(mut s: Vec<MetricSummary>) -> Vec<MetricSummary> {
    s.sort_by(rank_order);
    s
}

pub fn metrics_to_csv(summaries: &[MetricSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER)?;
    for s in summaries {
        let mut rec = vec![s.config_id.clone()];
        for m in [s.auc, s.accuracy, s.f1, s.sensitivity, s.specificity] {
            rec.push(m.mean.to_string());
            rec.push(m.std.to_string());
        }
        rec.push(s.cluster.map(|c| c.to_string()).unwrap_or_default());
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_metrics_csv(summaries: &[MetricSummary], path: &Path) -> Result<()> {
    fs::write(path, metrics_to_csv(summaries)?).map_err(|e| Error::io(path, e))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricSummary>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    metrics_from_csv(&text)
}

pub fn metrics_from_csv(text: &str) -> Result<Vec<MetricSummary>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != METRICS_HEADER {
        return Err(Error::Parse(format!("unexpected metrics header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("column {}: {e}", METRICS_HEADER[i])))
        };
        let ms = |i: usize| -> Result<MeanStd> { Ok(MeanStd { mean: num(i)?, std: num(i + 1)? }) };
        let cluster = match &rec[11] {
            "" => None,
            c => Some(c.parse().map_err(|e| Error::Parse(format!("cluster: {e}")))?),
        };
        out.push(MetricSummary {
            config_id: rec[0].to_owned(),
            auc: ms(1)?,
            accuracy: ms(3)?,
            f1: ms(5)?,
            sensitivity: ms(7)?,
            specificity: ms(9)?,
            auc_skipped_folds: Vec::new(),
            cluster,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn summary(id: &str, auc: f64, acc: f64) -> MetricSummary {
        let m = MeanStd { mean: acc, std: 0.0 };
        MetricSummary {
            config_id: id.into(),
            auc: MeanStd { mean: auc, std: 0.01 },
            accuracy: m,
            f1: m,
            sensitivity: m,
            specificity: m,
            auc_skipped_folds: vec![],
            cluster: None,
        }
    }

    #[test]
    fn mean_std_population() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
    }

    #[test]
    fn ranking_is_order_invariant() {
        let s = vec![
            summary("b", 0.9, 0.8),
            summary("a", 0.9, 0.8),
            summary("c", 0.95, 0.1),
            summary("d", 0.9, 0.85),
        ];
        let ranked: Vec<String> = rank_summaries(s.clone()).into_iter().map(|m| m.config_id).collect();
        assert_eq!(ranked, ["c", "d", "a", "b"]);
        let mut rev = s;
        rev.reverse();
        let again: Vec<String> = rank_summaries(rev).into_iter().map(|m| m.config_id).collect();
        assert_eq!(ranked, again);
    }

    #[test]
    fn csv_round_trip() {
        let mut s = vec![summary("rf,x", 0.91, 0.8), summary("svm", 0.7, 0.6)];
        s[1].cluster = Some(2);
        let text = metrics_to_csv(&s).unwrap();
        assert!(text.starts_with("config_id,auc_mean,auc_std,acc_mean"));
        assert_eq!(metrics_from_csv(&text).unwrap(), s);
        assert!(metrics_from_csv("a,b\n1,2\n").is_err());
    }
}
