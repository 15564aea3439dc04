use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::{extract_features, feature_name_strings, fit_var_edges, FeatureConfig, VarEdges};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::patchio::{parent_id, Dataset, Label, Preprocessing, AUGMENT_MARKER};

const ID_COLUMNS: [&str; 3] = ["sample_id", "patient_id", "label"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub sample_id: String,
    pub patient_id: String,
    pub label: Label,
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
}

impl FeatureRow {
    pub fn augmented(&self) -> bool {
        self.sample_id.contains(AUGMENT_MARKER)
    }

    pub fn parent_id(&self) -> &str {
        parent_id(&self.sample_id)
    }
}

/// One row per sample, columns in a fixed order shared by every row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub names: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

/// Columns that had at least one missing entry before imputation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImputeReport {
    pub columns: Vec<String>,
}

/// Extracts features with variance edges fitted on `d` itself.
pub fn build_table(
    d: &Dataset,
    prep: Preprocessing,
    config: &FeatureConfig,
) -> Result<(FeatureTable, VarEdges)> {
    let edges = fit_var_edges(d, prep, config)?;
    let table = build_table_with_edges(d, prep, config, &edges)?;
    Ok((table, edges))
}

pub fn build_table_with_edges(
    d: &Dataset,
    prep: Preprocessing,
    config: &FeatureConfig,
    edges: &VarEdges,
) -> Result<FeatureTable> {
    config.validate()?;
    if d.is_empty() {
        return Err(Error::InvalidData("cannot build a feature table from an empty dataset".into()));
    }
    let rows = d
        .samples
        .par_iter()
        .map(|s| {
            let v = extract_features(s, prep, config, edges)?;
            Ok(FeatureRow {
                sample_id: s.sample_id().to_owned(),
                patient_id: s.patient_id().to_owned(),
                label: s.label(),
                values: v.values,
                missing: v.missing,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureTable {
        names: feature_name_strings(),
        rows,
    })
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Zero-fills missing entries and lists the affected columns.
    pub fn impute(&self) -> (FeatureTable, ImputeReport) {
        let mut flagged = vec![false; self.names.len()];
        for r in &self.rows {
            for (f, &m) in flagged.iter_mut().zip(&r.missing) {
                *f |= m;
            }
        }
        let rows = self
            .rows
            .iter()
            .map(|r| FeatureRow {
                values: r
                    .values
                    .iter()
                    .zip(&r.missing)
                    .map(|(&v, &m)| if m { 0.0 } else { v })
                    .collect(),
                missing: vec![false; r.missing.len()],
                ..r.clone()
            })
            .collect();
        let columns = self
            .names
            .iter()
            .zip(&flagged)
            .filter(|(_, &f)| f)
            .map(|(n, _)| n.clone())
            .collect();
        (
            FeatureTable {
                names: self.names.clone(),
                rows,
            },
            ImputeReport { columns },
        )
    }

    /// Values with missing entries read as 0.
    pub fn matrix(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.rows.len() * self.names.len());
        for r in &self.rows {
            data.extend(r.values.iter().zip(&r.missing).map(|(&v, &m)| if m { 0.0 } else { v }));
        }
        Matrix::new(self.rows.len(), self.names.len(), data).expect("rows match header")
    }

    pub fn labels(&self) -> Vec<bool> {
        self.rows.iter().map(|r| r.label.is_positive()).collect()
    }

    /// Keeps only the named columns, in the given order.
    pub fn project(&self, names: &[String]) -> Result<FeatureTable> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::InvalidData(format!("feature {n:?} not in table")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(FeatureTable {
            names: names.to_vec(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    values: idx.iter().map(|&i| r.values[i]).collect(),
                    missing: idx.iter().map(|&i| r.missing[i]).collect(),
                    ..r.clone()
                })
                .collect(),
        })
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureTable {
        FeatureTable {
            names: self.names.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Distinct patient ids in first-appearance order.
    pub fn patients(&self) -> Vec<String> {
        let mut seen = BTreeSet::new();
        self.rows
            .iter()
            .filter(|r| seen.insert(r.patient_id.as_str()))
            .map(|r| r.patient_id.clone())
            .collect()
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = ID_COLUMNS.to_vec();
        header.extend(self.names.iter().map(String::as_str));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![
                r.sample_id.clone(),
                r.patient_id.clone(),
                r.label.code().to_string(),
            ];
            rec.extend(
                r.values
                    .iter()
                    .zip(&r.missing)
                    .map(|(v, &m)| if m { String::new() } else { v.to_string() }),
            );
            w.write_record(&rec)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Missing values become empty cells.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<FeatureTable> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        FeatureTable::from_csv_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn from_csv_str(text: &str) -> Result<FeatureTable> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
        if header.len() < 4 || header[..3] != ID_COLUMNS {
            return Err(Error::Parse(format!(
                "feature table header must start with {} followed by feature names",
                ID_COLUMNS.join(",")
            )));
        }
        let names = header[3..].to_vec();
        let mut seen = HashMap::new();
        for (i, n) in names.iter().enumerate() {
            if seen.insert(n.as_str(), i).is_some() {
                return Err(Error::Parse(format!("duplicate feature column {n:?}")));
            }
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut values = Vec::with_capacity(names.len());
            let mut missing = Vec::with_capacity(names.len());
            for cell in rec.iter().skip(3) {
                if cell.is_empty() {
                    values.push(0.0);
                    missing.push(true);
                } else {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad number {cell:?}")))?;
                    values.push(v);
                    missing.push(false);
                }
            }
            rows.push(FeatureRow {
                sample_id: rec[0].to_owned(),
                patient_id: rec[1].to_owned(),
                label: Label::from_code(&rec[2])?,
                values,
                missing,
            });
        }
        Ok(FeatureTable { names, rows })
    }
}
