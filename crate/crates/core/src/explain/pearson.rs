use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::FeatureTable;

/// Pairwise Pearson coefficients. Entries touching an invalid column are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    /// False for columns with zero variance or any missing entry.
    pub valid: Vec<bool>,
    r: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r[i * self.names.len() + j]
    }

    pub fn valid_names(&self) -> Vec<&str> {
        self.names
            .iter()
            .zip(&self.valid)
            .filter(|(_, &v)| v)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    pub fn invalid_names(&self) -> Vec<&str> {
        self.names
            .iter()
            .zip(&self.valid)
            .filter(|(_, &v)| !v)
            .map(|(n, _)| n.as_str())
            .collect()
    }

    /// Square CSV over valid columns with names as first row and column.
    pub fn to_csv(&self) -> Result<String> {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| self.valid[i]).collect();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![String::from("feature")];
        header.extend(idx.iter().map(|&i| self.names[i].clone()));
        w.write_record(&header)?;
        for &i in &idx {
            let mut rec = vec![self.names[i].clone()];
            rec.extend(idx.iter().map(|&j| self.get(i, j).to_string()));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }

    /// Writes `correlation.csv` and `correlation_invalid.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let p = dir.join("correlation.csv");
        fs::write(&p, self.to_csv()?).map_err(|e| Error::io(&p, e))?;
        let side = dir.join("correlation_invalid.txt");
        let text: String = self.invalid_names().iter().map(|n| format!("{n}\n")).collect();
        fs::write(&side, text).map_err(|e| Error::io(&side, e))
    }
}

pub fn pearson_matrix(table: &FeatureTable) -> Result<CorrelationMatrix> {
    let n = table.len();
    if n < 2 {
        return Err(Error::InvalidData("correlation needs at least 2 rows".into()));
    }
    let p = table.n_features();
    let mut centered: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut norms = vec![0.0; p];
    let mut valid = vec![true; p];
    for j in 0..p {
        let any_missing = table.rows.iter().any(|r| r.missing[j]);
        let col: Vec<f64> = table.rows.iter().map(|r| r.values[j]).collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let c: Vec<f64> = col.iter().map(|v| v - mean).collect();
        let ss: f64 = c.iter().map(|v| v * v).sum();
        if any_missing || !(ss > 0.0) || !ss.is_finite() {
            valid[j] = false;
        }
        norms[j] = ss.sqrt();
        centered.push(c);
    }
    let mut r = vec![f64::NAN; p * p];
    for i in 0..p {
        if !valid[i] {
            continue;
        }
        r[i * p + i] = 1.0;
        for j in i + 1..p {
            if !valid[j] {
                continue;
            }
            let dot: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let v = dot / (norms[i] * norms[j]);
            r[i * p + j] = v;
            r[j * p + i] = v;
        }
    }
    Ok(CorrelationMatrix {
        names: table.names.clone(),
        valid,
        r,
    })
}
