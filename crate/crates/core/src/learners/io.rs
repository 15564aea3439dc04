use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use super::{Classifier, ForestModel, SvmModel};
use crate::error::{Error, Result};

pub const MODEL_FORMAT_VERSION: u32 = 1;

const KIND_FOREST: &str = "random_forest";
const KIND_SVM: &str = "svm";

/// Any serializable trained model.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Forest(ForestModel),
    Svm(SvmModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Forest(_) => KIND_FOREST,
            Model::Svm(_) => KIND_SVM,
        }
    }

    pub fn classifier(&self) -> &dyn Classifier {
        match self {
            Model::Forest(m) => m,
            Model::Svm(m) => m,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::Forest(m) => &m.feature_names,
            Model::Svm(m) => &m.feature_names,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    format_version: u32,
    kind: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn model_to_json(m: &Model) -> Result<String> {
    let kind = m.kind();
    let mut s = match m {
        Model::Forest(f) => serde_json::to_string_pretty(&Envelope {
            format_version: MODEL_FORMAT_VERSION,
            kind,
            body: f,
        }),
        Model::Svm(s) => serde_json::to_string_pretty(&Envelope {
            format_version: MODEL_FORMAT_VERSION,
            kind,
            body: s,
        }),
    }?;
    s.push('\n');
    Ok(s)
}

pub fn model_from_json(text: &str) -> Result<Model> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| Error::ModelFormat(format!("not a model document: {e}")))?;
    let version = v.get("format_version").and_then(Value::as_u64);
    if version != Some(MODEL_FORMAT_VERSION as u64) {
        return Err(Error::ModelFormat(format!(
            "unsupported format_version {version:?}, expected {MODEL_FORMAT_VERSION}"
        )));
    }
    let bad = |e: serde_json::Error| Error::ModelFormat(e.to_string());
    let model = match v.get("kind").and_then(Value::as_str) {
        Some(KIND_FOREST) => {
            let m: ForestModel = serde_json::from_value(v).map_err(bad)?;
            m.validate()?;
            Model::Forest(m)
        }
        Some(KIND_SVM) => {
            let m: SvmModel = serde_json::from_value(v).map_err(bad)?;
            m.validate()?;
            Model::Svm(m)
        }
        other => return Err(Error::ModelFormat(format!("unknown model kind {other:?}"))),
    };
    Ok(model)
}

pub fn save_model(m: &Model, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, model_to_json(m)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{train_forest, train_svm, RFParams, SvmParams};
    use crate::matrix::Matrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data() -> (Matrix, Vec<bool>, Vec<String>) {
        let mut r = ChaCha8Rng::seed_from_u64(8);
        let d: Vec<f64> = (0..300).map(|_| r.random::<f64>()).collect();
        let x = Matrix::new(100, 3, d).unwrap();
        let y = (0..100).map(|i| x.get(i, 0) + 0.3 * x.get(i, 2) > 0.6).collect();
        (x, y, vec!["a".into(), "b".into(), "c".into()])
    }

    fn models() -> Vec<Model> {
        let (x, y, n) = data();
        let f = train_forest(&x, &y, &n, &RFParams { n_trees: 7, ..RFParams::default() }, 3).unwrap();
        let s = train_svm(&x, &y, &n, &SvmParams::default()).unwrap();
        vec![Model::Forest(f), Model::Svm(s)]
    }

    #[test]
    fn save_load_save_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for m in models() {
            let p1 = dir.path().join(format!("{}.json", m.kind()));
            let p2 = dir.path().join(format!("{}-2.json", m.kind()));
            save_model(&m, &p1).unwrap();
            let back = load_model(&p1).unwrap();
            assert_eq!(back, m);
            save_model(&back, &p2).unwrap();
            assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
            for _ in 0..100 {
                let x: Vec<f64> = (0..3).map(|_| r.random::<f64>() * 2.0 - 0.5).collect();
                assert_eq!(
                    m.classifier().predict_proba(&x).unwrap(),
                    back.classifier().predict_proba(&x).unwrap()
                );
            }
        }
    }

    #[test]
    fn key_order_starts_with_header() {
        let text = model_to_json(&models()[0]).unwrap();
        let v1 = text.find("format_version").unwrap();
        let k = text.find("\"kind\"").unwrap();
        let p = text.find("\"params\"").unwrap();
        let f = text.find("feature_names").unwrap();
        let t = text.find("\"trees\"").unwrap();
        let fp = text.find("train_fingerprint").unwrap();
        assert!(v1 < k && k < p && p < f && f < t && t < fp);
    }

    #[test]
    fn truncated_and_foreign_files_fail() {
        let text = model_to_json(&models()[0]).unwrap();
        for cut in [0, 10, text.len() / 2, text.len() - 3] {
            assert!(matches!(model_from_json(&text[..cut]), Err(Error::ModelFormat(_))));
        }
        let wrong = text.replacen("\"format_version\": 1", "\"format_version\": 99", 1);
        assert!(matches!(model_from_json(&wrong), Err(Error::ModelFormat(_))));
        let kind = text.replacen("random_forest", "boosting", 1);
        assert!(model_from_json(&kind).is_err());
        let no_counts = text.replace("\"n_samples\"", "\"count\"");
        assert!(model_from_json(&no_counts).is_err());
    }
}
