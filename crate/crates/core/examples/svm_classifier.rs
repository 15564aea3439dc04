//! Soft-margin SVMs with linear and RBF kernels on standardized features.

use texturekit::evaluate::roc_auc;
use texturekit::learners::{train_svm_traced, Classifier, Kernel, SvmParams};
use texturekit::Matrix;

fn main() -> texturekit::Result<()> {
    // Two interleaved rings: linearly inseparable, easy for an RBF kernel.
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for k in 0..120 {
        let a = k as f64 * 0.37;
        let r = if k % 2 == 0 { 1.0 } else { 2.5 };
        rows.push(vec![r * a.cos(), r * a.sin()]);
        labels.push(k % 2 == 1);
    }
    let x = Matrix::from_rows(&rows)?;
    let names = vec!["x".to_string(), "y".to_string()];
    for kernel in [Kernel::Linear, Kernel::Rbf] {
        let params = SvmParams {
            kernel,
            c: 10.0,
            gamma: 0.5,
            ..SvmParams::default()
        };
        let (model, trace) = train_svm_traced(&x, &labels, &names, &params)?;
        let scores = model.predict_many(&x)?;
        println!(
            "{kernel:?}: {} support vectors, {} iterations, dual objective {:.3}, training AUC {:.3}",
            model.support_vectors.len(),
            model.iterations,
            trace.dual_objective.last().copied().unwrap_or(0.0),
            roc_auc(&scores, &labels)?
        );
    }
    Ok(())
}
