//! Exact Shapley values for a forest: per-sample attributions, the local
//! accuracy identity, and the ranking of features by mean |phi|.

use texturekit::augment::{augment_dataset, AugmentSpec};
use texturekit::explain::{shap_summary, shap_table, top_k_share};
use texturekit::features::{build_table, FeatureConfig};
use texturekit::learners::{train_forest, RFParams};
use texturekit::patchio::Preprocessing;
use texturekit::synth::{generate, SyntheticSpec};

fn main() -> texturekit::Result<()> {
    let d = generate(&SyntheticSpec::default())?;
    let aug = AugmentSpec {
        per_sample_count: 3,
        ..AugmentSpec::default()
    };
    let (table, _) = build_table(&augment_dataset(&d, &aug, 0)?, Preprocessing::None, &FeatureConfig::default())?;
    let forest = train_forest(&table.matrix(), &table.labels(), &table.names, &RFParams::default(), 0)?;
    let originals: Vec<usize> = (0..table.len()).filter(|&i| !table.rows[i].augmented()).collect();
    let report = shap_table(&forest, &table.select_rows(&originals))?;
    let r = &report.rows[0];
    println!(
        "{}: base {:.4} + sum(phi) {:.4} = {:.4} (model says {:.4})",
        report.sample_ids[0],
        r.base_value,
        r.phi.iter().sum::<f64>(),
        r.base_value + r.phi.iter().sum::<f64>(),
        r.prediction
    );
    let summary = shap_summary(&report, 0.7);
    for f in summary.iter().take(10) {
        println!("{:>28} {:.5} ({:.1}%)", f.feature, f.mean_abs_phi, 100.0 * f.share);
    }
    println!("top 15 features carry {:.1}% of attribution", 100.0 * top_k_share(&summary, 15));
    Ok(())
}
