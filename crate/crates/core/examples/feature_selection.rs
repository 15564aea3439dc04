//! Sequential backward floating selection after a correlation prefilter.

use texturekit::augment::{augment_dataset, AugmentSpec};
use texturekit::evaluate::make_folds_table;
use texturekit::features::{build_table, FeatureConfig};
use texturekit::learners::{FeatureSubset, ModelSpec, RFParams};
use texturekit::patchio::Preprocessing;
use texturekit::select::{correlation_prefilter, sbfs, SbfsOptions};
use texturekit::synth::{generate, SyntheticSpec};

fn main() -> texturekit::Result<()> {
    let d = generate(&SyntheticSpec {
        n_patients: 20,
        noise_level: 0.08,
        ..SyntheticSpec::default()
    })?;
    let aug = AugmentSpec {
        per_sample_count: 1,
        ..AugmentSpec::default()
    };
    let (table, _) = build_table(&augment_dataset(&d, &aug, 0)?, Preprocessing::None, &FeatureConfig::default())?;
    let kept = correlation_prefilter(&table, 0.9)?;
    println!("prefilter keeps {} of {} features", kept.len(), table.n_features());
    let table = table.project(&kept)?;
    let plan = make_folds_table(&table, 4, 0)?;
    let learner = ModelSpec::RandomForest(RFParams {
        n_trees: 5,
        max_depth: 3,
        features_per_split: FeatureSubset::All,
        ..RFParams::default()
    });
    let opts = SbfsOptions {
        patience: 5,
        ..SbfsOptions::default()
    };
    let trace = sbfs(&table, &learner, &plan, &opts, 0)?;
    println!(
        "AUC {:.3} with all {} -> {:.3} with {}: {:?}",
        trace.full_criterion,
        table.n_features(),
        trace.final_criterion,
        trace.final_subset.len(),
        trace.final_subset
    );
    Ok(())
}
