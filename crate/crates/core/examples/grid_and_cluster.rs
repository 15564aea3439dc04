//! Ranks a small model grid on one feature table, then groups the
//! configurations into performance clusters.

use texturekit::augment::{augment_dataset, AugmentSpec};
use texturekit::evaluate::{cluster_configs, grid_search_table, make_folds_table, metrics_to_csv};
use texturekit::features::{build_table, FeatureConfig};
use texturekit::learners::{Learner, ModelSpec};
use texturekit::patchio::Preprocessing;
use texturekit::synth::{generate, ClassEffect, SyntheticSpec};

fn main() -> texturekit::Result<()> {
    let d = generate(&SyntheticSpec {
        class_effect: ClassEffect::TextureShift,
        noise_level: 0.05,
        ..SyntheticSpec::default()
    })?;
    let aug = AugmentSpec {
        per_sample_count: 2,
        ..AugmentSpec::default()
    };
    let (table, _) = build_table(&augment_dataset(&d, &aug, 0)?, Preprocessing::Standardize, &FeatureConfig::default())?;
    let plan = make_folds_table(&table, 5, 0)?;
    let mut models: Vec<ModelSpec> = ModelSpec::rf_grid().into_iter().step_by(6).collect();
    models.extend(ModelSpec::svm_grid());
    let learners: Vec<&dyn Learner> = models.iter().map(|m| m as &dyn Learner).collect();
    let mut ranked = grid_search_table(&table, &learners, &plan, "standardize-16px-", 0)?;
    let clusters = cluster_configs(&ranked, 3, 0)?;
    for (s, &c) in ranked.iter_mut().zip(&clusters.assignments) {
        s.cluster = Some(c);
    }
    print!("{}", metrics_to_csv(&ranked)?);
    Ok(())
}
