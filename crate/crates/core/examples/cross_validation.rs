//! Patient-grouped 5-fold cross-validation with augmentation inside each
//! training fold.

use texturekit::augment::AugmentSpec;
use texturekit::evaluate::{cross_validate_detailed, make_folds, CvConfig};
use texturekit::features::FeatureConfig;
use texturekit::learners::{ModelSpec, RFParams};
use texturekit::patchio::Preprocessing;
use texturekit::synth::{generate, SyntheticSpec};

fn main() -> texturekit::Result<()> {
    let d = generate(&SyntheticSpec::default())?;
    let plan = make_folds(&d, 5, 0)?;
    let cfg = CvConfig {
        prep: Preprocessing::None,
        features: FeatureConfig::default(),
        augment: AugmentSpec {
            per_sample_count: 9,
            ..AugmentSpec::default()
        },
        seed: 0,
    };
    let model = ModelSpec::RandomForest(RFParams {
        n_trees: 50,
        ..RFParams::default()
    });
    let run = cross_validate_detailed(&d, &cfg, &model, &plan, None)?;
    for f in &run.folds {
        let o = &f.outcome;
        println!(
            "fold {}: AUC {:?} accuracy {:.3} ({} train rows, {} test rows)",
            o.fold, o.auc, o.metrics.accuracy, o.n_train, o.n_test
        );
    }
    let s = &run.summary;
    println!("{}: AUC {:.3} ± {:.3}", s.config_id, s.auc.mean, s.auc.std);
    Ok(())
}
