//! Trains a random forest, saves it as JSON, reloads it and scores rows.

use texturekit::augment::{augment_dataset, AugmentSpec};
use texturekit::features::{build_table, FeatureConfig};
use texturekit::learners::{load_model, save_model, train_forest, Classifier, RFParams};
use texturekit::patchio::Preprocessing;
use texturekit::synth::{generate, SyntheticSpec};

fn main() -> texturekit::Result<()> {
    let d = generate(&SyntheticSpec::default())?;
    let aug = AugmentSpec {
        per_sample_count: 2,
        ..AugmentSpec::default()
    };
    let (table, edges) = build_table(&augment_dataset(&d, &aug, 0)?, Preprocessing::None, &FeatureConfig::default())?;
    let params = RFParams {
        n_trees: 100,
        max_depth: 0,
        min_samples_leaf: 2,
        min_samples_split: 1,
        ..RFParams::default()
    };
    let mut forest = train_forest(&table.matrix(), &table.labels(), &table.names, &params, 42)?;
    forest.var_edges = Some(edges);
    let dir = std::env::temp_dir().join("texturekit-example");
    let path = dir.join("forest.json");
    let model = forest.to_model().expect("forests serialize");
    save_model(&model, &path)?;
    let reloaded = load_model(&path)?;
    let x = table.matrix();
    for r in 0..5 {
        println!(
            "{} label {} p = {:.3}",
            table.rows[r].sample_id,
            table.rows[r].label.code(),
            reloaded.classifier().predict_proba(x.row(r))?
        );
    }
    println!("model written to {}", path.display());
    Ok(())
}
