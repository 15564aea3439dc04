//! Pearson correlation of the feature columns rendered as an SVG heatmap,
//! next to a bar chart of cross-validated metrics.

use texturekit::augment::{augment_dataset, AugmentSpec};
use texturekit::evaluate::{cross_validate_table, make_folds_table};
use texturekit::explain::{correlation_heatmap_svg, metrics_bar_svg, pearson_matrix, SvgOptions};
use texturekit::features::{build_table, FeatureConfig};
use texturekit::learners::{ModelSpec, RFParams, SvmParams};
use texturekit::patchio::Preprocessing;
use texturekit::synth::{generate, SyntheticSpec};

fn main() -> texturekit::Result<()> {
    let d = generate(&SyntheticSpec::default())?;
    let aug = AugmentSpec {
        per_sample_count: 1,
        ..AugmentSpec::default()
    };
    let (table, _) = build_table(&augment_dataset(&d, &aug, 0)?, Preprocessing::None, &FeatureConfig::default())?;
    let cm = pearson_matrix(&table)?;
    println!("{} valid columns, excluded: {:?}", cm.valid_names().len(), cm.invalid_names());

    let plan = make_folds_table(&table, 5, 0)?;
    let summaries = [
        ModelSpec::RandomForest(RFParams::default()),
        ModelSpec::Svm(SvmParams::default()),
    ]
    .iter()
    .map(|m| cross_validate_table(&table, m, &plan, None, 0))
    .collect::<texturekit::Result<Vec<_>>>()?;

    let dir = std::env::temp_dir().join("texturekit-figures");
    std::fs::create_dir_all(&dir).expect("temp dir is writable");
    let opts = SvgOptions { timestamp: false };
    std::fs::write(dir.join("correlation.svg"), correlation_heatmap_svg(&cm, opts)).expect("write");
    std::fs::write(dir.join("metrics.svg"), metrics_bar_svg(&summaries, 10, opts)).expect("write");
    println!("figures in {}", dir.display());
    Ok(())
}
