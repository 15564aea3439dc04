//! Texture features of a single patch and of a whole augmented dataset.

use texturekit::augment::{augment_dataset, AugmentSpec};
use texturekit::features::{build_table, feature_name_strings, modality_features, FeatureConfig, VarEdges};
use texturekit::patchio::{Modality, Preprocessing};
use texturekit::synth::{generate, SyntheticSpec};

fn main() -> texturekit::Result<()> {
    let d = generate(&SyntheticSpec {
        n_patients: 6,
        ..SyntheticSpec::default()
    })?;
    let cfg = FeatureConfig::default();

    // One modality of one sample: 4 first-order, 14 Haralick, 35 LBP values.
    let grid = Preprocessing::Normalize.apply(d.samples[0].patch(Modality::T2w));
    let block = modality_features(&grid, &cfg, VarEdges::default().get(Modality::T2w))?;
    let names = feature_name_strings();
    for (name, v) in names.iter().zip(&block).take(8) {
        println!("{name:>24} {v:?}");
    }

    // Whole dataset with three augmented copies per sample.
    let aug = AugmentSpec {
        per_sample_count: 3,
        ..AugmentSpec::default()
    };
    let augmented = augment_dataset(&d, &aug, 1)?;
    let (table, edges) = build_table(&augmented, Preprocessing::None, &cfg)?;
    let (_, imputed) = table.impute();
    println!(
        "table: {} rows x {} features, {} columns with missing entries",
        table.len(),
        table.n_features(),
        imputed.columns.len()
    );
    println!("DWI variance edges: {:?}", edges.dwi);
    Ok(())
}
