//! Generates a small synthetic dataset, writes it to disk and reads it back.
//!
//! `cargo run --example synthetic_dataset -- /tmp/texture-data`

use texturekit::patchio::{load_manifest, Modality};
use texturekit::synth::{synth, ClassEffect, SyntheticSpec};

fn main() -> texturekit::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synthetic-data".into());
    let spec = SyntheticSpec {
        n_patients: 10,
        class_effect: ClassEffect::TextureShift,
        ..SyntheticSpec::default()
    };
    let manifest = synth(&spec, out.as_ref())?;
    let d = load_manifest(&manifest)?;
    println!("{} samples from {} patients in {}", d.len(), d.patients().len(), manifest.display());
    for s in d.samples.iter().take(4) {
        let dwi = s.patch(Modality::Dwi).pixels();
        println!("{} label {} DWI mean {:.3}", s.sample_id(), s.label().code(), dwi.mean());
    }
    Ok(())
}
