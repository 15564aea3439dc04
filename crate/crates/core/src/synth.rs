//! Synthetic three-modality patch datasets with a controllable class effect.
//!
//! Negative samples are smoothed Gaussian noise around a per-modality base
//! intensity. Positive samples change either their first-order statistics,
//! their spatial correlation, or both.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::patchio::{save_dataset, Dataset, Label, Modality, SampleTriple};
use crate::rng::rng_for;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassEffect {
    /// Positive patches shift their mean and widen their spread.
    FirstOrderShift,
    /// Positive patches have longer-range neighbour correlation.
    TextureShift,
    /// A strong first-order shift with a milder texture change.
    Mixed,
}

impl FromStr for ClassEffect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "first_order_shift" => Ok(ClassEffect::FirstOrderShift),
            "texture_shift" => Ok(ClassEffect::TextureShift),
            "mixed" => Ok(ClassEffect::Mixed),
            _ => Err(Error::Config(format!("unknown class effect {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_patients: usize,
    pub samples_per_patient: usize,
    pub class_effect: ClassEffect,
    /// Standard deviation of white noise added after smoothing.
    pub noise_level: f64,
    pub patch_size: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_patients: 40,
            samples_per_patient: 2,
            class_effect: ClassEffect::Mixed,
            noise_level: 0.02,
            patch_size: 16,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_patients < 5 {
            return Err(Error::Config("synthetic data needs at least 5 patients".into()));
        }
        if self.samples_per_patient == 0 {
            return Err(Error::Config("samples_per_patient must be positive".into()));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(Error::Config("noise_level must be non-negative".into()));
        }
        if self.patch_size < 8 {
            return Err(Error::Config("patch_size must be at least 8".into()));
        }
        Ok(())
    }
}

/// Texture parameters for one modality and class.
struct Texture {
    mean: f64,
    spread: f64,
    smoothing: f64,
}

fn texture(m: Modality, positive: bool, effect: ClassEffect) -> Texture {
    // Base intensities loosely echo the modalities' relative brightness.
    let (mean, shift) = match m {
        Modality::T2w => (0.45, -0.15),
        Modality::Adc => (0.55, -0.20),
        Modality::Dwi => (0.35, 0.20),
    };
    let base = Texture {
        mean,
        spread: 0.07,
        smoothing: 1.0,
    };
    if !positive {
        return base;
    }
    match effect {
        ClassEffect::FirstOrderShift => Texture {
            mean: mean + shift,
            spread: 0.1,
            ..base
        },
        ClassEffect::TextureShift => Texture {
            smoothing: 2.2,
            ..base
        },
        ClassEffect::Mixed => Texture {
            mean: mean + shift,
            spread: 0.1,
            smoothing: 1.3,
        },
    }
}

fn patch(t: &Texture, size: usize, noise: f64, offset: f64, seed: u64, path: &[u64]) -> Grid {
    let mut rng = rng_for(seed, path);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let white = Grid::from_fn(size, size, |_, _| normal.sample(&mut rng));
    let field = white.gaussian_blur(t.smoothing);
    let (m, sd) = {
        let d = field.data();
        let m = d.iter().sum::<f64>() / d.len() as f64;
        let v = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / d.len() as f64;
        (m, v.sqrt().max(1e-12))
    };
    let fine = Grid::from_fn(size, size, |_, _| normal.sample(&mut rng));
    Grid::from_fn(size, size, |r, c| {
        let z = (field.get(r, c) - m) / sd;
        (t.mean + offset + t.spread * z + noise * fine.get(r, c)).clamp(0.0, 1.0)
    })
}

/// Builds the dataset in memory. Odd-numbered patients are positive.
pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut samples = Vec::with_capacity(spec.n_patients * spec.samples_per_patient);
    for p in 0..spec.n_patients {
        let positive = p % 2 == 1;
        let patient = format!("P{p:03}");
        let mut prng = rng_for(spec.seed, &[p as u64]);
        let offset_dist = Normal::new(0.0, 0.02).expect("valid normal");
        let offsets: Vec<f64> = Modality::ALL.iter().map(|_| offset_dist.sample(&mut prng)).collect();
        for s in 0..spec.samples_per_patient {
            let grids = Modality::ALL.map(|m| {
                let t = texture(m, positive, spec.class_effect);
                patch(
                    &t,
                    spec.patch_size,
                    spec.noise_level,
                    offsets[m.index()],
                    spec.seed,
                    &[p as u64, s as u64 + 1, m.index() as u64],
                )
            });
            samples.push(SampleTriple::from_grids(
                grids,
                &patient,
                &format!("{patient}-S{s}"),
                Label::from_bool(positive),
            )?);
        }
    }
    Dataset::new("synthetic", samples)
}

/// Generates and writes the dataset, returning the manifest path.
pub fn synth(spec: &SyntheticSpec, out_dir: &Path) -> Result<PathBuf> {
    let d = generate(spec)?;
    save_dataset(&d, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patchio::load_manifest;

    #[test]
    fn counts_and_balance() {
        let d = generate(&SyntheticSpec::default()).unwrap();
        assert_eq!(d.len(), 80);
        assert_eq!(d.patients().len(), 40);
        let pos = d.samples.iter().filter(|s| s.label().is_positive()).count();
        assert_eq!(pos, 40);
    }

    #[test]
    fn files_are_deterministic() {
        let spec = SyntheticSpec {
            n_patients: 6,
            ..SyntheticSpec::default()
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = synth(&spec, a.path()).unwrap();
        let mb = synth(&spec, b.path()).unwrap();
        assert_eq!(std::fs::read(&ma).unwrap(), std::fs::read(&mb).unwrap());
        for e in std::fs::read_dir(a.path().join("patches")).unwrap() {
            let e = e.unwrap();
            let other = b.path().join("patches").join(e.file_name());
            assert_eq!(std::fs::read(e.path()).unwrap(), std::fs::read(other).unwrap());
        }
        assert_eq!(load_manifest(&ma).unwrap().len(), 12);
    }

    #[test]
    fn first_order_effect_moves_the_mean() {
        let spec = SyntheticSpec {
            class_effect: ClassEffect::FirstOrderShift,
            n_patients: 10,
            ..SyntheticSpec::default()
        };
        let d = generate(&spec).unwrap();
        let mean_of = |pos: bool| {
            let v: Vec<f64> = d
                .samples
                .iter()
                .filter(|s| s.label().is_positive() == pos)
                .map(|s| s.patch(Modality::Dwi).pixels().mean())
                .collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert!(mean_of(true) - mean_of(false) > 0.15);
    }

    #[test]
    fn rejects_tiny_specs() {
        let spec = SyntheticSpec {
            n_patients: 4,
            ..SyntheticSpec::default()
        };
        assert!(generate(&spec).is_err());
        assert!("bogus".parse::<ClassEffect>().is_err());
        assert_eq!("texture-shift".parse::<ClassEffect>().unwrap(), ClassEffect::TextureShift);
    }
}
