//! Label-preserving augmentation: rotation, flips, scaling, elastic
//! deformation, shearing, Gaussian noise, blur, contrast and brightness.
//!
//! Geometric parameters are drawn once per triple and applied to all three
//! modalities so they stay co-registered. Photometric parameters are drawn
//! per modality.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::patchio::{Dataset, Patch, SampleTriple, AUGMENT_MARKER};
use crate::rng::{derive_seed, rng_for};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentSpec {
    pub rotation_deg: (f64, f64),
    pub allow_flips: bool,
    pub scale: (f64, f64),
    pub elastic_alpha: f64,
    pub elastic_sigma: f64,
    pub shear_deg: (f64, f64),
    pub noise_sigma: f64,
    pub blur_sigma: (f64, f64),
    pub contrast: (f64, f64),
    pub brightness: (f64, f64),
    pub per_sample_count: usize,
}

impl Default for AugmentSpec {
    fn default() -> Self {
        AugmentSpec {
            rotation_deg: (-15.0, 15.0),
            allow_flips: true,
            scale: (0.9, 1.1),
            elastic_alpha: 8.0,
            elastic_sigma: 3.0,
            shear_deg: (-8.0, 8.0),
            noise_sigma: 0.02,
            blur_sigma: (0.0, 1.0),
            contrast: (0.8, 1.2),
            brightness: (-0.1, 0.1),
            per_sample_count: 39,
        }
    }
}

impl AugmentSpec {
    /// A spec whose every transform is the identity.
    pub fn identity() -> Self {
        AugmentSpec {
            rotation_deg: (0.0, 0.0),
            allow_flips: false,
            scale: (1.0, 1.0),
            elastic_alpha: 0.0,
            elastic_sigma: 0.0,
            shear_deg: (0.0, 0.0),
            noise_sigma: 0.0,
            blur_sigma: (0.0, 0.0),
            contrast: (1.0, 1.0),
            brightness: (0.0, 0.0),
            per_sample_count: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("rotation_deg", self.rotation_deg),
            ("scale", self.scale),
            ("shear_deg", self.shear_deg),
            ("blur_sigma", self.blur_sigma),
            ("contrast", self.contrast),
            ("brightness", self.brightness),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("{name} range ({lo}, {hi}) is not ordered")));
            }
        }
        if self.scale.0 <= 0.0 {
            return Err(Error::Config("scale must be positive".into()));
        }
        if self.shear_deg.0 <= -90.0 || self.shear_deg.1 >= 90.0 {
            return Err(Error::Config("shear must lie strictly within ±90°".into()));
        }
        for (name, v) in [
            ("elastic_alpha", self.elastic_alpha),
            ("elastic_sigma", self.elastic_sigma),
            ("noise_sigma", self.noise_sigma),
            ("blur_sigma", self.blur_sigma.0),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a non-negative number")));
            }
        }
        Ok(())
    }
}

/// Geometric part of one augmentation, shared by all modalities of a triple.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub rotation_rad: f64,
    pub flip_horizontal: bool,
    pub flip_vertical: bool,
    pub scale: f64,
    pub shear_rad: f64,
    /// Per-pixel (row, col) displacement added to source coordinates.
    pub displacement: Option<(Grid, Grid)>,
}

impl Geometry {
    pub fn identity() -> Self {
        Geometry {
            rotation_rad: 0.0,
            flip_horizontal: false,
            flip_vertical: false,
            scale: 1.0,
            shear_rad: 0.0,
            displacement: None,
        }
    }

    fn draw(spec: &AugmentSpec, width: usize, height: usize, rng: &mut ChaCha8Rng) -> Self {
        let rotation_rad = draw_in(rng, spec.rotation_deg).to_radians();
        let (flip_horizontal, flip_vertical) = if spec.allow_flips {
            (rng.random_bool(0.5), rng.random_bool(0.5))
        } else {
            (false, false)
        };
        let scale = draw_in(rng, spec.scale);
        let shear_rad = draw_in(rng, spec.shear_deg).to_radians();
        let displacement = (spec.elastic_alpha > 0.0).then(|| {
            let mut field = || {
                let raw = Grid::from_fn(width, height, |_, _| rng.random_range(-1.0..=1.0));
                raw.gaussian_blur(spec.elastic_sigma)
                    .map(|v| v * spec.elastic_alpha)
            };
            let dr = field();
            let dc = field();
            (dr, dc)
        });
        Geometry {
            rotation_rad,
            flip_horizontal,
            flip_vertical,
            scale,
            shear_rad,
            displacement,
        }
    }
}

fn draw_in(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Resamples `g` under `geo`: flips, then the inverse of
/// rotation·shear·scale about the patch centre, then the elastic
/// displacement. Bilinear with mirrored borders.
pub fn warp(g: &Grid, geo: &Geometry) -> Grid {
    let (w, h) = (g.width(), g.height());
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;

    let (s, c) = geo.rotation_rad.sin_cos();
    let t = geo.shear_rad.tan();
    // forward = R · [[1, t], [0, 1]] · scale, acting on (x, y)
    let m = [
        [c * geo.scale, (c * t - s) * geo.scale],
        [s * geo.scale, (s * t + c) * geo.scale],
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let inv = [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ];

    Grid::from_fn(w, h, |r, col| {
        let mut x = col as f64 - cx;
        let mut y = r as f64 - cy;
        if geo.flip_horizontal {
            x = -x;
        }
        if geo.flip_vertical {
            y = -y;
        }
        let mut sx = inv[0][0] * x + inv[0][1] * y + cx;
        let mut sy = inv[1][0] * x + inv[1][1] * y + cy;
        if let Some((dr, dc)) = &geo.displacement {
            sy += dr.get(r, col);
            sx += dc.get(r, col);
        }
        g.bilinear_reflect(sy, sx)
    })
}

fn photometric(g: Grid, spec: &AugmentSpec, rng: &mut ChaCha8Rng) -> Grid {
    let gain = draw_in(rng, spec.contrast);
    let offset = draw_in(rng, spec.brightness);
    let blur = draw_in(rng, spec.blur_sigma);
    let mean = g.mean();
    let mut out = g.map(|v| (v - mean) * gain + mean + offset).gaussian_blur(blur);
    if spec.noise_sigma > 0.0 {
        let normal = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
        let noisy = out.data().iter().map(|v| v + normal.sample(rng)).collect();
        out = Grid::new(out.width(), out.height(), noisy).expect("same shape");
    }
    out.map(|v| v.clamp(0.0, 1.0))
}

/// Draws one transform chain from `spec` and applies it to the triple.
pub fn augment_triple(s: &SampleTriple, spec: &AugmentSpec, seed: u64) -> Result<SampleTriple> {
    let mut geo_rng = rng_for(seed, &[0]);
    let geo = Geometry::draw(spec, s.t2w.width(), s.t2w.height(), &mut geo_rng);
    let child_id = format!("{}{AUGMENT_MARKER}{seed:016x}", s.sample_id());
    s.map_patches(|p| {
        let mut rng = rng_for(seed, &[1, p.modality.index() as u64]);
        let pixels = photometric(warp(p.pixels(), &geo), spec, &mut rng);
        Patch::new(pixels, p.modality, &p.patient_id, &child_id, p.label)
    })
}

/// Appends `spec.per_sample_count` augmented children after the originals.
/// Child `j` of sample `i` uses seed `derive_seed(seed, [i, j])`.
pub fn augment_dataset(d: &Dataset, spec: &AugmentSpec, seed: u64) -> Result<Dataset> {
    spec.validate()?;
    let children: Vec<Vec<SampleTriple>> = d
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            (0..spec.per_sample_count)
                .map(|j| augment_triple(s, spec, derive_seed(seed, &[i as u64, j as u64])))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut samples = d.samples.clone();
    samples.extend(children.into_iter().flatten());
    Dataset::new(d.name.clone(), samples)
}
