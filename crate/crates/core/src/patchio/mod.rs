//! Patch and dataset types, intensity preprocessing, and the on-disk format.

mod io;

pub use io::{load_manifest, read_patch_file, save_dataset, write_patch_file, MANIFEST_HEADER};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Marker inserted between a parent sample id and the augmentation seed.
pub const AUGMENT_MARKER: &str = "~aug";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    T2w,
    Adc,
    Dwi,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::T2w, Modality::Adc, Modality::Dwi];

    /// Tag used in feature names.
    pub fn tag(self) -> &'static str {
        match self {
            Modality::T2w => "t2-tra",
            Modality::Adc => "adc",
            Modality::Dwi => "dwi_c-1400",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::T2w => "T2W",
            Modality::Adc => "ADC",
            Modality::Dwi => "DWI",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_code(code: &str) -> Result<Self> {
        match code.trim() {
            "0" => Ok(Label::Negative),
            "1" => Ok(Label::Positive),
            other => Err(Error::Parse(format!("label must be 0 or 1, got {other:?}"))),
        }
    }

    pub fn code(self) -> u8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

/// One 2D intensity patch of one modality.
///
/// Pixels live in `[0, 1]` and are held at single precision, the same
/// precision as the patch file format, so save/load round-trips exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pixels: Grid,
    pub modality: Modality,
    pub patient_id: String,
    pub sample_id: String,
    pub label: Label,
    pub augmented: bool,
}

impl Patch {
    pub fn new(
        pixels: Grid,
        modality: Modality,
        patient_id: impl Into<String>,
        sample_id: impl Into<String>,
        label: Label,
    ) -> Result<Self> {
        let sample_id = sample_id.into();
        let pixels = to_unit_precision(pixels, &sample_id)?;
        Ok(Patch {
            augmented: sample_id.contains(AUGMENT_MARKER),
            pixels,
            modality,
            patient_id: patient_id.into(),
            sample_id,
            label,
        })
    }

    pub fn pixels(&self) -> &Grid {
        &self.pixels
    }

    pub fn width(&self) -> usize {
        self.pixels.width()
    }

    pub fn height(&self) -> usize {
        self.pixels.height()
    }

    /// Same metadata, new pixels.
    pub fn with_pixels(&self, pixels: Grid) -> Result<Self> {
        Ok(Patch {
            pixels: to_unit_precision(pixels, &self.sample_id)?,
            ..self.clone()
        })
    }
}

fn to_unit_precision(pixels: Grid, sample_id: &str) -> Result<Grid> {
    if let Some(bad) = pixels
        .data()
        .iter()
        .find(|v| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::Range(format!(
            "pixel value {bad} outside [0, 1] in sample {sample_id}"
        )));
    }
    Ok(pixels.map(|v| v as f32 as f64))
}

/// The three co-registered modality patches of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleTriple {
    pub t2w: Patch,
    pub adc: Patch,
    pub dwi: Patch,
}

impl SampleTriple {
    pub fn new(t2w: Patch, adc: Patch, dwi: Patch) -> Result<Self> {
        let triple = SampleTriple { t2w, adc, dwi };
        triple.validate()?;
        Ok(triple)
    }

    /// Builds a triple from three grids sharing the given metadata.
    pub fn from_grids(
        grids: [Grid; 3],
        patient_id: &str,
        sample_id: &str,
        label: Label,
    ) -> Result<Self> {
        let [t2w, adc, dwi] = grids;
        SampleTriple::new(
            Patch::new(t2w, Modality::T2w, patient_id, sample_id, label)?,
            Patch::new(adc, Modality::Adc, patient_id, sample_id, label)?,
            Patch::new(dwi, Modality::Dwi, patient_id, sample_id, label)?,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let expected = [Modality::T2w, Modality::Adc, Modality::Dwi];
        for (p, m) in self.patches().into_iter().zip(expected) {
            if p.modality != m {
                return Err(Error::Integrity(format!(
                    "sample {}: expected {m} patch, found {}",
                    self.t2w.sample_id, p.modality
                )));
            }
            if p.label != self.t2w.label
                || p.patient_id != self.t2w.patient_id
                || p.sample_id != self.t2w.sample_id
            {
                return Err(Error::Integrity(format!(
                    "sample {}: modality patches disagree on metadata",
                    self.t2w.sample_id
                )));
            }
            if p.width() != self.t2w.width() || p.height() != self.t2w.height() {
                return Err(Error::Integrity(format!(
                    "sample {}: modality patches differ in size",
                    self.t2w.sample_id
                )));
            }
        }
        Ok(())
    }

    pub fn patches(&self) -> [&Patch; 3] {
        [&self.t2w, &self.adc, &self.dwi]
    }

    pub fn patch(&self, m: Modality) -> &Patch {
        match m {
            Modality::T2w => &self.t2w,
            Modality::Adc => &self.adc,
            Modality::Dwi => &self.dwi,
        }
    }

    pub fn map_patches(&self, mut f: impl FnMut(&Patch) -> Result<Patch>) -> Result<Self> {
        SampleTriple::new(f(&self.t2w)?, f(&self.adc)?, f(&self.dwi)?)
    }

    pub fn sample_id(&self) -> &str {
        &self.t2w.sample_id
    }

    pub fn patient_id(&self) -> &str {
        &self.t2w.patient_id
    }

    pub fn label(&self) -> Label {
        self.t2w.label
    }

    pub fn augmented(&self) -> bool {
        self.t2w.augmented
    }

    /// Sample id of the original this triple was derived from.
    pub fn parent_id(&self) -> &str {
        parent_id(self.sample_id())
    }
}

/// Strips augmentation suffixes from a sample id.
pub fn parent_id(sample_id: &str) -> &str {
    sample_id
        .find(AUGMENT_MARKER)
        .map_or(sample_id, |i| &sample_id[..i])
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub name: String,
    pub samples: Vec<SampleTriple>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, samples: Vec<SampleTriple>) -> Result<Self> {
        let d = Dataset {
            name: name.into(),
            samples,
        };
        d.check_unique_ids()?;
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for s in &self.samples {
            if !seen.insert(s.sample_id()) {
                return Err(Error::Integrity(format!(
                    "duplicate sample_id {}",
                    s.sample_id()
                )));
            }
        }
        Ok(())
    }

    /// Training operations need both classes present.
    pub fn require_trainable(&self) -> Result<()> {
        let pos = self.samples.iter().filter(|s| s.label().is_positive()).count();
        if pos == 0 || pos == self.samples.len() {
            return Err(Error::InvalidData(format!(
                "dataset {:?} needs at least one sample of each class ({} samples, {pos} positive)",
                self.name,
                self.samples.len()
            )));
        }
        Ok(())
    }

    /// Distinct patient ids in first-appearance order.
    pub fn patients(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.samples
            .iter()
            .map(|s| s.patient_id())
            .filter(|p| seen.insert(*p))
            .collect()
    }

    pub fn resized(&self, target: usize) -> Result<Dataset> {
        let samples = self
            .samples
            .iter()
            .map(|s| s.map_patches(|p| resize_patch(p, target)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            name: self.name.clone(),
            samples,
        })
    }
}

/// Maps raw integer intensities of the given bit depth onto `[0, 1]`.
pub fn rescale_intensity(raw: &[u32], width: usize, bit_depth: u32) -> Result<Grid> {
    if !(8..=16).contains(&bit_depth) {
        return Err(Error::Config(format!(
            "bit depth must be within 8..=16, got {bit_depth}"
        )));
    }
    let max = (1u32 << bit_depth) - 1;
    if let Some(v) = raw.iter().find(|&&v| v > max) {
        return Err(Error::Range(format!(
            "raw value {v} exceeds {max} for {bit_depth}-bit data"
        )));
    }
    if width == 0 || raw.len() % width != 0 {
        return Err(Error::InvalidData(format!(
            "{} raw values do not form rows of width {width}",
            raw.len()
        )));
    }
    let scale = max as f64;
    Grid::new(
        width,
        raw.len() / width,
        raw.iter().map(|&v| v as f64 / scale).collect(),
    )
}

/// Bilinear resize to `target`×`target` with half-pixel-centred sampling.
pub fn resize_patch(p: &Patch, target: usize) -> Result<Patch> {
    if target != 16 && target != 32 {
        return Err(Error::Config(format!(
            "patch size must be 16 or 32, got {target}"
        )));
    }
    if p.width() == target && p.height() == target {
        return Ok(p.clone());
    }
    p.with_pixels(resize_grid(p.pixels(), target, target))
}

pub(crate) fn resize_grid(g: &Grid, out_w: usize, out_h: usize) -> Grid {
    let sy = g.height() as f64 / out_h as f64;
    let sx = g.width() as f64 / out_w as f64;
    Grid::from_fn(out_w, out_h, |r, c| {
        let src_r = (r as f64 + 0.5) * sy - 0.5;
        let src_c = (c as f64 + 0.5) * sx - 0.5;
        g.bilinear(src_r, src_c).clamp(0.0, 1.0)
    })
}

/// Min-max rescale to `[0, 1]`; constant patches map to zeros.
pub fn normalize(p: &Patch) -> Patch {
    p.with_pixels(normalize_grid(p.pixels()))
        .expect("normalized pixels are in [0, 1]")
}

pub(crate) fn normalize_grid(g: &Grid) -> Grid {
    let (lo, hi) = g.min_max();
    if hi <= lo {
        return g.map(|_| 0.0);
    }
    let span = hi - lo;
    g.map(|v| ((v - lo) / span).clamp(0.0, 1.0))
}

/// Zero mean, unit population variance. The result is not clamped.
pub fn standardize(p: &Patch) -> Grid {
    standardize_grid(p.pixels())
}

pub(crate) fn standardize_grid(g: &Grid) -> Grid {
    let n = g.data().len() as f64;
    let mean = g.mean();
    let var = g.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 || !std.is_finite() {
        return g.map(|_| 0.0);
    }
    g.map(|v| (v - mean) / std)
}

/// Intensity preprocessing applied before feature extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preprocessing {
    None,
    Normalize,
    Standardize,
    /// Normalization followed by standardization.
    Both,
}

impl Preprocessing {
    pub const ALL: [Preprocessing; 4] = [
        Preprocessing::None,
        Preprocessing::Normalize,
        Preprocessing::Standardize,
        Preprocessing::Both,
    ];

    pub fn apply(self, p: &Patch) -> Grid {
        match self {
            Preprocessing::None => p.pixels().clone(),
            Preprocessing::Normalize => normalize_grid(p.pixels()),
            Preprocessing::Standardize => standardize_grid(p.pixels()),
            Preprocessing::Both => standardize_grid(&normalize_grid(p.pixels())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preprocessing::None => "none",
            Preprocessing::Normalize => "normalize",
            Preprocessing::Standardize => "standardize",
            Preprocessing::Both => "both",
        }
    }
}

impl std::str::FromStr for Preprocessing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preprocessing::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preprocessing variant {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn patch(rows: &[&[f64]]) -> Patch {
        Patch::new(Grid::from_rows(rows), Modality::T2w, "p", "s", Label::Negative).unwrap()
    }

    #[test]
    fn rescale_examples() {
        let g = rescale_intensity(&[4095, 0, 2048, 1], 2, 12).unwrap();
        assert_eq!(g.get(0, 0), 1.0);
        assert_eq!(g.get(0, 1), 0.0);
        assert!((g.get(1, 0) - 2048.0 / 4095.0).abs() < 1e-15);
        assert!((g.get(1, 0) - 0.500122).abs() < 1e-6);
    }

    #[test]
    fn rescale_rejects_out_of_range() {
        assert!(matches!(
            rescale_intensity(&[4096], 1, 12),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            rescale_intensity(&[1], 1, 7),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn resize_constant_and_identity() {
        let p = Patch::new(Grid::filled(8, 8, 0.3), Modality::Adc, "p", "s", Label::Positive)
            .unwrap();
        let r = resize_patch(&p, 16).unwrap();
        assert_eq!((r.width(), r.height()), (16, 16));
        let v = 0.3f32 as f64;
        assert!(r.pixels().data().iter().all(|&x| (x - v).abs() < 1e-7));

        let g = Grid::from_fn(16, 16, |r, c| ((r * 7 + c * 3) % 11) as f64 / 10.0);
        let p16 = Patch::new(g, Modality::Adc, "p", "s", Label::Positive).unwrap();
        assert_eq!(resize_patch(&p16, 16).unwrap(), p16);
        assert!(matches!(resize_patch(&p16, 24), Err(Error::Config(_))));
    }

    #[test]
    fn resize_matches_direct_bilinear_formula() {
        let g = Grid::from_rows(&[&[0.0, 1.0], &[0.0, 1.0]]);
        let out = resize_grid(&g, 4, 4);
        // Direct evaluation: source column (c + 0.5) * 0.5 - 0.5 clamped to [0, 1],
        // and the value is that fractional column since rows are identical.
        for r in 0..4 {
            for c in 0..4 {
                let src: f64 = ((c as f64 + 0.5) * 0.5 - 0.5).clamp(0.0, 1.0);
                assert!((out.get(r, c) - src).abs() < 1e-15);
            }
            for c in 1..4 {
                assert!(out.get(r, c) >= out.get(r, c - 1));
            }
        }
    }

    #[test]
    fn normalize_examples() {
        let n = normalize(&patch(&[&[0.2, 0.4], &[0.6, 0.8]]));
        let expect = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (a, b) in n.pixels().data().iter().zip(expect) {
            assert!((a - b).abs() < 1e-6);
        }
        let c = normalize(&patch(&[&[0.5, 0.5], &[0.5, 0.5]]));
        assert!(c.pixels().data().iter().all(|&v| v == 0.0));
        let spanning = patch(&[&[0.0, 0.25], &[0.5, 1.0]]);
        assert_eq!(normalize(&spanning), spanning);
    }

    #[test]
    fn standardize_examples() {
        let s = standardize(&patch(&[&[0.0, 1.0], &[0.0, 1.0]]));
        assert_eq!(s.data(), &[-1.0, 1.0, -1.0, 1.0]);
        let c = standardize(&patch(&[&[0.3, 0.3], &[0.3, 0.3]]));
        assert!(c.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn patch_rejects_out_of_unit_range() {
        let g = Grid::from_rows(&[&[0.0, 1.5]]);
        assert!(matches!(
            Patch::new(g, Modality::T2w, "p", "s", Label::Negative),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn triple_requires_matching_metadata() {
        let g = Grid::filled(4, 4, 0.5);
        let a = Patch::new(g.clone(), Modality::T2w, "p", "s", Label::Negative).unwrap();
        let b = Patch::new(g.clone(), Modality::Adc, "p", "s", Label::Positive).unwrap();
        let c = Patch::new(g, Modality::Dwi, "p", "s", Label::Negative).unwrap();
        assert!(matches!(
            SampleTriple::new(a, b, c),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn parent_id_strips_augmentation_suffix() {
        assert_eq!(parent_id("s01~aug00000000000000ff"), "s01");
        assert_eq!(parent_id("s01"), "s01");
    }

    fn unit_grid() -> impl Strategy<Value = Grid> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(0.0f64..=1.0, w * h)
                .prop_map(move |d| Grid::new(w, h, d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn rescale_is_monotone(a in 0u32..4096, b in 0u32..4096) {
            let g = rescale_intensity(&[a, b], 2, 12).unwrap();
            prop_assert_eq!(a <= b, g.get(0, 0) <= g.get(0, 1));
        }

        #[test]
        fn normalize_is_idempotent(g in unit_grid()) {
            let p = Patch::new(g, Modality::Dwi, "p", "s", Label::Negative).unwrap();
            let once = normalize(&p);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn resize_preserves_bounds(g in unit_grid(), big in any::<bool>()) {
            let p = Patch::new(g, Modality::Dwi, "p", "s", Label::Negative).unwrap();
            let (lo, hi) = p.pixels().min_max();
            let r = resize_patch(&p, if big { 32 } else { 16 }).unwrap();
            let (rlo, rhi) = r.pixels().min_max();
            prop_assert!(rlo >= lo - 1e-12 && rhi <= hi + 1e-12);
        }

        #[test]
        fn standardize_moments(g in unit_grid()) {
            let s = standardize_grid(&g);
            let n = s.data().len() as f64;
            let mean = s.mean();
            let var = s.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-12);
            prop_assert!(var == 0.0 || (var - 1.0).abs() < 1e-12);
        }
    }
}
