use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Dataset, Label, Modality, Patch, SampleTriple};
use crate::error::{Error, Result};
use crate::grid::Grid;

const PATCH_MAGIC: &[u8; 4] = b"TKP1";
const HEADER_LEN: usize = 8;

pub const MANIFEST_HEADER: [&str; 6] = [
    "sample_id",
    "patient_id",
    "label",
    "t2w_path",
    "adc_path",
    "dwi_path",
];

/// Writes a grid as `TKP1`, u16 width, u16 height (little endian), then
/// row-major little-endian f32 pixels.
pub fn write_patch_file(path: &Path, grid: &Grid) -> Result<()> {
    let (w, h) = (grid.width(), grid.height());
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::Range(format!("patch {w}x{h} too large for file format")));
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * w * h);
    buf.extend_from_slice(PATCH_MAGIC);
    buf.extend_from_slice(&(w as u16).to_le_bytes());
    buf.extend_from_slice(&(h as u16).to_le_bytes());
    for &v in grid.data() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_patch_file(path: &Path) -> Result<Grid> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != PATCH_MAGIC {
        return Err(Error::Parse(format!(
            "{}: not a TKP1 patch file",
            path.display()
        )));
    }
    let w = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let h = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 4 * w * h {
        return Err(Error::Parse(format!(
            "{}: expected {} pixel bytes for {w}x{h}, found {}",
            path.display(),
            4 * w * h,
            body.len()
        )));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Grid::new(w, h, data)
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    sample_id: String,
    patient_id: String,
    label: String,
    t2w_path: String,
    adc_path: String,
    dwi_path: String,
}

/// Loads a dataset from a manifest CSV. Patch paths are relative to the
/// manifest's directory.
pub fn load_manifest(path: &Path) -> Result<Dataset> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    })?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != MANIFEST_HEADER {
        return Err(Error::Parse(format!(
            "{}: manifest header must be {}, found {}",
            path.display(),
            MANIFEST_HEADER.join(","),
            header.join(",")
        )));
    }

    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for row in reader.deserialize::<ManifestRow>() {
        let row = row?;
        let label = Label::from_code(&row.label)
            .map_err(|e| Error::Parse(format!("sample {}: {e}", row.sample_id)))?;
        if !seen.insert(row.sample_id.clone()) {
            return Err(Error::Integrity(format!(
                "duplicate sample_id {} in {}",
                row.sample_id,
                path.display()
            )));
        }
        let load = |rel: &str, m: Modality| -> Result<Patch> {
            let file = base.join(rel);
            let grid = read_patch_file(&file).map_err(|e| Error::Load {
                sample_id: row.sample_id.clone(),
                reason: format!("{m} patch: {e}"),
            })?;
            Patch::new(grid, m, &row.patient_id, &row.sample_id, label)
        };
        samples.push(SampleTriple::new(
            load(&row.t2w_path, Modality::T2w)?,
            load(&row.adc_path, Modality::Adc)?,
            load(&row.dwi_path, Modality::Dwi)?,
        )?);
    }

    let name = base
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    Dataset::new(name, samples)
}

fn file_stem_for(index: usize, sample_id: &str) -> String {
    let safe: String = sample_id
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{index:05}_{safe}")
}

/// Writes every patch under `dir/patches/` plus `dir/manifest.csv`, returning
/// the manifest path.
pub fn save_dataset(d: &Dataset, dir: &Path) -> Result<PathBuf> {
    let patch_dir = dir.join("patches");
    fs::create_dir_all(&patch_dir).map_err(|e| Error::io(&patch_dir, e))?;
    let manifest = dir.join("manifest.csv");
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        for (i, s) in d.samples.iter().enumerate() {
            let stem = file_stem_for(i, s.sample_id());
            let mut rel = Vec::with_capacity(3);
            for p in s.patches() {
                let name = format!("patches/{stem}_{}.tkp", p.modality.tag());
                write_patch_file(&dir.join(&name), p.pixels())?;
                rel.push(name);
            }
            w.serialize(ManifestRow {
                sample_id: s.sample_id().to_owned(),
                patient_id: s.patient_id().to_owned(),
                label: s.label().code().to_string(),
                t2w_path: rel[0].clone(),
                adc_path: rel[1].clone(),
                dwi_path: rel[2].clone(),
            })?;
        }
        if d.samples.is_empty() {
            w.write_record(MANIFEST_HEADER)?;
        }
        w.flush().map_err(|e| Error::io(&manifest, e))?;
    }
    let mut f = fs::File::create(&manifest).map_err(|e| Error::io(&manifest, e))?;
    f.write_all(&out).map_err(|e| Error::io(&manifest, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(id: &str, label: Label, v: f64) -> SampleTriple {
        let g = Grid::from_fn(4, 4, |r, c| (v + 0.01 * (r * 4 + c) as f64).min(1.0));
        SampleTriple::from_grids([g.clone(), g.map(|x| x * 0.5), g.map(|x| 1.0 - x)], "pat", id, label)
            .unwrap()
    }

    #[test]
    fn round_trip_dataset() {
        let dir = tempfile::tempdir().unwrap();
        let d = Dataset::new(
            "x",
            vec![triple("a", Label::Negative, 0.1), triple("b", Label::Positive, 0.7)],
        )
        .unwrap();
        let m = save_dataset(&d, dir.path()).unwrap();
        let back = load_manifest(&m).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.samples, d.samples);
    }

    #[test]
    fn empty_manifest_loads_but_is_not_trainable() {
        let dir = tempfile::tempdir().unwrap();
        let m = save_dataset(&Dataset::default(), dir.path()).unwrap();
        let d = load_manifest(&m).unwrap();
        assert!(d.is_empty());
        assert!(d.require_trainable().is_err());
    }

    #[test]
    fn missing_modality_file_names_sample() {
        let dir = tempfile::tempdir().unwrap();
        let d = Dataset::new("x", vec![triple("lesion-7", Label::Negative, 0.1)]).unwrap();
        let m = save_dataset(&d, dir.path()).unwrap();
        fs::remove_file(dir.path().join("patches/00000_lesion-7_adc.tkp")).unwrap();
        match load_manifest(&m) {
            Err(Error::Load { sample_id, reason }) => {
                assert_eq!(sample_id, "lesion-7");
                assert!(reason.contains("ADC"));
            }
            other => panic!("expected load error, got {other:?}"),
        }
    }

    #[test]
    fn bad_label_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let d = Dataset::new("x", vec![triple("a", Label::Negative, 0.1)]).unwrap();
        let m = save_dataset(&d, dir.path()).unwrap();
        let text = fs::read_to_string(&m).unwrap();
        let row = text.lines().nth(1).unwrap().to_owned();

        fs::write(&m, format!("{text}{row}\n")).unwrap();
        assert!(matches!(load_manifest(&m), Err(Error::Integrity(_))));

        fs::write(&m, text.replace("a,pat,0", "a,pat,2")).unwrap();
        assert!(matches!(load_manifest(&m), Err(Error::Parse(_))));
    }

    #[test]
    fn patch_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("p.tkp");
        write_patch_file(&f, &Grid::from_rows(&[&[0.0, 0.5, 1.0]])).unwrap();
        let bytes = fs::read(&f).unwrap();
        assert_eq!(&bytes[..8], b"TKP1\x03\x00\x01\x00");
        assert_eq!(&bytes[12..16], &0.5f32.to_le_bytes());
        fs::write(&f, &bytes[..10]).unwrap();
        assert!(read_patch_file(&f).is_err());
    }
}
