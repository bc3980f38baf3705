//! On-disk formats: binary PPM, annotation text files, the dataset manifest
//! and checkpoint files.

use crate::error::{LabError, Result};
use cptlab_core::jpeg::{ColorSpace, PlanarImage};
use cptlab_core::net::{checkpoint_from_bytes, checkpoint_to_bytes, Architecture, ModelState};
use cptlab_core::scene::{HeadAnnotation, Split};
use cptlab_core::QualityFactor;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(LabError::io(dir))?;
    }
    fs::write(path, bytes).map_err(LabError::io(path))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(LabError::io(path))
}

/// Binary `P6` PPM with maxval 255.
pub fn encode_ppm(image: &PlanarImage) -> Vec<u8> {
    assert_eq!(image.color_space(), ColorSpace::Rgb, "PPM holds RGB images");
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(&image.to_rgb_interleaved());
    out
}

pub fn decode_ppm(bytes: &[u8], path: &Path) -> Result<PlanarImage> {
    let bad = |m: &str| LabError::format(path, 1, m);
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated PPM header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("non-ASCII PPM header"))?);
    }
    if fields[0] != "P6" {
        return Err(bad("not a binary PPM (P6)"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad number in PPM header"));
    let (w, h, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    pos += 1;
    let need = w * h * 3;
    if bytes.len() < pos + need {
        return Err(bad("PPM pixel data truncated"));
    }
    PlanarImage::from_rgb_interleaved(w, h, &bytes[pos..pos + need]).map_err(|e| bad(&e.to_string()))
}

pub fn read_ppm(path: &Path) -> Result<PlanarImage> {
    decode_ppm(&read_file(path)?, path)
}

/// `count=<N>` then one `<x> <y>` line per head.
pub fn format_annotations(heads: &[HeadAnnotation]) -> String {
    let mut s = format!("count={}\n", heads.len());
    for h in heads {
        writeln!(s, "{} {}", h.x, h.y).unwrap();
    }
    s
}

pub fn parse_annotations(text: &str, path: &Path) -> Result<Vec<HeadAnnotation>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| LabError::format(path, 1, "empty annotation file"))?;
    let count: usize = header
        .strip_prefix("count=")
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| LabError::format(path, 1, "expected count=<N>"))?;
    let mut out = Vec::with_capacity(count);
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace().map(str::parse::<f64>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => out.push(HeadAnnotation { x, y }),
            _ => return Err(LabError::format(path, i + 1, "expected two decimal coordinates")),
        }
    }
    if out.len() != count {
        return Err(LabError::format(path, 1, format!("header says {count} heads, file has {}", out.len())));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub scene_id: String,
    pub split: Split,
    /// `None` for the lossless original.
    pub qf: Option<QualityFactor>,
    /// Relative to the manifest's directory.
    pub path: PathBuf,
    pub bytes: u64,
    pub head_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
}

pub const MANIFEST_HEADER: [&str; 6] = ["scene_id", "split", "qf", "path", "bytes", "head_count"];

impl Manifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(MANIFEST_HEADER).map_err(LabError::csv(path))?;
        for r in &self.rows {
            let qf = r.qf.map_or_else(|| "orig".to_string(), |q| q.to_string());
            let p = r.path.to_string_lossy().replace('\\', "/");
            w.write_record([
                r.scene_id.as_str(),
                r.split.as_str(),
                &qf,
                &p,
                &r.bytes.to_string(),
                &r.head_count.to_string(),
            ])
            .map_err(LabError::csv(path))?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::io(path)(e.into_error()))?;
        write_file(path, &bytes)
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let bytes = read_file(path)?;
        let mut r = csv::Reader::from_reader(bytes.as_slice());
        let header = r.headers().map_err(LabError::csv(path))?.clone();
        if header.iter().ne(MANIFEST_HEADER) {
            return Err(LabError::format(path, 1, "unexpected manifest header"));
        }
        let mut rows = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(LabError::csv(path))?;
            let line = i + 2;
            let bad = |m: &str| LabError::format(path, line, m);
            let qf = match &rec[2] {
                "orig" => None,
                q => Some(
                    q.parse::<i64>()
                        .ok()
                        .and_then(|v| QualityFactor::new(v).ok())
                        .ok_or_else(|| bad("qf must be 1..=100 or orig"))?,
                ),
            };
            rows.push(ManifestRow {
                scene_id: rec[0].to_string(),
                split: Split::parse(&rec[1]).ok_or_else(|| bad("unknown split"))?,
                qf,
                path: PathBuf::from(&rec[3]),
                bytes: rec[4].parse().map_err(|_| bad("bad byte count"))?,
                head_count: rec[5].parse().map_err(|_| bad("bad head count"))?,
            });
        }
        Ok(Manifest { rows })
    }

    /// Mean byte size of the rows of `split` at `qf`.
    pub fn avg_encoded_size(&self, qf: QualityFactor, split: Split) -> Option<f64> {
        let sizes: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.qf == Some(qf) && r.split == split)
            .map(|r| r.bytes as f64)
            .collect();
        (!sizes.is_empty()).then(|| sizes.iter().sum::<f64>() / sizes.len() as f64)
    }
}

pub fn save_checkpoint(model: &ModelState, path: &Path) -> Result<()> {
    write_file(path, &checkpoint_to_bytes(model))
}

pub fn load_checkpoint(path: &Path, expected: Option<&Architecture>) -> Result<ModelState> {
    checkpoint_from_bytes(&read_file(path)?, expected).map_err(|source| LabError::Checkpoint {
        path: path.to_path_buf(),
        source,
    })
}
