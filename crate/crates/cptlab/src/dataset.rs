//! Dataset materialization and corpus loading.

use crate::config::parse_pairs;
use crate::error::{LabError, Result};
use crate::formats::{
    format_annotations, parse_annotations, read_file, read_ppm, write_file, encode_ppm, Manifest, ManifestRow,
};
use crate::pool::parallel_map;
use cptlab_core::corpus::{compress_luma, Corpus, QualityVariant};
use cptlab_core::jpeg::{decode_jpeg, encode_jpeg_with, EncoderOptions};
use cptlab_core::scene::{density_from_annotations, generate_scene, DatasetSpec, Scene};
use cptlab_core::QualityFactor;
use std::path::{Path, PathBuf};

pub fn scene_id(index: usize) -> String {
    format!("scene_{index:04}")
}

pub fn original_path(index: usize) -> PathBuf {
    PathBuf::from("originals").join(format!("{}.ppm", scene_id(index)))
}

pub fn annotation_path(scene_id: &str) -> PathBuf {
    PathBuf::from("annotations").join(format!("{scene_id}.txt"))
}

pub fn jpeg_path(index: usize, qf: QualityFactor) -> PathBuf {
    PathBuf::from("jpeg")
        .join(format!("q{:03}", qf.get()))
        .join(format!("{}.jpg", scene_id(index)))
}

/// Writes originals, annotations and one JPEG per scene and quality under
/// `out_dir`, then `manifest.csv`. Returns the manifest.
pub fn materialize_dataset(
    spec: &DatasetSpec,
    out_dir: &Path,
    qfs: &[QualityFactor],
    encoder: &EncoderOptions,
    jobs: usize,
) -> Result<Manifest> {
    spec.validate()?;
    let splits = spec.split_assignment();
    let indices: Vec<usize> = (0..spec.scene_count).collect();
    let per_scene = parallel_map(&indices, jobs, |_, &i| -> Result<Vec<ManifestRow>> {
        let scene = generate_scene(spec, i)?;
        let id = scene_id(i);
        let heads = scene.annotations.len();
        let row = |qf, path: PathBuf, bytes: usize| ManifestRow {
            scene_id: id.clone(),
            split: splits[i],
            qf,
            path,
            bytes: bytes as u64,
            head_count: heads,
        };
        let mut rows = Vec::with_capacity(qfs.len() + 1);
        let ppm = encode_ppm(&scene.image);
        write_file(&out_dir.join(original_path(i)), &ppm)?;
        rows.push(row(None, original_path(i), ppm.len()));
        write_file(
            &out_dir.join(annotation_path(&id)),
            format_annotations(&scene.annotations).as_bytes(),
        )?;
        for &q in qfs {
            let bits = encode_jpeg_with(&scene.image, q, encoder)?;
            write_file(&out_dir.join(jpeg_path(i, q)), &bits)?;
            rows.push(row(Some(q), jpeg_path(i, q), bits.len()));
        }
        Ok(rows)
    });
    let mut rows = Vec::new();
    for r in per_scene {
        rows.extend(r?);
    }
    let manifest = Manifest { rows };
    manifest.write(&out_dir.join("manifest.csv"))?;
    Ok(manifest)
}

fn generate_all(spec: &DatasetSpec, jobs: usize) -> Result<Vec<Scene>> {
    let indices: Vec<usize> = (0..spec.scene_count).collect();
    parallel_map(&indices, jobs, |_, &i| generate_scene(spec, i))
        .into_iter()
        .map(|r| r.map_err(LabError::from))
        .collect()
}

/// Generates the dataset in memory and decodes it at every quality in `qfs`.
pub fn build_corpus(
    spec: &DatasetSpec,
    factor: usize,
    qfs: &[QualityFactor],
    encoder: &EncoderOptions,
    jobs: usize,
) -> Result<Corpus> {
    spec.validate()?;
    let splits = spec.split_assignment();
    let scenes = generate_all(spec, jobs)?;
    let mut corpus = Corpus::new(spec.width, spec.height, factor);
    for s in &scenes {
        corpus.push_truth(s.index, splits[s.index], s.annotations.len(), &s.density)?;
    }
    for &q in qfs {
        if corpus.has_quality(q) {
            continue;
        }
        let encoded = parallel_map(&scenes, jobs, |_, s| compress_luma(&s.image, q, encoder));
        let mut v = QualityVariant {
            luma: Vec::with_capacity(scenes.len()),
            bytes: Vec::with_capacity(scenes.len()),
        };
        for e in encoded {
            let (n, l) = e?;
            v.bytes.push(n);
            v.luma.push(l);
        }
        corpus.insert_variant(q, v)?;
    }
    Ok(corpus)
}

/// Reads `sigma` from the `config.txt` that `gen` writes beside a manifest.
pub fn manifest_sigma(manifest: &Path) -> Result<Option<f64>> {
    let cfg = manifest.parent().unwrap_or(Path::new(".")).join("config.txt");
    if !cfg.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&cfg).map_err(LabError::io(&cfg))?;
    let pairs = parse_pairs(&text).map_err(|(line, m)| LabError::format(&cfg, line, m))?;
    for (k, v, line) in pairs {
        if k == "sigma" {
            return v
                .parse()
                .map(Some)
                .map_err(|_| LabError::format(&cfg, line, "bad sigma"));
        }
    }
    Ok(None)
}

/// Loads a materialized dataset: ground truth from the annotation files and
/// decoded luma from the stored JPEGs at each quality in `qfs`.
pub fn load_corpus(manifest_path: &Path, factor: usize, qfs: &[QualityFactor], sigma: f64, jobs: usize) -> Result<Corpus> {
    let manifest = Manifest::read(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut originals: Vec<&ManifestRow> = manifest.rows.iter().filter(|r| r.qf.is_none()).collect();
    originals.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
    let first = originals
        .first()
        .ok_or_else(|| LabError::format(manifest_path, 1, "manifest lists no original images"))?;
    let probe = read_ppm(&dir.join(&first.path))?;
    let (w, h) = (probe.width(), probe.height());

    let truths = parallel_map(&originals, jobs, |_, r| -> Result<_> {
        let p = dir.join(annotation_path(&r.scene_id));
        let text = String::from_utf8(read_file(&p)?).map_err(|_| LabError::format(&p, 1, "not UTF-8"))?;
        let heads = parse_annotations(&text, &p)?;
        if heads.len() != r.head_count {
            return Err(LabError::format(&p, 1, "head count disagrees with the manifest"));
        }
        Ok(density_from_annotations(&heads, w, h, sigma)?)
    });
    let mut corpus = Corpus::new(w, h, factor);
    for (i, (r, d)) in originals.iter().zip(truths).enumerate() {
        corpus.push_truth(i, r.split, r.head_count, &d?)?;
    }
    for &q in qfs {
        let rows: Vec<&ManifestRow> = originals
            .iter()
            .map(|o| {
                manifest
                    .rows
                    .iter()
                    .find(|r| r.qf == Some(q) && r.scene_id == o.scene_id)
                    .ok_or(LabError::Corpus(cptlab_core::corpus::CorpusError::MissingQuality(q.get())))
            })
            .collect::<Result<_>>()?;
        let decoded = parallel_map(&rows, jobs, |_, r| -> Result<(usize, Vec<u8>)> {
            let p = dir.join(&r.path);
            let bits = read_file(&p)?;
            if bits.len() as u64 != r.bytes {
                return Err(LabError::format(&p, 1, "file size disagrees with the manifest"));
            }
            let img = decode_jpeg(&bits).map_err(|source| LabError::Decode { path: p.clone(), source })?;
            Ok((bits.len(), img.luma()))
        });
        let mut v = QualityVariant {
            luma: Vec::new(),
            bytes: Vec::new(),
        };
        for d in decoded {
            let (n, l) = d?;
            v.bytes.push(n);
            v.luma.push(l);
        }
        corpus.insert_variant(q, v)?;
    }
    Ok(corpus)
}
