//! In-memory training corpus: per-scene ground truth plus decoded luma at
//! every quality factor that has been materialized.

use crate::jpeg::{decode_jpeg, encode_jpeg_with, DecodeError, EncodeError, EncoderOptions, PlanarImage, QualityFactor};
use crate::scene::{DensityMap, Split};
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("no images at quality {0} in the dataset")]
    MissingQuality(u8),
    #[error("dataset has no {0} scenes")]
    EmptySplit(&'static str),
    #[error("scene {index} is {width}x{height}, corpus expects {expected_w}x{expected_h}")]
    Dimensions {
        index: usize,
        width: usize,
        height: usize,
        expected_w: usize,
        expected_h: usize,
    },
    #[error("variant has {found} scenes, corpus has {expected}")]
    VariantSize { found: usize, expected: usize },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
}

/// Ground truth of one scene at network output resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneTruth {
    pub id: usize,
    pub split: Split,
    pub head_count: usize,
    /// Density box-summed to `out_width × out_height`.
    pub target: Vec<f32>,
}

/// Decoded luma and encoded byte size of every scene at one quality.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityVariant {
    pub luma: Vec<Vec<u8>>,
    pub bytes: Vec<usize>,
}

/// Encodes at `qf`, decodes, and returns `(encoded size, decoded luma)`.
pub fn compress_luma(
    image: &PlanarImage,
    qf: QualityFactor,
    options: &EncoderOptions,
) -> Result<(usize, Vec<u8>), CorpusError> {
    let bits = encode_jpeg_with(image, qf, options)?;
    let decoded = decode_jpeg(&bits)?;
    Ok((bits.len(), decoded.luma()))
}

#[derive(Debug, Clone)]
pub struct Corpus {
    width: usize,
    height: usize,
    factor: usize,
    truths: Vec<SceneTruth>,
    variants: BTreeMap<u8, QualityVariant>,
}

impl Corpus {
    /// `factor` is the network downsampling factor; both image sides must be
    /// divisible by it.
    pub fn new(width: usize, height: usize, factor: usize) -> Self {
        assert!(factor > 0 && width.is_multiple_of(factor) && height.is_multiple_of(factor), "sides must divide by factor");
        Corpus {
            width,
            height,
            factor,
            truths: Vec::new(),
            variants: BTreeMap::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn out_width(&self) -> usize {
        self.width / self.factor
    }

    pub fn out_height(&self) -> usize {
        self.height / self.factor
    }

    /// Adds a scene's ground truth; scenes must be pushed in id order before
    /// any variant is inserted.
    pub fn push_truth(&mut self, id: usize, split: Split, head_count: usize, density: &DensityMap) -> Result<(), CorpusError> {
        if density.width != self.width || density.height != self.height {
            return Err(CorpusError::Dimensions {
                index: id,
                width: density.width,
                height: density.height,
                expected_w: self.width,
                expected_h: self.height,
            });
        }
        assert!(self.variants.is_empty(), "truths must precede variants");
        let target = density.box_sum(self.factor).into_iter().map(|v| v as f32).collect();
        self.truths.push(SceneTruth {
            id,
            split,
            head_count,
            target,
        });
        Ok(())
    }

    pub fn insert_variant(&mut self, qf: QualityFactor, variant: QualityVariant) -> Result<(), CorpusError> {
        let n = self.truths.len();
        if variant.luma.len() != n || variant.bytes.len() != n {
            return Err(CorpusError::VariantSize {
                found: variant.luma.len().min(variant.bytes.len()),
                expected: n,
            });
        }
        for (i, l) in variant.luma.iter().enumerate() {
            if l.len() != self.width * self.height {
                return Err(CorpusError::Dimensions {
                    index: self.truths[i].id,
                    width: l.len(),
                    height: 1,
                    expected_w: self.width,
                    expected_h: self.height,
                });
            }
        }
        self.variants.insert(qf.get(), variant);
        Ok(())
    }

    pub fn has_quality(&self, qf: QualityFactor) -> bool {
        self.variants.contains_key(&qf.get())
    }

    pub fn qualities(&self) -> impl Iterator<Item = QualityFactor> + '_ {
        self.variants.keys().map(|&q| QualityFactor::try_from(q).expect("stored qualities are valid"))
    }

    pub fn variant(&self, qf: QualityFactor) -> Result<&QualityVariant, CorpusError> {
        self.variants.get(&qf.get()).ok_or(CorpusError::MissingQuality(qf.get()))
    }

    pub fn truths(&self) -> &[SceneTruth] {
        &self.truths
    }

    /// Positions (not ids) of the scenes in `split`, ascending.
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        (0..self.truths.len()).filter(|&i| self.truths[i].split == split).collect()
    }

    /// Mean encoded size in bytes over `split` at `qf`.
    pub fn avg_encoded_size(&self, qf: QualityFactor, split: Split) -> Result<f64, CorpusError> {
        let v = self.variant(qf)?;
        let idx = self.split_indices(split);
        if idx.is_empty() {
            return Err(CorpusError::EmptySplit(split.as_str()));
        }
        Ok(idx.iter().map(|&i| v.bytes[i] as f64).sum::<f64>() / idx.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{generate_scene, DatasetSpec};
    use alloc::vec;

    fn small() -> (DatasetSpec, Corpus) {
        let spec = DatasetSpec {
            scene_count: 6,
            width: 32,
            height: 32,
            count_range: (1, 4),
            split_fractions: [0.5, 0.25, 0.25],
            ..DatasetSpec::default()
        };
        let splits = spec.split_assignment();
        let mut c = Corpus::new(32, 32, 4);
        for i in 0..spec.scene_count {
            let s = generate_scene(&spec, i).unwrap();
            c.push_truth(i, splits[i], s.annotations.len(), &s.density).unwrap();
        }
        (spec, c)
    }

    #[test]
    fn targets_keep_mass() {
        let (_, c) = small();
        for t in c.truths() {
            assert_eq!(t.target.len(), 64);
            let sum: f64 = t.target.iter().map(|&v| v as f64).sum();
            assert!((sum - t.head_count as f64).abs() < 1e-4);
        }
    }

    #[test]
    fn missing_quality_is_an_error() {
        let (spec, mut c) = small();
        let q = QualityFactor::new(30).unwrap();
        assert_eq!(c.variant(q).unwrap_err(), CorpusError::MissingQuality(30));
        let mut v = QualityVariant {
            luma: vec![],
            bytes: vec![],
        };
        for i in 0..spec.scene_count {
            let s = generate_scene(&spec, i).unwrap();
            let (n, l) = compress_luma(&s.image, q, &EncoderOptions::default()).unwrap();
            v.bytes.push(n);
            v.luma.push(l);
        }
        c.insert_variant(q, v).unwrap();
        assert!(c.has_quality(q));
        assert!(c.avg_encoded_size(q, Split::Test).unwrap() > 0.0);
    }

    #[test]
    fn average_size_is_mean_of_split() {
        let mut c = Corpus::new(8, 8, 4);
        let d = DensityMap {
            width: 8,
            height: 8,
            values: vec![0.0; 64],
            sigma: 4.0,
        };
        c.push_truth(0, Split::Test, 0, &d).unwrap();
        c.push_truth(1, Split::Train, 0, &d).unwrap();
        let q = QualityFactor::new(50).unwrap();
        c.insert_variant(
            q,
            QualityVariant {
                luma: vec![vec![0; 64], vec![0; 64]],
                bytes: vec![1000, 7],
            },
        )
        .unwrap();
        assert_eq!(c.avg_encoded_size(q, Split::Test).unwrap(), 1000.0);
        assert_eq!(c.avg_encoded_size(q, Split::Val), Err(CorpusError::EmptySplit("val")));
    }
}
