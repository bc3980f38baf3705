#![allow(dead_code)]

use cptlab_core::corpus::{compress_luma, Corpus, QualityVariant};
use cptlab_core::jpeg::EncoderOptions;
use cptlab_core::scene::{generate_scene, DatasetSpec};
use cptlab_core::QualityFactor;

pub fn q(v: u8) -> QualityFactor {
    QualityFactor::try_from(v).unwrap()
}

/// `n` scenes of `side`×`side` pixels split 3:1:1.
pub fn small_spec(n: usize, side: usize, heads: (u32, u32)) -> DatasetSpec {
    DatasetSpec {
        scene_count: n,
        width: side,
        height: side,
        count_range: heads,
        split_fractions: [0.6, 0.2, 0.2],
        ..DatasetSpec::default()
    }
}

pub fn corpus(spec: &DatasetSpec, qfs: &[u8]) -> Corpus {
    let splits = spec.split_assignment();
    let scenes: Vec<_> = (0..spec.scene_count).map(|i| generate_scene(spec, i).unwrap()).collect();
    let mut c = Corpus::new(spec.width, spec.height, 4);
    for s in &scenes {
        c.push_truth(s.index, splits[s.index], s.annotations.len(), &s.density).unwrap();
    }
    for &v in qfs {
        let mut var = QualityVariant { luma: vec![], bytes: vec![] };
        for s in &scenes {
            let (n, l) = compress_luma(&s.image, q(v), &EncoderOptions::default()).unwrap();
            var.bytes.push(n);
            var.luma.push(l);
        }
        c.insert_variant(q(v), var).unwrap();
    }
    c
}
