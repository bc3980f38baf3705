mod common;

use common::q;
use cptlab_core::jpeg::{
    decode_jpeg, dequantize_block, encode_jpeg, fdct_8x8, idct_8x8, idct_8x8_unclamped, psnr, quant_table,
    quantize_block, rgb_to_ycbcr, scale_factor, ycbcr_to_rgb, zigzag_scan, zigzag_unscan, DecodeErrorKind, PlanarImage,
    TableMode, BASE_TABLE, ZIGZAG,
};
use cptlab_core::scene::{generate_scene, DatasetSpec};
use proptest::prelude::*;
use std::f64::consts::PI;

/// Annex K luminance table, row-major.
#[rustfmt::skip]
const ANNEX_K_LUMA: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
];

fn oracle_ycbcr(r: u8, g: u8, b: u8) -> [f64; 3] {
    let (r, g, b) = (r as f64, g as f64, b as f64);
    [
        0.299 * r + 0.587 * g + 0.114 * b,
        -0.168736 * r - 0.331264 * g + 0.5 * b + 128.0,
        0.5 * r - 0.418688 * g - 0.081312 * b + 128.0,
    ]
}

fn oracle_dct(block: &[f64; 64]) -> [f64; 64] {
    let c = |k: usize| if k == 0 { (0.125f64).sqrt() } else { 0.5 };
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut s = 0.0;
            for y in 0..8 {
                for x in 0..8 {
                    s += block[y * 8 + x]
                        * ((2 * x + 1) as f64 * u as f64 * PI / 16.0).cos()
                        * ((2 * y + 1) as f64 * v as f64 * PI / 16.0).cos();
                }
            }
            out[v * 8 + u] = c(u) * c(v) * s;
        }
    }
    out
}

/// Zigzag order generated by walking anti-diagonals.
fn oracle_zigzag() -> Vec<usize> {
    let mut out = Vec::new();
    for d in 0..15usize {
        let cells: Vec<(usize, usize)> = (0..8).filter_map(|r| d.checked_sub(r).filter(|&c| c < 8).map(|c| (r, c))).collect();
        if d % 2 == 0 {
            out.extend(cells.iter().rev().map(|&(r, c)| r * 8 + c));
        } else {
            out.extend(cells.iter().map(|&(r, c)| r * 8 + c));
        }
    }
    out
}

#[test]
fn colour_examples_match_the_matrix() {
    let cases = [((0, 0, 0), (0, 128, 128)), ((255, 255, 255), (255, 128, 128)), ((255, 0, 0), (76, 85, 255))];
    for ((r, g, b), expect) in cases {
        let got = rgb_to_ycbcr(r, g, b);
        let o = oracle_ycbcr(r, g, b).map(|v| v.round().clamp(0.0, 255.0) as i32);
        for (a, e) in [got.0, got.1, got.2].iter().zip(o) {
            assert!((*a as i32 - e).abs() <= 1);
        }
        assert_eq!(got, expect);
    }
    assert_eq!(ycbcr_to_rgb(0, 128, 128), (0, 0, 0));
    assert_eq!(ycbcr_to_rgb(255, 128, 128), (255, 255, 255));
}

#[test]
fn colour_round_trip_strided() {
    let mut worst = 0;
    for r in (0..=255u8).step_by(4) {
        for g in (0..=255u8).step_by(4) {
            for b in (0..=255u8).step_by(4) {
                let (y, cb, cr) = rgb_to_ycbcr(r, g, b);
                let (r2, g2, b2) = ycbcr_to_rgb(y, cb, cr);
                for (a, c) in [(r, r2), (g, g2), (b, b2)] {
                    worst = worst.max((a as i32 - c as i32).abs());
                }
            }
        }
    }
    assert!(worst <= 2, "worst channel error {worst}");
}

#[test]
fn quantization_anchors() {
    assert_eq!(BASE_TABLE, ANNEX_K_LUMA);
    assert_eq!(quant_table(q(50), &BASE_TABLE, TableMode::Baseline), ANNEX_K_LUMA);
    assert_eq!(scale_factor(q(1)), 5000);
    assert_eq!(scale_factor(q(50)), 100);
    assert_eq!(scale_factor(q(100)), 0);
    assert_eq!(quant_table(q(1), &BASE_TABLE, TableMode::Unclamped)[0], 800);
    assert_eq!(quant_table(q(1), &BASE_TABLE, TableMode::Baseline)[0], 255);
    assert!(quant_table(q(100), &BASE_TABLE, TableMode::Baseline).iter().all(|&v| v == 1));
}

#[test]
fn tables_follow_the_scaling_formula_and_coarsen_with_lower_quality() {
    for mode in [TableMode::Baseline, TableMode::Unclamped] {
        let tables: Vec<_> = (1..=100u8).map(|v| quant_table(q(v), &BASE_TABLE, mode)).collect();
        for (i, t) in tables.iter().enumerate() {
            let qf = i as u64 + 1;
            let s = if qf < 50 { 5000 / qf } else { 200 - 2 * qf };
            for (k, &entry) in t.iter().enumerate() {
                let raw = (s * ANNEX_K_LUMA[k] as u64 + 50) / 100;
                let expect = match mode {
                    TableMode::Baseline => raw.clamp(1, 255),
                    TableMode::Unclamped => raw.max(1),
                };
                assert_eq!(entry as u64, expect);
            }
        }
        for a in 0..100 {
            for b in a + 1..100 {
                assert!(tables[a].iter().zip(&tables[b]).all(|(x, y)| x >= y));
            }
        }
    }
}

#[test]
fn zigzag_matches_diagonal_walk() {
    assert_eq!(ZIGZAG.to_vec(), oracle_zigzag());
    let mut last = [0i32; 64];
    last[63] = 5;
    let seq = zigzag_scan(&last);
    assert!(seq[..63].iter().all(|&v| v == 0) && seq[63] == 5);
}

#[test]
fn dct_examples() {
    let c = fdct_8x8(&[128; 64], true);
    assert!(c.iter().all(|v| v.abs() < 1e-9));
    let c = fdct_8x8(&[255; 64], true);
    assert!((c[0] - 1016.0).abs() < 1e-9);
    assert!(c[1..].iter().all(|v| v.abs() < 1e-9));
    assert_eq!(idct_8x8(&c, true), [255; 64]);
    assert_eq!(idct_8x8(&[0.0; 64], true), [128; 64]);
}

#[test]
fn quantize_examples() {
    let mut d = [0.0; 64];
    assert_eq!(quantize_block(&d, &BASE_TABLE), [0; 64]);
    d[0] = 100.0;
    assert_eq!(quantize_block(&d, &BASE_TABLE)[0], 6);
    let same: [f64; 64] = BASE_TABLE.map(f64::from);
    assert_eq!(quantize_block(&same, &BASE_TABLE), [1; 64]);
    assert_eq!(dequantize_block(&[1; 64], &BASE_TABLE), same);
}

fn block_strategy() -> impl Strategy<Value = [u8; 64]> {
    proptest::collection::vec(any::<u8>(), 64).prop_map(|v| v.try_into().unwrap())
}

proptest! {
    #[test]
    fn dct_agrees_with_the_cosine_sum(block in block_strategy()) {
        let shifted: [f64; 64] = block.map(|v| v as f64 - 128.0);
        let fast = fdct_8x8(&block, true);
        let slow = oracle_dct(&shifted);
        for (a, b) in fast.iter().zip(slow) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        let back = idct_8x8_unclamped(&fast, true);
        for (a, &b) in back.iter().zip(&block) {
            prop_assert!((a - b as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn idct_is_linear(block in block_strategy(), a in -4.0f64..4.0) {
        let c = fdct_8x8(&block, false);
        let scaled = c.map(|v| v * a);
        let x = idct_8x8_unclamped(&c, false);
        let y = idct_8x8_unclamped(&scaled, false);
        for (u, v) in x.iter().zip(y) {
            prop_assert!((u * a - v).abs() < 1e-9);
        }
    }

    #[test]
    fn rounding_error_is_at_most_half_a_step(coeffs in proptest::collection::vec(-2048.0f64..2048.0, 64), qf in 1u8..=100) {
        let d: [f64; 64] = coeffs.try_into().unwrap();
        let t = quant_table(q(qf), &BASE_TABLE, TableMode::Baseline);
        let back = dequantize_block(&quantize_block(&d, &t), &t);
        for i in 0..64 {
            prop_assert!((back[i] - d[i]).abs() <= t[i] as f64 / 2.0 + 1e-9);
        }
    }

    #[test]
    fn zigzag_is_a_bijection(block in proptest::collection::vec(any::<i16>(), 64)) {
        let b: [i16; 64] = block.try_into().unwrap();
        prop_assert_eq!(zigzag_unscan(&zigzag_scan(&b)), b);
    }

    #[test]
    fn any_image_round_trips_at_any_quality(
        w in 8usize..40,
        h in 8usize..40,
        seed in any::<u64>(),
        qf in 1u8..=100,
    ) {
        let mut state = seed;
        let rgb: Vec<u8> = (0..w * h * 3)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (state >> 56) as u8
            })
            .collect();
        let img = PlanarImage::from_rgb_interleaved(w, h, &rgb).unwrap();
        let bits = encode_jpeg(&img, q(qf)).unwrap();
        prop_assert_eq!(&bits[..2], &[0xFF, 0xD8]);
        prop_assert_eq!(&bits[bits.len() - 2..], &[0xFF, 0xD9]);
        let out = decode_jpeg(&bits).unwrap();
        prop_assert_eq!((out.width(), out.height()), (w, h));
    }

    /// A flat grey block is a lone DC coefficient of `8·(v − 128)`, so the
    /// sample error is at most a sixteenth of the DC step plus rounding.
    /// That is within ±1 only while the step is at most 16.
    #[test]
    fn uniform_grey_survives(v in any::<u8>(), qf in 1u8..=100, w in 8usize..33, h in 8usize..33) {
        let img = PlanarImage::from_rgb_interleaved(w, h, &vec![v; w * h * 3]).unwrap();
        let out = decode_jpeg(&encode_jpeg(&img, q(qf)).unwrap()).unwrap();
        let step = quant_table(q(qf), &BASE_TABLE, TableMode::Baseline)[0] as f64;
        let bound = if step <= 16.0 { 1.0 } else { step / 16.0 + 0.5 };
        for p in out.to_rgb_interleaved() {
            prop_assert!((p as f64 - v as f64).abs() <= bound, "v {} got {} step {}", v, p, step);
        }
    }
}

fn default_scenes(n: usize) -> Vec<PlanarImage> {
    let spec = DatasetSpec::default();
    (0..n).map(|i| generate_scene(&spec, i).unwrap().image).collect()
}

#[test]
fn near_lossless_at_quality_100() {
    for img in default_scenes(20) {
        let out = decode_jpeg(&encode_jpeg(&img, q(100)).unwrap()).unwrap();
        let p = psnr(&img, &out);
        assert!(p >= 40.0, "psnr {p}");
    }
}

#[test]
fn reference_decoder_accepts_every_stream() {
    let imgs = default_scenes(3);
    for (i, img) in imgs.iter().enumerate() {
        for qf in [1u8, 5, 10, 25, 50, 75, 90, 100] {
            let bits = encode_jpeg(img, q(qf)).unwrap();
            let mut d = jpeg_decoder::Decoder::new(bits.as_slice());
            let pixels = d.decode().unwrap_or_else(|e| panic!("scene {i} qf {qf}: {e}"));
            let info = d.info().unwrap();
            assert_eq!((info.width as usize, info.height as usize), (img.width(), img.height()));
            assert_eq!(info.pixel_format, jpeg_decoder::PixelFormat::RGB24);
            let theirs = PlanarImage::from_rgb_interleaved(img.width(), img.height(), &pixels).unwrap();
            let ours = decode_jpeg(&bits).unwrap();
            // Upsampling and IDCT details differ between decoders.
            assert!(psnr(&ours, &theirs) > 30.0, "scene {i} qf {qf}");
        }
    }
}

#[test]
fn truncated_streams_error() {
    let img = &default_scenes(1)[0];
    let bits = encode_jpeg(img, q(50)).unwrap();
    let no_eoi = &bits[..bits.len() - 2];
    assert!(decode_jpeg(no_eoi).is_err());
    for cut in [0, 1, 2, 10, 100, 300, 600, bits.len() / 2, bits.len() - 1] {
        assert!(decode_jpeg(&bits[..cut]).is_err(), "cut at {cut}");
    }
    assert_eq!(decode_jpeg(b"nope").unwrap_err().kind, DecodeErrorKind::MissingSoi);
}

#[test]
fn sizes_shrink_along_the_master_curriculum() {
    let imgs = default_scenes(20);
    let mut prev = f64::INFINITY;
    for qf in [75u8, 60, 40, 30, 25, 20, 15, 10, 5, 1] {
        let avg = imgs.iter().map(|i| encode_jpeg(i, q(qf)).unwrap().len() as f64).sum::<f64>() / imgs.len() as f64;
        assert!(avg < prev, "qf {qf}: {avg} !< {prev}");
        prev = avg;
    }
}
