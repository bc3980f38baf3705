//! Reverse-mode gradients against central finite differences of an
//! independent `f64` forward pass.

use cptlab_core::net::{backward, Architecture, LayerSpec, ModelState, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Act {
    c: usize,
    h: usize,
    w: usize,
    v: Vec<f64>,
}

/// Loss and the sign pattern of every ReLU input.
fn oracle(arch: &Architecture, params: &[Vec<f64>], input: &Act, target: &[f64]) -> (f64, Vec<bool>) {
    let mut x = Act { c: input.c, h: input.h, w: input.w, v: input.v.clone() };
    let mut mask = Vec::new();
    let mut p = 0;
    for layer in arch.layers() {
        x = match *layer {
            LayerSpec::Conv { kernel, in_ch, out_ch, stride } => {
                let (w, b) = (&params[p], &params[p + 1]);
                p += 2;
                let pad = (kernel / 2) as isize;
                let (oh, ow) = ((x.h - 1) / stride + 1, (x.w - 1) / stride + 1);
                let mut out = vec![0.0; out_ch * oh * ow];
                for o in 0..out_ch {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut s = b[o];
                            for i in 0..in_ch {
                                for ky in 0..kernel {
                                    for kx in 0..kernel {
                                        let iy = (oy * stride) as isize + ky as isize - pad;
                                        let ix = (ox * stride) as isize + kx as isize - pad;
                                        if iy < 0 || ix < 0 || iy >= x.h as isize || ix >= x.w as isize {
                                            continue;
                                        }
                                        s += w[((o * in_ch + i) * kernel + ky) * kernel + kx]
                                            * x.v[(i * x.h + iy as usize) * x.w + ix as usize];
                                    }
                                }
                            }
                            out[(o * oh + oy) * ow + ox] = s;
                        }
                    }
                }
                Act { c: out_ch, h: oh, w: ow, v: out }
            }
            LayerSpec::Relu => {
                mask.extend(x.v.iter().map(|&v| v > 0.0));
                Act { v: x.v.iter().map(|&v| v.max(0.0)).collect(), ..x }
            }
            LayerSpec::AvgPool2 => {
                let (oh, ow) = (x.h / 2, x.w / 2);
                let mut out = vec![0.0; x.c * oh * ow];
                for c in 0..x.c {
                    for y in 0..oh {
                        for xx in 0..ow {
                            let at = |dy: usize, dx: usize| x.v[(c * x.h + 2 * y + dy) * x.w + 2 * xx + dx];
                            out[(c * oh + y) * ow + xx] = (at(0, 0) + at(0, 1) + at(1, 0) + at(1, 1)) / 4.0;
                        }
                    }
                }
                Act { c: x.c, h: oh, w: ow, v: out }
            }
        };
    }
    let l = x.v.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / target.len() as f64;
    (l, mask)
}

pub struct Outcome {
    /// Samples with a nonzero gradient.
    pub checked: usize,
    pub zero: usize,
    pub skipped: usize,
    pub worst: f64,
}

pub fn check(model: &ModelState, side: usize, per_tensor: usize, seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let luma: Vec<u8> = (0..side * side).map(|_| rng.gen()).collect();
    let input = Tensor::from_luma(side, side, &luma);
    let f = model.arch.downsample_factor();
    let target: Vec<f32> = (0..(side / f) * (side / f)).map(|_| rng.gen_range(0.0..0.3)).collect();

    let (_, grads) = backward(model, &input, &target, 1.0).unwrap();
    let act = Act { c: 1, h: side, w: side, v: input.data.iter().map(|&v| v as f64).collect() };
    let target64: Vec<f64> = target.iter().map(|&v| v as f64).collect();
    let base: Vec<Vec<f64>> = model.params.iter().map(|p| p.value.iter().map(|&v| v as f64).collect()).collect();
    let (_, mask0) = oracle(&model.arch, &base, &act, &target64);

    let h = 1e-3;
    let mut out = Outcome { checked: 0, zero: 0, skipped: 0, worst: 0.0 };
    for (t, tensor) in base.iter().enumerate() {
        let mut picks: Vec<usize> = (0..tensor.len()).collect();
        for i in 0..picks.len() {
            let j = rng.gen_range(i..picks.len());
            picks.swap(i, j);
        }
        for &k in picks.iter().take(per_tensor) {
            let mut plus = base.clone();
            plus[t][k] += h;
            let mut minus = base.clone();
            minus[t][k] -= h;
            let (lp, mp) = oracle(&model.arch, &plus, &act, &target64);
            let (lm, mm) = oracle(&model.arch, &minus, &act, &target64);
            if mp != mask0 || mm != mask0 {
                // A ReLU changed state inside the stencil.
                out.skipped += 1;
                continue;
            }
            let numeric = (lp - lm) / (2.0 * h);
            let analytic = grads.tensors[t][k] as f64;
            let scale = numeric.abs().max(analytic.abs());
            let rel = if scale == 0.0 { 0.0 } else { (numeric - analytic).abs() / scale };
            assert!(
                rel < 1e-4,
                "tensor {t} index {k}: analytic {analytic:e} numeric {numeric:e} relative error {rel:e}"
            );
            out.worst = out.worst.max(rel);
            if scale == 0.0 {
                out.zero += 1;
            } else {
                out.checked += 1;
            }
        }
    }
    out
}
