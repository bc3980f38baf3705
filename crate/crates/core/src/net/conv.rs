//! Convolution as im2col followed by a matrix product.

use alloc::vec;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy)]
pub(super) struct ConvShape {
    pub kernel: usize,
    pub in_ch: usize,
    pub out_ch: usize,
    pub stride: usize,
    pub in_h: usize,
    pub in_w: usize,
}

impl ConvShape {
    pub fn pad(&self) -> usize {
        self.kernel / 2
    }

    pub fn out_h(&self) -> usize {
        (self.in_h - 1) / self.stride + 1
    }

    pub fn out_w(&self) -> usize {
        (self.in_w - 1) / self.stride + 1
    }

    /// Rows of the column matrix: one per `(in_ch, ky, kx)`.
    fn col_rows(&self) -> usize {
        self.in_ch * self.kernel * self.kernel
    }

    fn col_cols(&self) -> usize {
        self.out_h() * self.out_w()
    }

    /// Output range `[lo, hi)` along one axis for which `o * stride + d`
    /// stays in `[0, n)`.
    fn valid(&self, n_out: usize, n_in: usize, d: isize) -> (usize, usize) {
        let s = self.stride as isize;
        let lo = if d < 0 { ((-d) + s - 1) / s } else { 0 };
        let hi = ((n_in as isize - 1 - d).div_euclid(s) + 1).clamp(0, n_out as isize);
        let lo = (lo as usize).min(hi as usize);
        (lo, hi as usize)
    }
}

/// `C (m×n) = A (m×k) · B (k×n) + beta·C`, with explicit row/column strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f32],
    (rsa, csa): (usize, usize),
    b: &[f32],
    (rsb, csb): (usize, usize),
    beta: f32,
    c: &mut [f32],
    rsc: usize,
) {
    debug_assert!(a.len() > (m - 1) * rsa + (k - 1) * csa);
    debug_assert!(b.len() > (k - 1) * rsb + (n - 1) * csb);
    debug_assert!(c.len() >= (m - 1) * rsc + n);
    // SAFETY: the slices cover every element addressed by the given shapes
    // and strides (checked above in debug builds, guaranteed by callers).
    unsafe {
        matrixmultiply::sgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            1,
        );
    }
}

fn im2col(s: &ConvShape, input: &[f32]) -> Vec<f32> {
    let (oh, ow) = (s.out_h(), s.out_w());
    let n = oh * ow;
    let pad = s.pad() as isize;
    let mut col = vec![0.0f32; s.col_rows() * n];
    for ic in 0..s.in_ch {
        let src = &input[ic * s.in_h * s.in_w..(ic + 1) * s.in_h * s.in_w];
        for ky in 0..s.kernel {
            for kx in 0..s.kernel {
                let row = (ic * s.kernel + ky) * s.kernel + kx;
                let dst = &mut col[row * n..(row + 1) * n];
                let (dy, dx) = (ky as isize - pad, kx as isize - pad);
                let (y0, y1) = s.valid(oh, s.in_h, dy);
                let (x0, x1) = s.valid(ow, s.in_w, dx);
                for oy in y0..y1 {
                    let sy = (oy * s.stride) as isize + dy;
                    let srow = &src[sy as usize * s.in_w..(sy as usize + 1) * s.in_w];
                    let drow = &mut dst[oy * ow..(oy + 1) * ow];
                    if s.stride == 1 {
                        let sx = (x0 as isize + dx) as usize;
                        drow[x0..x1].copy_from_slice(&srow[sx..sx + (x1 - x0)]);
                    } else {
                        for ox in x0..x1 {
                            drow[ox] = srow[((ox * s.stride) as isize + dx) as usize];
                        }
                    }
                }
            }
        }
    }
    col
}

/// Adds every column-matrix entry back onto the input position it was
/// copied from.
fn col2im_add(s: &ConvShape, col: &[f32], dinput: &mut [f32]) {
    let (oh, ow) = (s.out_h(), s.out_w());
    let n = oh * ow;
    let pad = s.pad() as isize;
    for ic in 0..s.in_ch {
        let dst = &mut dinput[ic * s.in_h * s.in_w..(ic + 1) * s.in_h * s.in_w];
        for ky in 0..s.kernel {
            for kx in 0..s.kernel {
                let row = (ic * s.kernel + ky) * s.kernel + kx;
                let src = &col[row * n..(row + 1) * n];
                let (dy, dx) = (ky as isize - pad, kx as isize - pad);
                let (y0, y1) = s.valid(oh, s.in_h, dy);
                let (x0, x1) = s.valid(ow, s.in_w, dx);
                for oy in y0..y1 {
                    let sy = ((oy * s.stride) as isize + dy) as usize;
                    let drow = &mut dst[sy * s.in_w..(sy + 1) * s.in_w];
                    let srow = &src[oy * ow..(oy + 1) * ow];
                    if s.stride == 1 {
                        let sx = (x0 as isize + dx) as usize;
                        for (d, v) in drow[sx..sx + (x1 - x0)].iter_mut().zip(&srow[x0..x1]) {
                            *d += v;
                        }
                    } else {
                        for ox in x0..x1 {
                            drow[((ox * s.stride) as isize + dx) as usize] += srow[ox];
                        }
                    }
                }
            }
        }
    }
}

pub(super) fn forward(s: &ConvShape, input: &[f32], weight: &[f32], bias: &[f32], out: &mut [f32]) {
    let (k, n) = (s.col_rows(), s.col_cols());
    for (oc, dst) in out.chunks_exact_mut(n).enumerate() {
        dst.fill(bias[oc]);
    }
    let col = im2col(s, input);
    gemm(s.out_ch, k, n, weight, (k, 1), &col, (n, 1), 1.0, out, n);
}

/// Accumulates weight and bias gradients and, when `dinput` is given, adds
/// the input gradient to it.
pub(super) fn backward(
    s: &ConvShape,
    input: &[f32],
    weight: &[f32],
    dout: &[f32],
    dweight: &mut [f32],
    dbias: &mut [f32],
    dinput: Option<&mut [f32]>,
) {
    let (k, n) = (s.col_rows(), s.col_cols());
    for (oc, g) in dout.chunks_exact(n).enumerate() {
        dbias[oc] += g.iter().fold(0.0f32, |a, &b| a + b);
    }
    let col = im2col(s, input);
    // dW (oc×k) += dout (oc×n) · colᵀ (n×k)
    gemm(s.out_ch, n, k, dout, (n, 1), &col, (1, n), 1.0, dweight, k);
    if let Some(dinput) = dinput {
        // dcol (k×n) = Wᵀ (k×oc) · dout (oc×n)
        let mut dcol = col;
        gemm(k, s.out_ch, n, weight, (1, k), dout, (n, 1), 0.0, &mut dcol, n);
        col2im_add(s, &dcol, dinput);
    }
}
