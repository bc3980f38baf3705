use super::{clamp_u8, round_half_away, Block};

/// Orthonormal 1-D DCT-II basis: `BASIS[u][x] = c(u)/2 · cos((2x+1)uπ/16)`
/// with `c(0) = 1/√2`, `c(u) = 1` otherwise.
#[rustfmt::skip]
const BASIS: [[f64; 8]; 8] = [
    [0.3535533905932738, 0.3535533905932738, 0.3535533905932738, 0.3535533905932738, 0.3535533905932738, 0.3535533905932738, 0.3535533905932738, 0.3535533905932738],
    [0.4903926402016152, 0.4157348061512726, 0.27778511650980114, 0.09754516100806417, -0.0975451610080641, -0.277785116509801, -0.4157348061512727, -0.4903926402016152],
    [0.46193976625564337, 0.19134171618254492, -0.19134171618254486, -0.46193976625564337, -0.4619397662556434, -0.19134171618254517, 0.191341716182545, 0.46193976625564326],
    [0.4157348061512726, -0.0975451610080641, -0.4903926402016152, -0.2777851165098011, 0.2777851165098009, 0.4903926402016152, 0.09754516100806439, -0.41573480615127256],
    [0.3535533905932738, -0.35355339059327373, -0.35355339059327384, 0.3535533905932737, 0.35355339059327384, -0.35355339059327334, -0.35355339059327356, 0.3535533905932733],
    [0.27778511650980114, -0.4903926402016152, 0.09754516100806415, 0.41573480615127273, -0.41573480615127256, -0.09754516100806401, 0.4903926402016153, -0.27778511650980076],
    [0.19134171618254492, -0.4619397662556434, 0.46193976625564326, -0.19134171618254495, -0.19134171618254528, 0.46193976625564337, -0.4619397662556432, 0.19134171618254478],
    [0.09754516100806417, -0.2777851165098011, 0.41573480615127273, -0.4903926402016153, 0.4903926402016152, -0.4157348061512725, 0.27778511650980076, -0.09754516100806429],
];

const LEVEL_SHIFT: f64 = 128.0;

/// Forward 2-D DCT of a block of samples (`block[y*8 + x]`). The result is
/// indexed `[v*8 + u]`: row = vertical frequency, column = horizontal.
pub fn fdct_8x8(block: &Block<u8>, level_shift: bool) -> Block<f64> {
    let shift = if level_shift { LEVEL_SHIFT } else { 0.0 };
    // rows first: tmp[y][u] = Σx f[y][x]·B[u][x]
    let mut tmp = [0.0f64; 64];
    for y in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for x in 0..8 {
                acc += (block[y * 8 + x] as f64 - shift) * BASIS[u][x];
            }
            tmp[y * 8 + u] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for y in 0..8 {
                acc += tmp[y * 8 + u] * BASIS[v][y];
            }
            out[v * 8 + u] = acc;
        }
    }
    out
}

/// Inverse 2-D DCT without rounding or clamping.
pub fn idct_8x8_unclamped(coeffs: &Block<f64>, level_shift: bool) -> Block<f64> {
    let shift = if level_shift { LEVEL_SHIFT } else { 0.0 };
    let mut tmp = [0.0f64; 64];
    for y in 0..8 {
        for u in 0..8 {
            let mut acc = 0.0;
            for v in 0..8 {
                acc += coeffs[v * 8 + u] * BASIS[v][y];
            }
            tmp[y * 8 + u] = acc;
        }
    }
    let mut out = [0.0f64; 64];
    for y in 0..8 {
        for x in 0..8 {
            let mut acc = 0.0;
            for u in 0..8 {
                acc += tmp[y * 8 + u] * BASIS[u][x];
            }
            out[y * 8 + x] = acc + shift;
        }
    }
    out
}

pub fn idct_8x8(coeffs: &Block<f64>, level_shift: bool) -> Block<u8> {
    let raw = idct_8x8_unclamped(coeffs, level_shift);
    let mut out = [0u8; 64];
    for (o, r) in out.iter_mut().zip(raw.iter()) {
        *o = clamp_u8(round_half_away(*r));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_is_orthonormal() {
        for a in 0..8 {
            for b in 0..8 {
                let dot: f64 = (0..8).map(|x| BASIS[a][x] * BASIS[b][x]).sum();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((dot - expected).abs() < 1e-14, "{a} {b} {dot}");
            }
        }
    }

    #[test]
    fn flat_blocks() {
        let zero = fdct_8x8(&[128; 64], true);
        assert!(zero.iter().all(|c| c.abs() < 1e-12));
        let white = fdct_8x8(&[255; 64], true);
        assert!((white[0] - 1016.0).abs() < 1e-9);
        assert!(white[1..].iter().all(|c| c.abs() < 1e-9));

        assert_eq!(idct_8x8(&[0.0; 64], true), [128; 64]);
        let mut dc = [0.0; 64];
        dc[0] = 1016.0;
        assert_eq!(idct_8x8(&dc, true), [255; 64]);
    }
}
