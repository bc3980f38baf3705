use super::{clamp_u8, round_half_away};

/// Forward RGB to YCbCr matrix (rows Y, Cb, Cr).
const FORWARD: [[f64; 3]; 3] = [
    [0.299, 0.587, 0.114],
    [-0.168935, -0.331665, 0.50059],
    [0.499813, -0.418531, -0.081282],
];

const INVERSE: [[f64; 3]; 3] = invert(FORWARD);

const CHROMA_OFFSET: f64 = 128.0;

const fn invert(m: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    [
        [
            c00 / det,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det,
        ],
        [
            c01 / det,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det,
        ],
        [
            c02 / det,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det,
        ],
    ]
}

#[inline]
fn apply(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

/// Converts one pixel to YCbCr with chroma stored offset by 128.
pub fn rgb_to_ycbcr(r: u8, g: u8, b: u8) -> (u8, u8, u8) {
    let [y, cb, cr] = apply(&FORWARD, [r as f64, g as f64, b as f64]);
    (
        clamp_u8(round_half_away(y)),
        clamp_u8(round_half_away(cb + CHROMA_OFFSET)),
        clamp_u8(round_half_away(cr + CHROMA_OFFSET)),
    )
}

/// Exact matrix inverse of [`rgb_to_ycbcr`] before rounding and clamping.
pub fn ycbcr_to_rgb(y: u8, cb: u8, cr: u8) -> (u8, u8, u8) {
    let [r, g, b] = apply(
        &INVERSE,
        [y as f64, cb as f64 - CHROMA_OFFSET, cr as f64 - CHROMA_OFFSET],
    );
    (
        clamp_u8(round_half_away(r)),
        clamp_u8(round_half_away(g)),
        clamp_u8(round_half_away(b)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_is_inverse() {
        for (i, row) in FORWARD.iter().enumerate() {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| row[k] * INVERSE[k][j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_pixels() {
        assert_eq!(rgb_to_ycbcr(0, 0, 0), (0, 128, 128));
        assert_eq!(rgb_to_ycbcr(255, 255, 255), (255, 128, 128));
        assert_eq!(rgb_to_ycbcr(255, 0, 0), (76, 85, 255));
        assert_eq!(ycbcr_to_rgb(0, 128, 128), (0, 0, 0));
        assert_eq!(ycbcr_to_rgb(255, 128, 128), (255, 255, 255));
    }
}
