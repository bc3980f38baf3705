use super::{round_half_away, Block, QualityFactor};

/// Quantization divisors in row-major (not zigzag) order.
pub type QuantTable = [u16; 64];

/// Base luminance table; also used for chroma unless the standard chroma
/// table is requested.
#[rustfmt::skip]
pub const BASE_TABLE: QuantTable = [
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Annex K chrominance table.
#[rustfmt::skip]
pub const STANDARD_CHROMA_TABLE: QuantTable = [
    17, 18, 24, 47, 99, 99, 99, 99,
    18, 21, 26, 66, 99, 99, 99, 99,
    24, 26, 56, 99, 99, 99, 99, 99,
    47, 66, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
    99, 99, 99, 99, 99, 99, 99, 99,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TableMode {
    /// Entries clamped to [1, 255] so they fit an 8-bit DQT segment.
    #[default]
    Baseline,
    /// Only the lower bound of 1 is enforced.
    Unclamped,
}

/// Quality scaling factor: `5000 / qf` (integer division) below 50,
/// `200 - 2·qf` from 50 up.
pub fn scale_factor(qf: QualityFactor) -> u32 {
    let q = qf.get() as u32;
    if q < 50 {
        5000 / q
    } else {
        200 - 2 * q
    }
}

/// `floor((s·base + 50) / 100)`, at least 1, at most 255 in baseline mode.
pub fn quant_table(qf: QualityFactor, base: &QuantTable, mode: TableMode) -> QuantTable {
    let s = scale_factor(qf);
    let mut out = [0u16; 64];
    for (o, &b) in out.iter_mut().zip(base.iter()) {
        let t = (s * b as u32 + 50) / 100;
        let t = match mode {
            TableMode::Baseline => t.clamp(1, 255),
            TableMode::Unclamped => t.max(1),
        };
        *o = t as u16;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizationSpec {
    pub qf: QualityFactor,
    pub scale: u32,
    pub luma: QuantTable,
    pub chroma: QuantTable,
}

impl QuantizationSpec {
    pub fn new(qf: QualityFactor, mode: TableMode, chroma_base: &QuantTable) -> Self {
        QuantizationSpec {
            qf,
            scale: scale_factor(qf),
            luma: quant_table(qf, &BASE_TABLE, mode),
            chroma: quant_table(qf, chroma_base, mode),
        }
    }
}

pub fn quantize_block(coeffs: &Block<f64>, table: &QuantTable) -> Block<i32> {
    let mut out = [0i32; 64];
    for i in 0..64 {
        out[i] = round_half_away(coeffs[i] / table[i] as f64) as i32;
    }
    out
}

pub fn dequantize_block(q: &Block<i32>, table: &QuantTable) -> Block<f64> {
    let mut out = [0.0f64; 64];
    for i in 0..64 {
        out[i] = q[i] as f64 * table[i] as f64;
    }
    out
}
