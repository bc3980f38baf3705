//! Annex K Huffman tables, canonical code construction, and the bit-level
//! writer/reader for entropy-coded segments.

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanSpec {
    /// Number of codes of each length 1..=16.
    pub bits: [u8; 16],
    pub values: Vec<u8>,
}

pub const LUMA_DC_BITS: [u8; 16] = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
pub const CHROMA_DC_BITS: [u8; 16] = [0, 3, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0];
pub const DC_VALUES: [u8; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

pub const LUMA_AC_BITS: [u8; 16] = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d];
#[rustfmt::skip]
pub const LUMA_AC_VALUES: [u8; 162] = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xa1, 0x08, 0x23, 0x42, 0xb1, 0xc1, 0x15, 0x52, 0xd1, 0xf0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0a, 0x16, 0x17, 0x18, 0x19, 0x1a, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2a, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5, 0xa6, 0xa7,
    0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3, 0xc4, 0xc5,
    0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda, 0xe1, 0xe2,
    0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf1, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8,
    0xf9, 0xfa,
];

pub const CHROMA_AC_BITS: [u8; 16] = [0, 2, 1, 2, 4, 4, 3, 4, 7, 5, 4, 4, 0, 1, 2, 0x77];
#[rustfmt::skip]
pub const CHROMA_AC_VALUES: [u8; 162] = [
    0x00, 0x01, 0x02, 0x03, 0x11, 0x04, 0x05, 0x21, 0x31, 0x06, 0x12, 0x41, 0x51, 0x07, 0x61, 0x71,
    0x13, 0x22, 0x32, 0x81, 0x08, 0x14, 0x42, 0x91, 0xa1, 0xb1, 0xc1, 0x09, 0x23, 0x33, 0x52, 0xf0,
    0x15, 0x62, 0x72, 0xd1, 0x0a, 0x16, 0x24, 0x34, 0xe1, 0x25, 0xf1, 0x17, 0x18, 0x19, 0x1a, 0x26,
    0x27, 0x28, 0x29, 0x2a, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3a, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48,
    0x49, 0x4a, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5a, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68,
    0x69, 0x6a, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7a, 0x82, 0x83, 0x84, 0x85, 0x86, 0x87,
    0x88, 0x89, 0x8a, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9a, 0xa2, 0xa3, 0xa4, 0xa5,
    0xa6, 0xa7, 0xa8, 0xa9, 0xaa, 0xb2, 0xb3, 0xb4, 0xb5, 0xb6, 0xb7, 0xb8, 0xb9, 0xba, 0xc2, 0xc3,
    0xc4, 0xc5, 0xc6, 0xc7, 0xc8, 0xc9, 0xca, 0xd2, 0xd3, 0xd4, 0xd5, 0xd6, 0xd7, 0xd8, 0xd9, 0xda,
    0xe2, 0xe3, 0xe4, 0xe5, 0xe6, 0xe7, 0xe8, 0xe9, 0xea, 0xf2, 0xf3, 0xf4, 0xf5, 0xf6, 0xf7, 0xf8,
    0xf9, 0xfa,
];

impl HuffmanSpec {
    pub fn new(bits: [u8; 16], values: &[u8]) -> Self {
        HuffmanSpec {
            bits,
            values: values.to_vec(),
        }
    }

    pub fn luma_dc() -> Self {
        Self::new(LUMA_DC_BITS, &DC_VALUES)
    }

    pub fn luma_ac() -> Self {
        Self::new(LUMA_AC_BITS, &LUMA_AC_VALUES)
    }

    pub fn chroma_dc() -> Self {
        Self::new(CHROMA_DC_BITS, &DC_VALUES)
    }

    pub fn chroma_ac() -> Self {
        Self::new(CHROMA_AC_BITS, &CHROMA_AC_VALUES)
    }

    /// Canonical codes as `(length, code)` in value order of `self.values`.
    fn canonical_codes(&self) -> Vec<(u8, u16)> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut code = 0u32;
        for (len_minus_one, &count) in self.bits.iter().enumerate() {
            for _ in 0..count {
                out.push((len_minus_one as u8 + 1, code as u16));
                code += 1;
            }
            code <<= 1;
        }
        out
    }
}

/// Value → code lookup for the encoder.
#[derive(Debug, Clone)]
pub struct EncodeTable {
    codes: [(u8, u16); 256],
}

impl EncodeTable {
    pub fn new(spec: &HuffmanSpec) -> Self {
        let mut codes = [(0u8, 0u16); 256];
        for (&value, code) in spec.values.iter().zip(spec.canonical_codes()) {
            codes[value as usize] = code;
        }
        EncodeTable { codes }
    }

    #[inline]
    pub fn code(&self, value: u8) -> (u8, u16) {
        let c = self.codes[value as usize];
        debug_assert!(c.0 > 0, "symbol {value:#x} missing from Huffman table");
        c
    }
}

/// Canonical decoding tables (Annex F.2.2.3 layout).
#[derive(Debug, Clone)]
pub struct DecodeTable {
    max_code: [i32; 17],
    val_offset: [i32; 17],
    values: Vec<u8>,
}

impl DecodeTable {
    pub fn new(spec: &HuffmanSpec) -> Self {
        let mut max_code = [-1i32; 17];
        let mut val_offset = [0i32; 17];
        let mut code = 0i32;
        let mut k = 0i32;
        for len in 1..=16 {
            let count = spec.bits[len - 1] as i32;
            if count > 0 {
                val_offset[len] = k - code;
                code += count;
                k += count;
                max_code[len] = code - 1;
            }
            code <<= 1;
        }
        DecodeTable {
            max_code,
            val_offset,
            values: spec.values.clone(),
        }
    }

    /// Decodes one symbol, or `None` on an invalid code or exhausted input.
    pub fn decode(&self, reader: &mut BitReader<'_>) -> Option<u8> {
        let mut code = 0i32;
        for len in 1..=16 {
            code = (code << 1) | reader.bit()? as i32;
            if code <= self.max_code[len] {
                let idx = (code + self.val_offset[len]) as usize;
                return self.values.get(idx).copied();
            }
        }
        None
    }
}

/// MSB-first bit writer with 0xFF byte stuffing.
#[derive(Debug, Default)]
pub struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u8,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn write(&mut self, bits: u16, len: u8) {
        debug_assert!(len <= 16);
        if len == 0 {
            return;
        }
        self.acc = (self.acc << len) | (bits as u32 & ((1u32 << len) - 1));
        self.nbits += len;
        while self.nbits >= 8 {
            let byte = (self.acc >> (self.nbits - 8)) as u8;
            self.out.push(byte);
            if byte == 0xff {
                self.out.push(0x00);
            }
            self.nbits -= 8;
        }
        self.acc &= (1u32 << self.nbits) - 1;
    }

    /// Pads the final partial byte with one-bits.
    pub fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits;
            self.write((1u16 << pad) - 1, pad);
        }
        self.out
    }
}

/// MSB-first bit reader over an entropy-coded segment; stops at the first
/// marker.
#[derive(Debug)]
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u32,
    nbits: u8,
    hit_marker: bool,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8], pos: usize) -> Self {
        BitReader {
            data,
            pos,
            acc: 0,
            nbits: 0,
            hit_marker: false,
        }
    }

    /// Offset of the next unread byte in the underlying buffer.
    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn data_len(&self) -> usize {
        self.data.len()
    }

    fn fill(&mut self) -> Option<()> {
        if self.hit_marker || self.pos >= self.data.len() {
            return None;
        }
        let byte = self.data[self.pos];
        if byte == 0xff {
            match self.data.get(self.pos + 1) {
                Some(0x00) => self.pos += 2,
                _ => {
                    self.hit_marker = true;
                    return None;
                }
            }
        } else {
            self.pos += 1;
        }
        self.acc = (self.acc << 8) | byte as u32;
        self.nbits += 8;
        Some(())
    }

    #[inline]
    pub fn bit(&mut self) -> Option<u8> {
        if self.nbits == 0 {
            self.fill()?;
        }
        self.nbits -= 1;
        Some(((self.acc >> self.nbits) & 1) as u8)
    }

    pub fn bits(&mut self, len: u8) -> Option<u16> {
        let mut v = 0u16;
        for _ in 0..len {
            v = (v << 1) | self.bit()? as u16;
        }
        Some(v)
    }
}

/// Magnitude category (number of bits) of a coefficient value.
#[inline]
pub fn category(v: i32) -> u8 {
    (32 - v.unsigned_abs().leading_zeros()) as u8
}

/// Additional bits for `v` in its category: ones' complement for negatives.
#[inline]
pub fn magnitude_bits(v: i32, cat: u8) -> u16 {
    if v >= 0 {
        v as u16
    } else {
        ((v - 1) & ((1 << cat) - 1)) as u16
    }
}

/// Inverse of [`magnitude_bits`].
#[inline]
pub fn extend(bits: u16, cat: u8) -> i32 {
    if cat == 0 {
        return 0;
    }
    let v = bits as i32;
    if v < (1 << (cat - 1)) {
        v - (1 << cat) + 1
    } else {
        v
    }
}
