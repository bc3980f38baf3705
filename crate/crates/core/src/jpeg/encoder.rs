use super::huffman::{category, magnitude_bits, BitWriter, EncodeTable, HuffmanSpec};
use super::{
    fdct_8x8, quantize_block, rgb_to_ycbcr, subsample_chroma_420, zigzag_scan, Block, ColorSpace,
    PlanarImage, Plane, QualityFactor, QuantTable, QuantizationSpec, Subsampling, TableMode,
    BASE_TABLE, STANDARD_CHROMA_TABLE, ZIGZAG,
};
use alloc::vec::Vec;

pub(crate) const SOI: u8 = 0xd8;
pub(crate) const EOI: u8 = 0xd9;
pub(crate) const APP0: u8 = 0xe0;
pub(crate) const DQT: u8 = 0xdb;
pub(crate) const SOF0: u8 = 0xc0;
pub(crate) const DHT: u8 = 0xc4;
pub(crate) const SOS: u8 = 0xda;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("image is {width}x{height}, at least 8x8 is required")]
    TooSmall { width: usize, height: usize },
    #[error("image is {width}x{height}, dimensions above 65535 do not fit SOF0")]
    TooLarge { width: usize, height: usize },
    #[error("encoder input must be a 3-plane RGB image")]
    NotRgb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderOptions {
    pub subsampling: Subsampling,
    /// Use the Annex K chroma base table instead of sharing the luma base.
    pub standard_chroma_table: bool,
}

impl Default for EncoderOptions {
    fn default() -> Self {
        EncoderOptions {
            subsampling: Subsampling::S420,
            standard_chroma_table: false,
        }
    }
}

/// Encodes an RGB image as a baseline 4:2:0 JFIF stream.
pub fn encode_jpeg(image: &PlanarImage, qf: QualityFactor) -> Result<Vec<u8>, EncodeError> {
    encode_jpeg_with(image, qf, &EncoderOptions::default())
}

pub fn encode_jpeg_with(
    image: &PlanarImage,
    qf: QualityFactor,
    options: &EncoderOptions,
) -> Result<Vec<u8>, EncodeError> {
    if image.color_space() != ColorSpace::Rgb || image.planes().len() != 3 {
        return Err(EncodeError::NotRgb);
    }
    let (width, height) = (image.width(), image.height());
    if width < 8 || height < 8 {
        return Err(EncodeError::TooSmall { width, height });
    }
    if width > 0xffff || height > 0xffff {
        return Err(EncodeError::TooLarge { width, height });
    }

    let chroma_base = if options.standard_chroma_table {
        &STANDARD_CHROMA_TABLE
    } else {
        &BASE_TABLE
    };
    let tables = QuantizationSpec::new(qf, TableMode::Baseline, chroma_base);

    let [y, cb, cr] = to_ycbcr(image);
    let mcu = match options.subsampling {
        Subsampling::S420 => 16,
        Subsampling::S444 => 8,
    };
    let (pw, ph) = (width.next_multiple_of(mcu), height.next_multiple_of(mcu));
    let y = y.padded(pw, ph);
    let (cb, cr) = match options.subsampling {
        Subsampling::S420 => (
            subsample_chroma_420(&cb.padded(pw, ph)),
            subsample_chroma_420(&cr.padded(pw, ph)),
        ),
        Subsampling::S444 => (cb.padded(pw, ph), cr.padded(pw, ph)),
    };

    let mut out = Vec::with_capacity(width * height / 2 + 1024);
    out.extend_from_slice(&[0xff, SOI]);
    write_app0(&mut out);
    write_dqt(&mut out, 0, &tables.luma);
    write_dqt(&mut out, 1, &tables.chroma);
    write_sof0(&mut out, width as u16, height as u16, options.subsampling);
    let specs = [
        (0x00, HuffmanSpec::luma_dc()),
        (0x10, HuffmanSpec::luma_ac()),
        (0x01, HuffmanSpec::chroma_dc()),
        (0x11, HuffmanSpec::chroma_ac()),
    ];
    for (class_id, spec) in &specs {
        write_dht(&mut out, *class_id, spec);
    }
    write_sos(&mut out);

    let luma_coder = BlockCoder::new(&specs[0].1, &specs[1].1, tables.luma);
    let chroma_coder = BlockCoder::new(&specs[2].1, &specs[3].1, tables.chroma);
    let mut bits = BitWriter::new();
    let mut pred = [0i32; 3];
    let luma_blocks_per_axis = mcu / 8;
    for my in 0..ph / mcu {
        for mx in 0..pw / mcu {
            for by in 0..luma_blocks_per_axis {
                for bx in 0..luma_blocks_per_axis {
                    let block = extract_block(&y, mx * mcu + bx * 8, my * mcu + by * 8);
                    luma_coder.encode(&block, &mut pred[0], &mut bits);
                }
            }
            for (i, plane) in [&cb, &cr].into_iter().enumerate() {
                let block = extract_block(plane, mx * 8, my * 8);
                chroma_coder.encode(&block, &mut pred[i + 1], &mut bits);
            }
        }
    }
    out.extend_from_slice(&bits.finish());
    out.extend_from_slice(&[0xff, EOI]);
    Ok(out)
}

fn to_ycbcr(image: &PlanarImage) -> [Plane; 3] {
    let p = image.planes();
    let (w, h) = (image.width(), image.height());
    let n = w * h;
    let (mut y, mut cb, mut cr) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let (a, b, c) = rgb_to_ycbcr(p[0].data[i], p[1].data[i], p[2].data[i]);
        y.push(a);
        cb.push(b);
        cr.push(c);
    }
    [
        Plane { width: w, height: h, data: y },
        Plane { width: w, height: h, data: cb },
        Plane { width: w, height: h, data: cr },
    ]
}

fn extract_block(plane: &Plane, x0: usize, y0: usize) -> Block<u8> {
    let mut block = [0u8; 64];
    for r in 0..8 {
        let row = (y0 + r) * plane.width + x0;
        block[r * 8..r * 8 + 8].copy_from_slice(&plane.data[row..row + 8]);
    }
    block
}

struct BlockCoder {
    dc: EncodeTable,
    ac: EncodeTable,
    table: QuantTable,
}

impl BlockCoder {
    fn new(dc: &HuffmanSpec, ac: &HuffmanSpec, table: QuantTable) -> Self {
        BlockCoder {
            dc: EncodeTable::new(dc),
            ac: EncodeTable::new(ac),
            table,
        }
    }

    fn encode(&self, block: &Block<u8>, pred: &mut i32, bits: &mut BitWriter) {
        let q = zigzag_scan(&quantize_block(&fdct_8x8(block, true), &self.table));

        let diff = (q[0] - *pred).clamp(-2047, 2047);
        *pred += diff;
        let cat = category(diff);
        let (len, code) = self.dc.code(cat);
        bits.write(code, len);
        bits.write(magnitude_bits(diff, cat), cat);

        let mut run = 0u8;
        for &coef in &q[1..] {
            let coef = coef.clamp(-1023, 1023);
            if coef == 0 {
                run += 1;
                continue;
            }
            while run > 15 {
                let (len, code) = self.ac.code(0xf0);
                bits.write(code, len);
                run -= 16;
            }
            let cat = category(coef);
            let (len, code) = self.ac.code((run << 4) | cat);
            bits.write(code, len);
            bits.write(magnitude_bits(coef, cat), cat);
            run = 0;
        }
        if run > 0 {
            let (len, code) = self.ac.code(0x00);
            bits.write(code, len);
        }
    }
}

fn write_segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xff, marker]);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

fn write_app0(out: &mut Vec<u8>) {
    // "JFIF\0", v1.01, no units, 1:1 density, no thumbnail
    let payload = [b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0];
    write_segment(out, APP0, &payload);
}

fn write_dqt(out: &mut Vec<u8>, id: u8, table: &QuantTable) {
    let mut payload = Vec::with_capacity(65);
    payload.push(id);
    for &pos in &ZIGZAG {
        payload.push(table[pos] as u8);
    }
    write_segment(out, DQT, &payload);
}

fn write_sof0(out: &mut Vec<u8>, width: u16, height: u16, subsampling: Subsampling) {
    let luma_sampling = match subsampling {
        Subsampling::S420 => 0x22,
        Subsampling::S444 => 0x11,
    };
    let mut payload = Vec::with_capacity(15);
    payload.push(8);
    payload.extend_from_slice(&height.to_be_bytes());
    payload.extend_from_slice(&width.to_be_bytes());
    payload.push(3);
    payload.extend_from_slice(&[1, luma_sampling, 0]);
    payload.extend_from_slice(&[2, 0x11, 1]);
    payload.extend_from_slice(&[3, 0x11, 1]);
    write_segment(out, SOF0, &payload);
}

fn write_dht(out: &mut Vec<u8>, class_id: u8, spec: &HuffmanSpec) {
    let mut payload = Vec::with_capacity(17 + spec.values.len());
    payload.push(class_id);
    payload.extend_from_slice(&spec.bits);
    payload.extend_from_slice(&spec.values);
    write_segment(out, DHT, &payload);
}

fn write_sos(out: &mut Vec<u8>) {
    let payload = [3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0];
    write_segment(out, SOS, &payload);
}
