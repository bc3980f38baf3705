use super::encoder::{APP0, DHT, DQT, EOI, SOF0, SOI, SOS};
use super::huffman::{extend, BitReader, DecodeTable, HuffmanSpec};
use super::{
    dequantize_block, idct_8x8, upsample_chroma_420_smooth, ycbcr_to_rgb, ColorSpace, PlanarImage, Plane, QuantTable,
    Subsampling, ZIGZAG,
};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeErrorKind {
    MissingSoi,
    /// Expected a marker (0xFF ..) but found another byte.
    ExpectedMarker,
    /// A marker the baseline subset does not handle.
    UnsupportedMarker(u8),
    /// A segment or the entropy-coded data ends before it should.
    Truncated,
    /// A segment with inconsistent contents.
    BadSegment(u8),
    /// SOS or EOI seen before a required table or frame header.
    MissingTable,
    /// An invalid Huffman code or coefficient run in the scan data.
    CorruptScan,
    MissingEoi,
}

/// Decoding failure, with the byte offset of the offending marker or data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecodeError {
    pub kind: DecodeErrorKind,
    pub offset: usize,
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DecodeErrorKind::MissingSoi => write!(f, "missing SOI marker")?,
            DecodeErrorKind::ExpectedMarker => write!(f, "expected a marker")?,
            DecodeErrorKind::UnsupportedMarker(m) => write!(f, "unsupported marker 0xFF{m:02X}")?,
            DecodeErrorKind::Truncated => write!(f, "stream truncated")?,
            DecodeErrorKind::BadSegment(m) => write!(f, "malformed segment 0xFF{m:02X}")?,
            DecodeErrorKind::MissingTable => write!(f, "scan references a missing table or frame")?,
            DecodeErrorKind::CorruptScan => write!(f, "corrupt entropy-coded data")?,
            DecodeErrorKind::MissingEoi => write!(f, "missing EOI marker")?,
        }
        write!(f, " at offset {}", self.offset)
    }
}

impl core::error::Error for DecodeError {}

fn err<T>(kind: DecodeErrorKind, offset: usize) -> Result<T, DecodeError> {
    Err(DecodeError { kind, offset })
}

#[derive(Debug, Clone, Copy)]
struct Component {
    id: u8,
    h: usize,
    v: usize,
    tq: usize,
    dc: usize,
    ac: usize,
}

#[derive(Debug)]
struct Frame {
    width: usize,
    height: usize,
    components: Vec<Component>,
}

#[derive(Default)]
struct Tables {
    quant: [Option<QuantTable>; 4],
    dc: [Option<DecodeTable>; 4],
    ac: [Option<DecodeTable>; 4],
}

/// Decodes a baseline JFIF stream as produced by the encoder into RGB.
pub fn decode_jpeg(bytes: &[u8]) -> Result<PlanarImage, DecodeError> {
    if bytes.len() < 2 || bytes[0] != 0xff || bytes[1] != SOI {
        return err(DecodeErrorKind::MissingSoi, 0);
    }
    let mut pos = 2;
    let mut tables = Tables::default();
    let mut frame: Option<Frame> = None;
    loop {
        let marker_at = pos;
        let Some(&first) = bytes.get(pos) else {
            return err(DecodeErrorKind::Truncated, pos);
        };
        if first != 0xff {
            return err(DecodeErrorKind::ExpectedMarker, pos);
        }
        while bytes.get(pos) == Some(&0xff) {
            pos += 1;
        }
        let Some(&marker) = bytes.get(pos) else {
            return err(DecodeErrorKind::Truncated, pos);
        };
        pos += 1;
        if marker == EOI {
            return err(DecodeErrorKind::MissingTable, marker_at);
        }
        let payload = segment(bytes, pos, marker_at)?;
        let next = pos + 2 + payload.len();
        match marker {
            m if (APP0..=0xef).contains(&m) || m == 0xfe => {}
            DQT => parse_dqt(payload, &mut tables, marker_at)?,
            DHT => parse_dht(payload, &mut tables, marker_at)?,
            SOF0 => frame = Some(parse_sof0(payload, marker_at)?),
            SOS => {
                let Some(frame) = frame.as_mut() else {
                    return err(DecodeErrorKind::MissingTable, marker_at);
                };
                parse_sos(payload, frame, &tables, marker_at)?;
                let (image, end) = decode_scan(bytes, next, frame, &tables)?;
                if bytes.get(end) != Some(&0xff) || bytes.get(end + 1) != Some(&EOI) {
                    return err(DecodeErrorKind::MissingEoi, end);
                }
                return Ok(image);
            }
            other => return err(DecodeErrorKind::UnsupportedMarker(other), marker_at),
        }
        pos = next;
    }
}

fn segment(bytes: &[u8], pos: usize, marker_at: usize) -> Result<&[u8], DecodeError> {
    if pos + 2 > bytes.len() {
        return err(DecodeErrorKind::Truncated, marker_at);
    }
    let len = u16::from_be_bytes([bytes[pos], bytes[pos + 1]]) as usize;
    if len < 2 {
        return err(DecodeErrorKind::BadSegment(bytes[pos - 1]), marker_at);
    }
    if pos + len > bytes.len() {
        return err(DecodeErrorKind::Truncated, marker_at);
    }
    Ok(&bytes[pos + 2..pos + len])
}

fn parse_dqt(mut p: &[u8], tables: &mut Tables, at: usize) -> Result<(), DecodeError> {
    while !p.is_empty() {
        let precision = p[0] >> 4;
        let id = (p[0] & 0x0f) as usize;
        let size = if precision == 0 { 64 } else { 128 };
        if id > 3 || precision > 1 || p.len() < 1 + size {
            return err(DecodeErrorKind::BadSegment(DQT), at);
        }
        let mut table = [0u16; 64];
        for (k, &pos) in ZIGZAG.iter().enumerate() {
            table[pos] = if precision == 0 {
                p[1 + k] as u16
            } else {
                u16::from_be_bytes([p[1 + 2 * k], p[2 + 2 * k]])
            };
        }
        tables.quant[id] = Some(table);
        p = &p[1 + size..];
    }
    Ok(())
}

fn parse_dht(mut p: &[u8], tables: &mut Tables, at: usize) -> Result<(), DecodeError> {
    while !p.is_empty() {
        if p.len() < 17 {
            return err(DecodeErrorKind::BadSegment(DHT), at);
        }
        let class = p[0] >> 4;
        let id = (p[0] & 0x0f) as usize;
        let mut bits = [0u8; 16];
        bits.copy_from_slice(&p[1..17]);
        let n: usize = bits.iter().map(|&b| b as usize).sum();
        if class > 1 || id > 3 || n > 256 || p.len() < 17 + n {
            return err(DecodeErrorKind::BadSegment(DHT), at);
        }
        let table = DecodeTable::new(&HuffmanSpec::new(bits, &p[17..17 + n]));
        if class == 0 {
            tables.dc[id] = Some(table);
        } else {
            tables.ac[id] = Some(table);
        }
        p = &p[17 + n..];
    }
    Ok(())
}

fn parse_sof0(p: &[u8], at: usize) -> Result<Frame, DecodeError> {
    let bad = || err(DecodeErrorKind::BadSegment(SOF0), at);
    if p.len() < 6 || p[0] != 8 {
        return bad();
    }
    let height = u16::from_be_bytes([p[1], p[2]]) as usize;
    let width = u16::from_be_bytes([p[3], p[4]]) as usize;
    let n = p[5] as usize;
    if width == 0 || height == 0 || n != 3 || p.len() != 6 + 3 * n {
        return bad();
    }
    let mut components = Vec::with_capacity(n);
    for c in p[6..].chunks_exact(3) {
        let (h, v) = ((c[1] >> 4) as usize, (c[1] & 0x0f) as usize);
        if !(1..=2).contains(&h) || !(1..=2).contains(&v) || c[2] > 3 {
            return bad();
        }
        components.push(Component {
            id: c[0],
            h,
            v,
            tq: c[2] as usize,
            dc: 0,
            ac: 0,
        });
    }
    Ok(Frame {
        width,
        height,
        components,
    })
}

fn parse_sos(p: &[u8], frame: &mut Frame, tables: &Tables, at: usize) -> Result<(), DecodeError> {
    let n = *p.first().unwrap_or(&0) as usize;
    if n != frame.components.len() || p.len() != 4 + 2 * n {
        return err(DecodeErrorKind::BadSegment(SOS), at);
    }
    for (i, c) in p[1..1 + 2 * n].chunks_exact(2).enumerate() {
        let comp = &mut frame.components[i];
        if comp.id != c[0] {
            return err(DecodeErrorKind::BadSegment(SOS), at);
        }
        comp.dc = (c[1] >> 4) as usize;
        comp.ac = (c[1] & 0x0f) as usize;
        if comp.dc > 3
            || comp.ac > 3
            || tables.dc[comp.dc].is_none()
            || tables.ac[comp.ac].is_none()
            || tables.quant[comp.tq].is_none()
        {
            return err(DecodeErrorKind::MissingTable, at);
        }
    }
    let tail = &p[1 + 2 * n..];
    if tail != [0, 63, 0] {
        return err(DecodeErrorKind::BadSegment(SOS), at);
    }
    Ok(())
}

fn decode_scan(
    bytes: &[u8],
    start: usize,
    frame: &Frame,
    tables: &Tables,
) -> Result<(PlanarImage, usize), DecodeError> {
    let hmax = frame.components.iter().map(|c| c.h).max().unwrap_or(1);
    let vmax = frame.components.iter().map(|c| c.v).max().unwrap_or(1);
    let mcus_x = frame.width.div_ceil(8 * hmax);
    let mcus_y = frame.height.div_ceil(8 * vmax);

    let mut planes: Vec<Plane> = frame
        .components
        .iter()
        .map(|c| Plane::filled(mcus_x * c.h * 8, mcus_y * c.v * 8, 0))
        .collect();
    let mut preds = vec![0i32; frame.components.len()];
    let mut reader = BitReader::new(bytes, start);

    for my in 0..mcus_y {
        for mx in 0..mcus_x {
            for (ci, comp) in frame.components.iter().enumerate() {
                let dc = tables.dc[comp.dc].as_ref().expect("checked in SOS");
                let ac = tables.ac[comp.ac].as_ref().expect("checked in SOS");
                let quant = tables.quant[comp.tq].as_ref().expect("checked in SOS");
                for by in 0..comp.v {
                    for bx in 0..comp.h {
                        let zz = decode_block(&mut reader, dc, ac, &mut preds[ci])?;
                        let mut natural = [0i32; 64];
                        for (k, &pos) in ZIGZAG.iter().enumerate() {
                            natural[pos] = zz[k];
                        }
                        let samples = idct_8x8(&dequantize_block(&natural, quant), true);
                        let plane = &mut planes[ci];
                        let x0 = (mx * comp.h + bx) * 8;
                        let y0 = (my * comp.v + by) * 8;
                        for r in 0..8 {
                            let row = (y0 + r) * plane.width + x0;
                            plane.data[row..row + 8].copy_from_slice(&samples[r * 8..r * 8 + 8]);
                        }
                    }
                }
            }
        }
    }

    let (pw, ph) = (mcus_x * hmax * 8, mcus_y * vmax * 8);
    let (w, h) = (frame.width, frame.height);
    let mut rgb = [
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
        Vec::with_capacity(w * h),
    ];
    let comps = &frame.components;
    // Chroma at half resolution in both axes gets the triangle filter; any
    // other ratio is replicated.
    let full: Vec<Option<Plane>> = comps
        .iter()
        .zip(&planes)
        .map(|(c, p)| (c.h * 2 == hmax && c.v * 2 == vmax).then(|| upsample_chroma_420_smooth(p, pw, ph)))
        .collect();
    for y in 0..h.min(ph) {
        for x in 0..w.min(pw) {
            let sample = |i: usize| match &full[i] {
                Some(p) => p.data[y * pw + x],
                None => {
                    let c = &comps[i];
                    planes[i].at(x * c.h / hmax, y * c.v / vmax)
                }
            };
            let (r, g, b) = ycbcr_to_rgb(sample(0), sample(1), sample(2));
            rgb[0].push(r);
            rgb[1].push(g);
            rgb[2].push(b);
        }
    }
    let [r, g, b] = rgb;
    let image = PlanarImage::new(
        ColorSpace::Rgb,
        Subsampling::S444,
        vec![
            Plane { width: w, height: h, data: r },
            Plane { width: w, height: h, data: g },
            Plane { width: w, height: h, data: b },
        ],
    )
    .expect("planes built with equal dimensions");
    Ok((image, reader.position()))
}

fn decode_block(
    reader: &mut BitReader<'_>,
    dc: &DecodeTable,
    ac: &DecodeTable,
    pred: &mut i32,
) -> Result<[i32; 64], DecodeError> {
    let fail = |reader: &BitReader<'_>| {
        let kind = if reader.position() >= reader.data_len() {
            DecodeErrorKind::Truncated
        } else {
            DecodeErrorKind::CorruptScan
        };
        DecodeError {
            kind,
            offset: reader.position(),
        }
    };
    let mut out = [0i32; 64];
    let cat = dc.decode(reader).ok_or_else(|| fail(reader))?;
    if cat > 11 {
        return Err(fail(reader));
    }
    let diff = extend(reader.bits(cat).ok_or_else(|| fail(reader))?, cat);
    *pred += diff;
    out[0] = *pred;

    let mut k = 1;
    while k < 64 {
        let rs = ac.decode(reader).ok_or_else(|| fail(reader))?;
        let (run, size) = ((rs >> 4) as usize, rs & 0x0f);
        if size == 0 {
            if run == 15 {
                k += 16;
                continue;
            }
            break;
        }
        k += run;
        if k > 63 {
            return Err(fail(reader));
        }
        out[k] = extend(reader.bits(size).ok_or_else(|| fail(reader))?, size);
        k += 1;
    }
    if k > 64 {
        return Err(fail(reader));
    }
    Ok(out)
}
