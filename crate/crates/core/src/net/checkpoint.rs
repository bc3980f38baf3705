//! Binary checkpoint layout, all integers and floats little-endian:
//!
//! ```text
//! "CPTM"  u16 version
//! u16 layer count, then per layer:
//!     u8 tag (0 conv, 1 relu, 2 avgpool2)
//!     conv only: u8 kernel, u16 in_ch, u16 out_ch, u8 stride
//! u8 source_qf (0 = none)
//! u64 step
//! per parameter tensor: u32 length, then length × f32 for value, m, v
//! ```

use super::{Architecture, LayerSpec, ModelState, NetError, Parameter};
use crate::jpeg::QualityFactor;
use alloc::vec::Vec;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"CPTM";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CheckpointError {
    #[error("bad magic bytes {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u16, expected: u16 },
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("malformed checkpoint: {0}")]
    Malformed(&'static str),
    #[error("checkpoint architecture does not match the expected one")]
    ArchitectureMismatch,
    #[error(transparent)]
    Net(#[from] NetError),
}

pub fn checkpoint_to_bytes(model: &ModelState) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + model.parameter_count() * 12);
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let layers = model.arch.layers();
    out.extend_from_slice(&(layers.len() as u16).to_le_bytes());
    for layer in layers {
        match *layer {
            LayerSpec::Conv {
                kernel,
                in_ch,
                out_ch,
                stride,
            } => {
                out.push(0);
                out.push(kernel as u8);
                out.extend_from_slice(&(in_ch as u16).to_le_bytes());
                out.extend_from_slice(&(out_ch as u16).to_le_bytes());
                out.push(stride as u8);
            }
            LayerSpec::Relu => out.push(1),
            LayerSpec::AvgPool2 => out.push(2),
        }
    }
    out.push(model.source_qf.map_or(0, |q| q.get()));
    out.extend_from_slice(&model.step.to_le_bytes());
    for p in &model.params {
        out.extend_from_slice(&(p.value.len() as u32).to_le_bytes());
        for arr in [&p.value, &p.m, &p.v] {
            for x in arr.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.bytes.len() - self.pos < n {
            return Err(CheckpointError::Truncated(self.bytes.len()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, CheckpointError> {
        let raw = self.take(n.checked_mul(4).ok_or(CheckpointError::Malformed("length overflow"))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Parses a checkpoint; when `expected` is given the stored architecture must
/// match it exactly.
pub fn checkpoint_from_bytes(
    bytes: &[u8],
    expected: Option<&Architecture>,
) -> Result<ModelState, CheckpointError> {
    let mut c = Cursor { bytes, pos: 0 };
    let magic: [u8; 4] = c.take(4)?.try_into().unwrap();
    if magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let version = c.u16()?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let n_layers = c.u16()? as usize;
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        layers.push(match c.u8()? {
            0 => {
                let kernel = c.u8()? as usize;
                let in_ch = c.u16()? as usize;
                let out_ch = c.u16()? as usize;
                let stride = c.u8()? as usize;
                LayerSpec::Conv {
                    kernel,
                    in_ch,
                    out_ch,
                    stride,
                }
            }
            1 => LayerSpec::Relu,
            2 => LayerSpec::AvgPool2,
            _ => return Err(CheckpointError::Malformed("unknown layer tag")),
        });
    }
    let arch = Architecture::new(layers)?;
    if expected.is_some_and(|e| *e != arch) {
        return Err(CheckpointError::ArchitectureMismatch);
    }
    let source_qf = match c.u8()? {
        0 => None,
        q => Some(QualityFactor::try_from(q).map_err(|_| CheckpointError::Malformed("source_qf"))?),
    };
    let step = c.u64()?;
    let mut params = Vec::new();
    for &len in &arch.parameter_shapes() {
        let stored = c.u32()? as usize;
        if stored != len {
            return Err(CheckpointError::Malformed("parameter length disagrees with architecture"));
        }
        params.push(Parameter {
            value: c.f32s(len)?,
            m: c.f32s(len)?,
            v: c.f32s(len)?,
        });
    }
    if c.pos != bytes.len() {
        return Err(CheckpointError::Malformed("trailing bytes"));
    }
    let model = ModelState {
        arch,
        params,
        step,
        source_qf,
    };
    if !model.all_finite() {
        return Err(NetError::NonFinite("checkpoint").into());
    }
    Ok(model)
}
