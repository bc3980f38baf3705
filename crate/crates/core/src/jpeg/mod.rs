//! Baseline sequential JPEG (JFIF) codec.
//!
//! The encoder runs the classic three-step pipeline: RGB to YCbCr, chroma
//! subsampling and 8×8 DCT with quality-scaled quantization, then Huffman
//! coding with the Annex K tables. Each stage is a public function so it can be
//! tested in isolation. The decoder only understands the subset the encoder
//! emits.

mod color;
mod dct;
mod decoder;
mod encoder;
mod huffman;
mod quant;
mod sampling;
mod zigzag;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use color::{rgb_to_ycbcr, ycbcr_to_rgb};
pub use dct::{fdct_8x8, idct_8x8, idct_8x8_unclamped};
pub use decoder::{decode_jpeg, DecodeError, DecodeErrorKind};
pub use encoder::{encode_jpeg, encode_jpeg_with, EncodeError, EncoderOptions};
pub use quant::{
    dequantize_block, quant_table, quantize_block, scale_factor, QuantTable, QuantizationSpec,
    TableMode, BASE_TABLE, STANDARD_CHROMA_TABLE,
};
pub use sampling::{subsample_chroma_420, upsample_chroma_420, upsample_chroma_420_smooth};
pub use zigzag::{zigzag_scan, zigzag_unscan, ZIGZAG};

/// 8×8 block of samples or coefficients in row-major order.
pub type Block<T> = [T; 64];

/// JPEG quality setting, 1 (worst) to 100 (best).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QualityFactor(u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("quality factor {0} outside [1, 100]")]
pub struct InvalidQuality(pub i64);

impl QualityFactor {
    pub const MIN: QualityFactor = QualityFactor(1);
    pub const MAX: QualityFactor = QualityFactor(100);

    pub fn new(value: i64) -> Result<Self, InvalidQuality> {
        if (1..=100).contains(&value) {
            Ok(QualityFactor(value as u8))
        } else {
            Err(InvalidQuality(value))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

impl fmt::Display for QualityFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl TryFrom<u8> for QualityFactor {
    type Error = InvalidQuality;

    fn try_from(value: u8) -> Result<Self, Self::Error> {
        QualityFactor::new(value as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    Rgb,
    YCbCr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Subsampling {
    S444,
    #[default]
    S420,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ImageError {
    #[error("expected {expected} samples for a {width}x{height} plane, got {actual}")]
    PlaneSize {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("plane count {0} not in 1..=3")]
    PlaneCount(usize),
    #[error("RGB images must be 4:4:4 with equal plane dimensions")]
    RgbLayout,
    #[error("chroma plane is {actual:?}, expected {expected:?} for 4:2:0")]
    ChromaDims {
        expected: (usize, usize),
        actual: (usize, usize),
    },
}

/// One 8-bit sample plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::PlaneSize {
                width,
                height,
                expected: width * height,
                actual: data.len(),
            });
        }
        Ok(Plane { width, height, data })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Copy with edge-replication padding up to `width`×`height`.
    pub fn padded(&self, width: usize, height: usize) -> Plane {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            let sy = y.min(self.height - 1);
            for x in 0..width {
                data.push(self.at(x.min(self.width - 1), sy));
            }
        }
        Plane { width, height, data }
    }

    pub fn cropped(&self, width: usize, height: usize) -> Plane {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            data.extend_from_slice(&self.data[y * self.width..y * self.width + width]);
        }
        Plane { width, height, data }
    }
}

/// 8-bit image stored as separate planes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanarImage {
    color_space: ColorSpace,
    subsampling: Subsampling,
    planes: Vec<Plane>,
}

impl PlanarImage {
    pub fn new(
        color_space: ColorSpace,
        subsampling: Subsampling,
        planes: Vec<Plane>,
    ) -> Result<Self, ImageError> {
        if planes.is_empty() || planes.len() > 3 {
            return Err(ImageError::PlaneCount(planes.len()));
        }
        let (w, h) = (planes[0].width, planes[0].height);
        match (color_space, subsampling) {
            (ColorSpace::Rgb, Subsampling::S420) => return Err(ImageError::RgbLayout),
            (_, Subsampling::S444) => {
                if planes.iter().any(|p| p.width != w || p.height != h) {
                    return Err(ImageError::RgbLayout);
                }
            }
            (ColorSpace::YCbCr, Subsampling::S420) => {
                let expected = (w.div_ceil(2), h.div_ceil(2));
                for p in &planes[1..] {
                    if (p.width, p.height) != expected {
                        return Err(ImageError::ChromaDims {
                            expected,
                            actual: (p.width, p.height),
                        });
                    }
                }
            }
        }
        Ok(PlanarImage {
            color_space,
            subsampling,
            planes,
        })
    }

    /// Builds an RGB image from interleaved `r, g, b` bytes.
    pub fn from_rgb_interleaved(
        width: usize,
        height: usize,
        rgb: &[u8],
    ) -> Result<Self, ImageError> {
        if rgb.len() != width * height * 3 {
            return Err(ImageError::PlaneSize {
                width,
                height,
                expected: width * height * 3,
                actual: rgb.len(),
            });
        }
        let mut planes = [
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
        ];
        for px in rgb.chunks_exact(3) {
            planes[0].push(px[0]);
            planes[1].push(px[1]);
            planes[2].push(px[2]);
        }
        let [r, g, b] = planes;
        Ok(PlanarImage {
            color_space: ColorSpace::Rgb,
            subsampling: Subsampling::S444,
            planes: vec![
                Plane { width, height, data: r },
                Plane { width, height, data: g },
                Plane { width, height, data: b },
            ],
        })
    }

    pub fn to_rgb_interleaved(&self) -> Vec<u8> {
        let n = self.width() * self.height();
        let mut out = Vec::with_capacity(n * 3);
        for i in 0..n {
            for p in &self.planes {
                out.push(p.data[i]);
            }
            // Grayscale expands to three equal channels.
            for _ in self.planes.len()..3 {
                out.push(self.planes[0].data[i]);
            }
        }
        out
    }

    pub fn color_space(&self) -> ColorSpace {
        self.color_space
    }

    pub fn subsampling(&self) -> Subsampling {
        self.subsampling
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn width(&self) -> usize {
        self.planes[0].width
    }

    pub fn height(&self) -> usize {
        self.planes[0].height
    }

    /// Luma (Y of the transform) for every pixel of an RGB image.
    pub fn luma(&self) -> Vec<u8> {
        match self.color_space {
            ColorSpace::YCbCr => self.planes[0].data.clone(),
            ColorSpace::Rgb if self.planes.len() == 3 => {
                let (r, g, b) = (&self.planes[0].data, &self.planes[1].data, &self.planes[2].data);
                (0..r.len())
                    .map(|i| rgb_to_ycbcr(r[i], g[i], b[i]).0)
                    .collect()
            }
            ColorSpace::Rgb => self.planes[0].data.clone(),
        }
    }
}

/// Peak signal-to-noise ratio over all channels of two equally-sized RGB images.
pub fn psnr(a: &PlanarImage, b: &PlanarImage) -> f64 {
    let (x, y) = (a.to_rgb_interleaved(), b.to_rgb_interleaved());
    assert_eq!(x.len(), y.len(), "psnr needs equal image sizes");
    let sse: f64 = x
        .iter()
        .zip(&y)
        .map(|(&p, &q)| {
            let d = p as f64 - q as f64;
            d * d
        })
        .sum();
    if sse == 0.0 {
        return f64::INFINITY;
    }
    let mse = sse / x.len() as f64;
    10.0 * libm::log10(255.0 * 255.0 / mse)
}

#[inline]
pub(crate) fn round_half_away(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn clamp_u8(x: f64) -> u8 {
    if x <= 0.0 {
        0
    } else if x >= 255.0 {
        255
    } else {
        x as u8
    }
}
