//! Small convolutional density regressor.
//!
//! Input is a single luma plane scaled to `[0, 1]`; output is a one-channel
//! non-negative density map at `1 / downsample_factor` resolution whose sum
//! is the predicted count. Weights are `f32`; forward and backward passes use
//! fixed loop orders so results are bitwise reproducible.

mod adamw;
mod checkpoint;
mod conv;
mod model;

use alloc::vec;
use alloc::vec::Vec;

pub use adamw::{optimizer_step, AdamConstants, ADAM};
pub use checkpoint::{checkpoint_from_bytes, checkpoint_to_bytes, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{
    backward, backward_batch, forward, forward_batch, init_model, loss, predict_count, Gradients,
    ModelState, Parameter,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NetError {
    #[error("invalid architecture: {0}")]
    InvalidArchitecture(&'static str),
    #[error("input is {channels}x{height}x{width}, expected {expected_channels} channel(s) with sides divisible by {factor}")]
    InputShape {
        channels: usize,
        height: usize,
        width: usize,
        expected_channels: usize,
        factor: usize,
    },
    #[error("size mismatch: {left} vs {right} values")]
    SizeMismatch { left: usize, right: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid training config: {0}")]
    InvalidConfig(&'static str),
}

/// Dense `channels × height × width` activations.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Tensor {
            channels,
            height,
            width,
            data: vec![0.0; channels * height * width],
        }
    }

    /// One-channel input from 8-bit luma, scaled to `[0, 1]`.
    pub fn from_luma(width: usize, height: usize, luma: &[u8]) -> Self {
        assert_eq!(luma.len(), width * height, "luma buffer size");
        Tensor {
            channels: 1,
            height,
            width,
            data: luma.iter().map(|&v| v as f32 * (1.0 / 255.0)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum()
    }

    fn plane_len(&self) -> usize {
        self.height * self.width
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// Zero-padded (`kernel / 2`) convolution with bias.
    Conv {
        kernel: usize,
        in_ch: usize,
        out_ch: usize,
        stride: usize,
    },
    Relu,
    /// 2×2 average pooling.
    AvgPool2,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    layers: Vec<LayerSpec>,
}

impl Architecture {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self, NetError> {
        let mut channels: Option<usize> = None;
        let mut last_out = None;
        for layer in &layers {
            if let LayerSpec::Conv {
                kernel,
                in_ch,
                out_ch,
                stride,
            } = *layer
            {
                if kernel == 0 || kernel % 2 == 0 {
                    return Err(NetError::InvalidArchitecture("kernel sizes must be odd"));
                }
                if in_ch == 0 || out_ch == 0 || stride == 0 {
                    return Err(NetError::InvalidArchitecture("zero channels or stride"));
                }
                if channels.is_some_and(|c| c != in_ch) {
                    return Err(NetError::InvalidArchitecture("channel counts do not chain"));
                }
                channels = Some(out_ch);
                last_out = Some(out_ch);
            }
        }
        if last_out != Some(1) {
            return Err(NetError::InvalidArchitecture("final conv must have one output channel"));
        }
        if layers.last() != Some(&LayerSpec::Relu) {
            return Err(NetError::InvalidArchitecture("network must end with ReLU"));
        }
        Ok(Architecture { layers })
    }

    /// Four 3×3 convs (1→8→16→16→1) with two 2×2 average pools.
    pub fn toy() -> Self {
        use LayerSpec::*;
        let conv = |in_ch, out_ch| Conv {
            kernel: 3,
            in_ch,
            out_ch,
            stride: 1,
        };
        Architecture::new(vec![
            conv(1, 8),
            Relu,
            AvgPool2,
            conv(8, 16),
            Relu,
            AvgPool2,
            conv(16, 16),
            Relu,
            conv(16, 1),
            Relu,
        ])
        .expect("toy architecture is valid")
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_channels(&self) -> usize {
        self.layers
            .iter()
            .find_map(|l| match l {
                LayerSpec::Conv { in_ch, .. } => Some(*in_ch),
                _ => None,
            })
            .expect("validated architecture has a conv")
    }

    /// Ratio of input side to output side.
    pub fn downsample_factor(&self) -> usize {
        self.layers
            .iter()
            .map(|l| match l {
                LayerSpec::Conv { stride, .. } => *stride,
                LayerSpec::AvgPool2 => 2,
                LayerSpec::Relu => 1,
            })
            .product()
    }

    /// Shapes of the trainable tensors: weight then bias for every conv.
    pub fn parameter_shapes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for l in &self.layers {
            if let LayerSpec::Conv {
                kernel,
                in_ch,
                out_ch,
                ..
            } = *l
            {
                out.push(out_ch * in_ch * kernel * kernel);
                out.push(out_ch);
            }
        }
        out
    }

    pub fn check_input(&self, input: &Tensor) -> Result<(), NetError> {
        let f = self.downsample_factor();
        let c = self.input_channels();
        if input.channels != c
            || input.height == 0
            || input.width == 0
            || !input.height.is_multiple_of(f)
            || !input.width.is_multiple_of(f)
        {
            return Err(NetError::InputShape {
                channels: input.channels,
                height: input.height,
                width: input.width,
                expected_channels: c,
                factor: f,
            });
        }
        Ok(())
    }
}

/// Optimizer and schedule settings for one training stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplicative learning-rate decay applied once per epoch.
    pub lr_decay: f64,
    pub weight_decay: f64,
    pub epochs: u32,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            lr_decay: 0.99,
            weight_decay: 1e-4,
            epochs: 8,
            batch_size: 5,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NetError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NetError::InvalidConfig("learning_rate must be > 0"));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(NetError::InvalidConfig("lr_decay must be in (0, 1]"));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(NetError::InvalidConfig("weight_decay must be >= 0"));
        }
        if self.epochs < 1 {
            return Err(NetError::InvalidConfig("epochs must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(NetError::InvalidConfig("batch_size must be >= 1"));
        }
        Ok(())
    }

    /// Learning rate in effect during `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: u32) -> f64 {
        self.learning_rate * libm::pow(self.lr_decay, epoch as f64)
    }
}
