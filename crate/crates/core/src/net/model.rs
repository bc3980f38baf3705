use super::conv::{self, ConvShape};
use super::{Architecture, LayerSpec, NetError, Tensor};
use crate::jpeg::QualityFactor;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A trainable tensor and its AdamW moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub value: Vec<f32>,
    pub m: Vec<f32>,
    pub v: Vec<f32>,
}

impl Parameter {
    fn new(value: Vec<f32>) -> Self {
        let n = value.len();
        Parameter {
            value,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub arch: Architecture,
    /// Weight then bias of every conv layer, in layer order.
    pub params: Vec<Parameter>,
    /// Optimizer steps taken since the moments were last reset.
    pub step: u64,
    /// Quality the weights were last trained on; `None` for a fresh init.
    pub source_qf: Option<QualityFactor>,
}

impl ModelState {
    /// Same weights, zeroed moments and step counter.
    pub fn with_reset_optimizer(&self) -> ModelState {
        ModelState {
            arch: self.arch.clone(),
            params: self.params.iter().map(|p| Parameter::new(p.value.clone())).collect(),
            step: 0,
            source_qf: self.source_qf,
        }
    }

    /// Equality on the bit patterns of every float, moments included.
    pub fn bitwise_eq(&self, other: &ModelState) -> bool {
        fn same(a: &[f32], b: &[f32]) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        self.arch == other.arch
            && self.step == other.step
            && self.source_qf == other.source_qf
            && self.params.len() == other.params.len()
            && self
                .params
                .iter()
                .zip(&other.params)
                .all(|(a, b)| same(&a.value, &b.value) && same(&a.m, &b.m) && same(&a.v, &b.v))
    }

    pub fn all_finite(&self) -> bool {
        self.params
            .iter()
            .all(|p| p.value.iter().chain(&p.m).chain(&p.v).all(|x| x.is_finite()))
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}

/// Uniform `[-1/√fan_in, 1/√fan_in]` initialization of weights and biases.
pub fn init_model(arch: &Architecture, seed: u64) -> ModelState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Vec::new();
    for layer in arch.layers() {
        if let LayerSpec::Conv {
            kernel,
            in_ch,
            out_ch,
            ..
        } = *layer
        {
            let bound = 1.0 / libm::sqrtf((in_ch * kernel * kernel) as f32);
            let mut draw = |n: usize| -> Vec<f32> { (0..n).map(|_| rng.gen_range(-bound..=bound)).collect() };
            let w = draw(out_ch * in_ch * kernel * kernel);
            let b = draw(out_ch);
            params.push(Parameter::new(w));
            params.push(Parameter::new(b));
        }
    }
    ModelState {
        arch: arch.clone(),
        params,
        step: 0,
        source_qf: None,
    }
}

/// Per-parameter gradients, same layout as [`ModelState::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f32>>,
}

impl Gradients {
    pub fn zeros_like(model: &ModelState) -> Self {
        Gradients {
            tensors: model.params.iter().map(|p| vec![0.0; p.value.len()]).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f32) {
        for t in &mut self.tensors {
            for x in t.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

struct Trace {
    /// Input of every layer.
    inputs: Vec<Tensor>,
    output: Tensor,
}

fn run(model: &ModelState, input: &Tensor, keep: bool) -> Result<Trace, NetError> {
    model.arch.check_input(input)?;
    let mut inputs = Vec::new();
    let mut x = input.clone();
    let mut p = 0;
    for layer in model.arch.layers() {
        let y = match *layer {
            LayerSpec::Conv {
                kernel,
                in_ch,
                out_ch,
                stride,
            } => {
                let shape = ConvShape {
                    kernel,
                    in_ch,
                    out_ch,
                    stride,
                    in_h: x.height,
                    in_w: x.width,
                };
                let mut y = Tensor::zeros(out_ch, shape.out_h(), shape.out_w());
                conv::forward(&shape, &x.data, &model.params[p].value, &model.params[p + 1].value, &mut y.data);
                p += 2;
                y
            }
            LayerSpec::Relu => {
                let mut y = x.clone();
                for v in &mut y.data {
                    *v = v.max(0.0);
                }
                y
            }
            LayerSpec::AvgPool2 => avg_pool(&x),
        };
        if keep {
            inputs.push(x);
        }
        x = y;
    }
    if !x.data.iter().all(|v| v.is_finite()) {
        return Err(NetError::NonFinite("activations"));
    }
    Ok(Trace { inputs, output: x })
}

fn avg_pool(x: &Tensor) -> Tensor {
    let (oh, ow) = (x.height / 2, x.width / 2);
    let mut y = Tensor::zeros(x.channels, oh, ow);
    for c in 0..x.channels {
        let src = &x.data[c * x.plane_len()..(c + 1) * x.plane_len()];
        let dst = &mut y.data[c * oh * ow..(c + 1) * oh * ow];
        for oy in 0..oh {
            let r0 = &src[2 * oy * x.width..(2 * oy + 1) * x.width];
            let r1 = &src[(2 * oy + 1) * x.width..(2 * oy + 2) * x.width];
            for ((d, a), b) in dst[oy * ow..(oy + 1) * ow].iter_mut().zip(r0.chunks_exact(2)).zip(r1.chunks_exact(2)) {
                *d = ((a[0] + a[1]) + (b[0] + b[1])) * 0.25;
            }
        }
    }
    y
}

/// Predicted density map (one channel).
pub fn forward(model: &ModelState, input: &Tensor) -> Result<Tensor, NetError> {
    Ok(run(model, input, false)?.output)
}

pub fn forward_batch(model: &ModelState, inputs: &[Tensor]) -> Result<Vec<Tensor>, NetError> {
    inputs.iter().map(|x| forward(model, x)).collect()
}

/// Sum of the predicted density map.
pub fn predict_count(model: &ModelState, input: &Tensor) -> Result<f64, NetError> {
    Ok(forward(model, input)?.sum())
}

/// Mean squared error over cells.
pub fn loss(pred: &[f32], target: &[f32]) -> Result<f64, NetError> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(NetError::SizeMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    let sse: f64 = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p as f64 - t as f64;
            d * d
        })
        .sum();
    Ok(sse / pred.len() as f64)
}

/// Loss and exact gradients of `loss_scale · loss(forward(input), target)`.
pub fn backward(
    model: &ModelState,
    input: &Tensor,
    target: &[f32],
    loss_scale: f32,
) -> Result<(f64, Gradients), NetError> {
    let trace = run(model, input, true)?;
    let pred = &trace.output.data;
    let value = loss(pred, target)?;
    let k = loss_scale * 2.0 / pred.len() as f32;
    let mut grad: Vec<f32> = pred.iter().zip(target).map(|(&p, &t)| k * (p - t)).collect();

    let mut grads = Gradients::zeros_like(model);
    let mut p = model.params.len();
    let first_param_layer = model
        .arch
        .layers()
        .iter()
        .position(|l| matches!(l, LayerSpec::Conv { .. }))
        .expect("validated architecture has a conv");
    for (i, layer) in model.arch.layers().iter().enumerate().rev() {
        let x = &trace.inputs[i];
        match *layer {
            LayerSpec::Relu => {
                for (g, &xi) in grad.iter_mut().zip(&x.data) {
                    if xi <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            LayerSpec::AvgPool2 => {
                let (oh, ow) = (x.height / 2, x.width / 2);
                let mut dx = vec![0.0f32; x.data.len()];
                for (dplane, gplane) in dx.chunks_exact_mut(x.plane_len()).zip(grad.chunks_exact(oh * ow)) {
                    for (yy, drow) in dplane.chunks_exact_mut(x.width).enumerate() {
                        let grow = &gplane[(yy / 2) * ow..(yy / 2 + 1) * ow];
                        for (pair, &g) in drow.chunks_exact_mut(2).zip(grow) {
                            pair[0] = g * 0.25;
                            pair[1] = g * 0.25;
                        }
                    }
                }
                grad = dx;
            }
            LayerSpec::Conv {
                kernel,
                in_ch,
                out_ch,
                stride,
            } => {
                p -= 2;
                let shape = ConvShape {
                    kernel,
                    in_ch,
                    out_ch,
                    stride,
                    in_h: x.height,
                    in_w: x.width,
                };
                let need_input_grad = i > first_param_layer;
                let mut dx = if need_input_grad { vec![0.0f32; x.data.len()] } else { Vec::new() };
                let (head, tail) = grads.tensors.split_at_mut(p + 1);
                conv::backward(
                    &shape,
                    &x.data,
                    &model.params[p].value,
                    &grad,
                    &mut head[p],
                    &mut tail[0],
                    need_input_grad.then_some(dx.as_mut_slice()),
                );
                if !need_input_grad {
                    break;
                }
                grad = dx;
            }
        }
    }
    if !grads.all_finite() {
        return Err(NetError::NonFinite("gradients"));
    }
    Ok((value, grads))
}

/// Mean loss and mean gradient over a batch, reduced in item order.
pub fn backward_batch(
    model: &ModelState,
    inputs: &[&Tensor],
    targets: &[&[f32]],
) -> Result<(f64, Gradients), NetError> {
    if inputs.len() != targets.len() || inputs.is_empty() {
        return Err(NetError::SizeMismatch {
            left: inputs.len(),
            right: targets.len(),
        });
    }
    let mut total = Gradients::zeros_like(model);
    let mut loss_sum = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let (l, g) = backward(model, x, t, 1.0)?;
        loss_sum += l;
        total.add_assign(&g);
    }
    let n = inputs.len();
    total.scale(1.0 / n as f32);
    Ok((loss_sum / n as f64, total))
}
