use super::{Gradients, ModelState, NetError, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConstants {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

pub const ADAM: AdamConstants = AdamConstants {
    beta1: 0.9,
    beta2: 0.999,
    eps: 1e-8,
};

/// One AdamW step with decoupled weight decay.
///
/// The learning rate is `config.learning_rate · lr_decay^epoch`. Weight decay
/// shrinks every parameter by `lr · weight_decay` before the adaptive update.
pub fn optimizer_step(
    model: &mut ModelState,
    grads: &Gradients,
    config: &TrainConfig,
    epoch: u32,
) -> Result<(), NetError> {
    if grads.tensors.len() != model.params.len() {
        return Err(NetError::SizeMismatch {
            left: grads.tensors.len(),
            right: model.params.len(),
        });
    }
    if !grads.all_finite() {
        return Err(NetError::NonFinite("gradients"));
    }
    model.step += 1;
    let t = model.step as f64;
    let lr = config.learning_rate_at(epoch);
    let AdamConstants { beta1, beta2, eps } = ADAM;
    let bias1 = 1.0 - libm::pow(beta1, t);
    let bias2 = 1.0 - libm::pow(beta2, t);
    let decay = (1.0 - lr * config.weight_decay) as f32;
    let (b1, b2) = (beta1 as f32, beta2 as f32);
    let (c1, c2) = ((1.0 - beta1) as f32, (1.0 - beta2) as f32);
    let step_size = (lr / bias1) as f32;
    let inv_sqrt_bias2 = (1.0 / libm::sqrt(bias2)) as f32;
    let eps = eps as f32;

    for (param, g) in model.params.iter_mut().zip(&grads.tensors) {
        if g.len() != param.value.len() {
            return Err(NetError::SizeMismatch {
                left: g.len(),
                right: param.value.len(),
            });
        }
        for i in 0..g.len() {
            let gi = g[i];
            let m = b1 * param.m[i] + c1 * gi;
            let v = b2 * param.v[i] + c2 * gi * gi;
            param.m[i] = m;
            param.v[i] = v;
            let denom = libm::sqrtf(v) * inv_sqrt_bias2 + eps;
            param.value[i] = param.value[i] * decay - step_size * m / denom;
        }
    }
    if !model.all_finite() {
        return Err(NetError::NonFinite("weights"));
    }
    Ok(())
}
