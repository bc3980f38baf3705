mod fd;

use cptlab_core::net::{init_model, Architecture, LayerSpec};
use fd::check;

#[test]
fn toy_net_gradients_match_finite_differences() {
    let model = init_model(&Architecture::toy(), 7);
    let o = check(&model, 32, 60, 1);
    eprintln!(
        "checked {} weights ({} more with zero gradient, {} skipped at a kink), worst relative error {:e}",
        o.checked, o.zero, o.skipped, o.worst
    );
    assert!(o.checked >= 100, "only {} usable samples", o.checked);
}

#[test]
fn two_layer_net_on_16x16() {
    use LayerSpec::*;
    let arch = Architecture::new(vec![
        Conv { kernel: 3, in_ch: 1, out_ch: 4, stride: 1 },
        Relu,
        Conv { kernel: 3, in_ch: 4, out_ch: 1, stride: 1 },
        Relu,
    ])
    .unwrap();
    let mut model = init_model(&arch, 3);
    // Keep the output unit alive so every weight has a gradient.
    model.params[3].value[0] = 0.2;
    let o = check(&model, 16, 40, 2);
    assert!(o.checked >= 40);
}
