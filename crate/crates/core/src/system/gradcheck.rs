//! Finite-difference check of the composite end-to-end gradient.

use super::model::{Batch, TwoWaySystem};
use crate::error::Result;
use crate::mlp::gradcheck::relative_error;
use crate::mlp::{Gradients, MlpNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Which {
    Terminal,
    Relay,
    Demod,
}

fn net_mut(sys: &mut TwoWaySystem, w: Which) -> &mut MlpNetwork {
    match w {
        Which::Terminal => &mut sys.terminal_mod,
        Which::Relay => &mut sys.relay_mod,
        Which::Demod => &mut sys.demod,
    }
}

/// Worst relative error between the analytic end-to-end gradient and central
/// differences of the mean loss, over every parameter of all three networks.
pub fn system_grad_check(sys: &TwoWaySystem, batch: &Batch, step: f64) -> Result<f64> {
    let pass = sys.forward_end_to_end(batch)?;
    let grads = sys.backward_end_to_end(&pass)?;
    let mut probe = sys.clone();
    let mut worst: f64 = 0.0;
    let parts: [(Which, &Gradients); 3] = [
        (Which::Terminal, &grads.terminal),
        (Which::Relay, &grads.relay),
        (Which::Demod, &grads.demod),
    ];
    for (which, g) in parts {
        for (t, tensor) in g.tensors.iter().enumerate() {
            for (i, &analytic) in tensor.iter().enumerate() {
                let orig = net_mut(&mut probe, which).params()[t][i];
                net_mut(&mut probe, which).params_mut()[t][i] = orig + step;
                let plus = probe.forward_end_to_end(batch)?.loss;
                net_mut(&mut probe, which).params_mut()[t][i] = orig - step;
                let minus = probe.forward_end_to_end(batch)?.loss;
                net_mut(&mut probe, which).params_mut()[t][i] = orig;
                worst = worst.max(relative_error(analytic, (plus - minus) / (2.0 * step)));
            }
        }
    }
    Ok(worst)
}
