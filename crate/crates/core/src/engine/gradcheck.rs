//! Finite-difference check of [`DenseNet`] gradients.
//!
//! The loss is `0.5 * |f(x)|^2` for a single input row. Each parameter is
//! nudged by `+-epsilon` and the loss re-evaluated exactly; since a
//! parameter of layer l only enters through one pre-activation of that
//! layer, the perturbed pass starts from that unit instead of the input.
//! Parameters whose nudge flips any ReLU are skipped and counted.

use super::nn::{DenseNet, Tape};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub checked: usize,
    pub skipped: usize,
}

/// Denominator floor for relative errors of near-zero gradients.
pub const RELATIVE_FLOOR: f64 = 1e-6;

struct Pass {
    /// Input of every layer.
    inputs: Vec<Vec<f64>>,
    /// Pre-activation of every layer (the last one is the output).
    pre: Vec<Vec<f64>>,
}

fn layer_weights(net: &DenseNet, l: usize) -> (&[f64], &[f64]) {
    let off = net.layer_offset(l);
    let (i, o) = (net.sizes[l], net.sizes[l + 1]);
    (&net.params[off..off + i * o], &net.params[off + i * o..off + i * o + o])
}

fn full_pass(net: &DenseNet, input: &[f64]) -> Pass {
    let mut inputs = Vec::new();
    let mut pre = Vec::new();
    let mut a = input.to_vec();
    for l in 0..net.layers() {
        let (w, b) = layer_weights(net, l);
        let o = net.sizes[l + 1];
        let mut z = b.to_vec();
        for (i, &ai) in a.iter().enumerate() {
            if ai != 0.0 {
                for (zj, wj) in z.iter_mut().zip(&w[i * o..(i + 1) * o]) {
                    *zj += ai * wj;
                }
            }
        }
        inputs.push(a);
        a = if l + 1 < net.layers() { z.iter().map(|v| v.max(0.0)).collect() } else { z.clone() };
        pre.push(z);
    }
    Pass { inputs, pre }
}

/// Loss after adding `dz` to pre-activation `j` of layer `l`; `None` when a
/// ReLU changes state.
fn perturbed_loss(net: &DenseNet, base: &Pass, l: usize, j: usize, dz: f64) -> Option<f64> {
    let last = net.layers() - 1;
    let mut z = base.pre[l].clone();
    z[j] += dz;
    if l < last && (z[j] > 0.0) != (base.pre[l][j] > 0.0) {
        return None;
    }
    let mut layer = l;
    let mut delta_unit = Some((j, z[j].max(0.0) - base.pre[l][j].max(0.0)));
    while layer < last {
        let next = layer + 1;
        let (w, b) = layer_weights(net, next);
        let o = net.sizes[next + 1];
        let mut zn = match delta_unit.take() {
            Some((unit, dh)) => {
                let mut zn = base.pre[next].clone();
                for (v, wv) in zn.iter_mut().zip(&w[unit * o..(unit + 1) * o]) {
                    *v += dh * wv;
                }
                zn
            }
            None => {
                let h: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
                let mut zn = b.to_vec();
                for (i, &hi) in h.iter().enumerate() {
                    if hi != 0.0 {
                        for (v, wv) in zn.iter_mut().zip(&w[i * o..(i + 1) * o]) {
                            *v += hi * wv;
                        }
                    }
                }
                zn
            }
        };
        if next < last && zn.iter().zip(&base.pre[next]).any(|(a, b)| (*a > 0.0) != (*b > 0.0)) {
            return None;
        }
        std::mem::swap(&mut z, &mut zn);
        layer = next;
    }
    Some(0.5 * z.iter().map(|v| v * v).sum::<f64>())
}

/// Largest relative difference between backpropagated gradients and central
/// finite differences over all parameters of `net` (dropout disabled).
pub fn grad_check(net: &DenseNet, input: &[f64], epsilon: f64) -> Result<GradCheckReport> {
    if input.len() != net.input_dim() {
        return Err(Error::Shape(format!(
            "grad check input has {} values, network expects {}",
            input.len(),
            net.input_dim()
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::config("epsilon must be positive"));
    }
    let mut plain = net.clone();
    plain.dropout = 0.0;
    let mut tape = Tape::default();
    let out = plain.forward_train::<rand_chacha::ChaCha8Rng>(input, 1, None, &mut tape);
    let mut analytic = vec![0.0; plain.param_count()];
    plain.backward(&tape, &out, &mut analytic, false);

    let base = full_pass(&plain, input);
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        checked: 0,
        skipped: 0,
    };
    for l in 0..plain.layers() {
        let (fan_in, fan_out) = (plain.sizes[l], plain.sizes[l + 1]);
        let off = plain.layer_offset(l);
        for p in 0..fan_in * fan_out + fan_out {
            let (j, scale) = if p < fan_in * fan_out {
                (p % fan_out, base.inputs[l][p / fan_out])
            } else {
                (p - fan_in * fan_out, 1.0)
            };
            let numeric = if scale == 0.0 {
                0.0
            } else {
                let up = perturbed_loss(&plain, &base, l, j, epsilon * scale);
                let down = perturbed_loss(&plain, &base, l, j, -epsilon * scale);
                match (up, down) {
                    (Some(u), Some(d)) => (u - d) / (2.0 * epsilon),
                    _ => {
                        report.skipped += 1;
                        continue;
                    }
                }
            };
            let a = analytic[off + p];
            let denom = a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
            let rel = (a - numeric).abs() / denom;
            if !rel.is_finite() {
                report.max_relative_error = f64::INFINITY;
            } else {
                report.max_relative_error = report.max_relative_error.max(rel);
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
