#![allow(dead_code)]

use qnn_core::{Activation, ConventionalNeuron, LayerSpec, Network, Neuron, Node, Polynomial, QuadraticNeuron, Shortcut};
use rand::Rng;

fn uniform_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-scale..=scale)).collect()
}

pub fn random_neuron(rng: &mut impl Rng, n: usize, allow_passthrough: bool) -> Neuron {
    match rng.gen_range(0..if allow_passthrough { 3 } else { 2 }) {
        0 => QuadraticNeuron {
            w_r: uniform_vec(rng, n, 1.0),
            b_r: rng.gen_range(-1.0..=1.0),
            w_g: uniform_vec(rng, n, 1.0),
            b_g: rng.gen_range(-1.0..=1.0),
            w_b: uniform_vec(rng, n, 1.0),
            c: rng.gen_range(-1.0..=1.0),
        }
        .into(),
        1 => ConventionalNeuron { w: uniform_vec(rng, n, 1.0), b: rng.gen_range(-1.0..=1.0) }.into(),
        _ => Neuron::Passthrough { index: rng.gen_range(0..n) },
    }
}

/// 1–4 layers of width 1–4 with mixed neuron kinds and activations, and
/// (when `shortcuts` is set) up to three forward shortcut edges.
pub fn random_network(rng: &mut impl Rng, shortcuts: bool) -> Network {
    let input_dim = rng.gen_range(1..=3);
    let depth = rng.gen_range(1..=4);
    let mut layers = Vec::with_capacity(depth);
    let mut width = input_dim;
    for k in 0..depth {
        let out = if k + 1 == depth { rng.gen_range(1..=2) } else { rng.gen_range(1..=4) };
        let neurons = (0..out).map(|_| random_neuron(rng, width, true)).collect();
        let activation = if rng.gen_bool(0.5) { Activation::Relu } else { Activation::Identity };
        layers.push(LayerSpec::new(neurons, activation));
        width = out;
    }
    let mut net = Network::new(input_dim, layers, vec![]).unwrap();
    if shortcuts && depth >= 1 {
        for _ in 0..rng.gen_range(1..=3) {
            let to_layer = rng.gen_range(1..=depth);
            let from_layer = rng.gen_range(0..to_layer);
            net.shortcuts.push(Shortcut {
                from: Node::new(from_layer, rng.gen_range(0..net.width_at(from_layer))),
                to: Node::new(to_layer, rng.gen_range(0..net.width_at(to_layer))),
                weight: rng.gen_range(-1.0..=1.0),
                trainable: rng.gen_bool(0.8),
            });
        }
    }
    for m in net.masks.iter_mut() {
        *m = rng.gen_bool(0.85);
    }
    net.validate().unwrap();
    net
}

/// True if any ReLU pre-activation of `x` lies within `margin` of the kink.
pub fn near_kink(net: &Network, x: &[f64], margin: f64) -> bool {
    let trace = net.forward_trace(x).unwrap();
    net.layers.iter().enumerate().any(|(k, layer)| {
        layer.activation == Activation::Relu && trace.pre[k + 1].iter().any(|z| z.abs() < margin)
    })
}

/// Random point away from every ReLU kink, if one is found quickly.
pub fn smooth_point(net: &Network, rng: &mut impl Rng) -> Option<Vec<f64>> {
    (0..50)
        .map(|_| uniform_vec(rng, net.input_dim, 1.0))
        .find(|x| !near_kink(net, x, 1e-3))
}

/// `|a − b| / max(1, |a|, |b|)`.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Degree `degree` with coefficients uniform in [−1, 1] and a leading
/// coefficient of magnitude at least 0.1.
pub fn random_polynomial(rng: &mut impl Rng, degree: usize) -> Polynomial {
    let mut c = uniform_vec(rng, degree + 1, 1.0);
    let lead = rng.gen_range(0.1..=1.0);
    c[degree] = if rng.gen_bool(0.5) { lead } else { -lead };
    Polynomial::new(c)
}

/// Monic-scaled polynomial with roots drawn in the disk `|z| ≤ 2`
/// (real roots and conjugate pairs).
pub fn polynomial_with_roots_in_disk(rng: &mut impl Rng, degree: usize) -> Polynomial {
    let mut p = Polynomial::new(vec![rng.gen_range(0.5..=2.0)]);
    let mut left = degree;
    while left > 0 {
        if left >= 2 && rng.gen_bool(0.5) {
            let r = rng.gen_range(0.0..=2.0f64);
            let th = rng.gen_range(0.0..std::f64::consts::PI);
            let (u, v) = (r * th.cos(), r * th.sin());
            p = p.mul(&Polynomial::new(vec![u * u + v * v, -2.0 * u, 1.0]));
            left -= 2;
        } else {
            p = p.mul(&Polynomial::new(vec![-rng.gen_range(-2.0..=2.0), 1.0]));
            left -= 1;
        }
    }
    p
}

/// Piecewise-linear profile on `[r, R]` through random knots with slopes in
/// `[−L, L]`, constant outside.
#[derive(Debug, Clone)]
pub struct PiecewiseLinear {
    pub knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn random(rng: &mut impl Rng, r: f64, big_r: f64, lipschitz: f64) -> Self {
        let pieces = rng.gen_range(1..=8);
        let mut ts: Vec<f64> = (0..pieces - 1).map(|_| rng.gen_range(r..big_r)).collect();
        ts.push(r);
        ts.push(big_r);
        ts.sort_by(f64::total_cmp);
        let mut v = rng.gen_range(-2.0..=2.0);
        let mut knots = vec![(ts[0], v)];
        for w in ts.windows(2) {
            v += rng.gen_range(-lipschitz..=lipschitz) * (w[1] - w[0]);
            knots.push((w[1], v));
        }
        Self { knots }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if t <= first.0 {
            return first.1;
        }
        if t >= last.0 {
            return last.1;
        }
        for w in self.knots.windows(2) {
            let ((t0, v0), (t1, v1)) = (w[0], w[1]);
            if t <= t1 {
                return if t1 > t0 { v0 + (v1 - v0) * (t - t0) / (t1 - t0) } else { v1 };
            }
        }
        last.1
    }
}
