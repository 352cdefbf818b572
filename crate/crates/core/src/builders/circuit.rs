//! Layer-level plumbing: re-indexing neurons and running identity-activated
//! sub-circuits side by side.

use crate::network::LayerSpec;
use crate::neuron::{Activation, ConventionalNeuron, Neuron, QuadraticNeuron};

/// A stack of identity-activated layers whose first layer reads
/// `inputs[j]` of the enclosing activation vector as its local input `j`.
#[derive(Debug, Clone)]
pub(crate) struct Part {
    pub layers: Vec<LayerSpec>,
    pub inputs: Vec<usize>,
}

/// Rewrites `neuron` so that local input `j` reads `map[j]` of a `width`-wide vector.
pub(crate) fn remap(neuron: &Neuron, map: &[usize], width: usize) -> Neuron {
    let scatter = |v: &[f64]| {
        let mut out = vec![0.0; width];
        for (j, &w) in v.iter().enumerate() {
            out[map[j]] += w;
        }
        out
    };
    match neuron {
        Neuron::Quadratic(q) => Neuron::Quadratic(QuadraticNeuron {
            w_r: scatter(&q.w_r),
            b_r: q.b_r,
            w_g: scatter(&q.w_g),
            b_g: q.b_g,
            w_b: scatter(&q.w_b),
            c: q.c,
        }),
        Neuron::Conventional(c) => Neuron::Conventional(ConventionalNeuron {
            w: scatter(&c.w),
            b: c.b,
        }),
        Neuron::Passthrough { index } => Neuron::Passthrough { index: map[*index] },
    }
}

pub(crate) fn passthrough_layer(width: usize) -> LayerSpec {
    LayerSpec::new(
        (0..width).map(|index| Neuron::Passthrough { index }).collect(),
        Activation::Identity,
    )
}

/// Runs parts in parallel over a `width`-wide input, padding shallower parts
/// with pass-through layers. Outputs are concatenated in part order.
pub(crate) fn parallel(parts: &[Part], width: usize) -> Vec<LayerSpec> {
    let depth = parts.iter().map(|p| p.layers.len()).max().unwrap_or(0);
    let padded: Vec<Vec<LayerSpec>> = parts
        .iter()
        .map(|p| {
            let mut layers = p.layers.clone();
            while layers.len() < depth {
                let w = layers.last().map_or(p.inputs.len(), LayerSpec::width);
                layers.push(passthrough_layer(w));
            }
            layers
        })
        .collect();

    let mut out = Vec::with_capacity(depth);
    let mut prev_offsets: Vec<usize> = Vec::new();
    let mut prev_width = width;
    for k in 0..depth {
        let mut neurons = Vec::new();
        let mut offsets = Vec::with_capacity(parts.len());
        for (pi, layers) in padded.iter().enumerate() {
            offsets.push(neurons.len());
            let map: Vec<usize> = if k == 0 {
                parts[pi].inputs.clone()
            } else {
                let w = padded[pi][k - 1].width();
                (0..w).map(|j| prev_offsets[pi] + j).collect()
            };
            neurons.extend(layers[k].neurons.iter().map(|n| remap(n, &map, prev_width)));
        }
        prev_width = neurons.len();
        prev_offsets = offsets;
        out.push(LayerSpec::new(neurons, Activation::Identity));
    }
    out
}

/// Pairwise product layers reducing `k ≥ 1` channels to one.
pub(crate) fn product_tree(k: usize) -> Vec<LayerSpec> {
    let mut layers = Vec::new();
    let mut width = k;
    while width > 1 {
        let mut neurons: Vec<Neuron> = (0..width / 2)
            .map(|i| QuadraticNeuron::product(width, 2 * i, 2 * i + 1, 1.0).into())
            .collect();
        if width % 2 == 1 {
            neurons.push(Neuron::Passthrough { index: width - 1 });
        }
        width = neurons.len();
        layers.push(LayerSpec::new(neurons, Activation::Identity));
    }
    layers
}
