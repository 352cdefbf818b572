//! Trainable factorization network with fixed product connections.
//!
//! Layer 1 holds one trainable quadratic neuron per factor, learning a
//! shifted factor `T_i = m_i + C_i`. Frozen quadratic neurons then form
//! every subset product up to the full product, and a trainable linear
//! read-out combines the full product with shortcuts from every partial
//! product. Since `∏(m_i + C_i) − ∏m_i` is a linear combination of partial
//! products plus a constant, the read-out can undo any offsets.

use std::collections::HashMap;

use crate::error::{invalid, Result};
use crate::network::{LayerSpec, Network, Node, Shortcut};
use crate::neuron::{Activation, ConventionalNeuron, Neuron, QuadraticNeuron};

/// Largest supported factor count (the subset layers grow as `2^k`).
pub const MAX_FACTORS: usize = 6;

/// Where the pieces of a factorization network live.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorLayout {
    pub factors: usize,
    /// `(subset of factor indices, node)` for every partial product.
    pub partial_products: Vec<(Vec<usize>, Node)>,
    /// Node holding the full product.
    pub full_product: Node,
}

fn subsets(k: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i + 1, k, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, size, &mut Vec::new(), &mut out);
    out
}

/// Builds the network for a degree-`degree` polynomial with `linear`
/// linear and `quadratic` quadratic factors. Factor neurons start at the
/// constant 1 and the read-out at the plain full product.
pub fn build_factorization_trainable(degree: usize, linear: usize, quadratic: usize) -> Result<(Network, FactorLayout)> {
    if linear + 2 * quadratic != degree || degree == 0 {
        return invalid(format!(
            "factor counts inconsistent with degree: {linear} + 2*{quadratic} != {degree}"
        ));
    }
    let k = linear + quadratic;
    if k > MAX_FACTORS {
        return invalid(format!("at most {MAX_FACTORS} factors are supported"));
    }

    let mut layers = Vec::with_capacity(k + 1);
    let factor = QuadraticNeuron { c: 1.0, ..QuadraticNeuron::zeros(1) };
    layers.push(LayerSpec::new(vec![Neuron::from(factor); k], Activation::Identity));

    let mut partial_products = Vec::new();
    // Channel of each subset (and of each pass-through single) in the latest layer.
    let mut subset_at: HashMap<Vec<usize>, usize> = (0..k).map(|i| (vec![i], i)).collect();
    let mut single_at: HashMap<usize, usize> = (0..k).map(|i| (i, i)).collect();
    for i in 0..k {
        if k > 1 {
            partial_products.push((vec![i], Node::new(1, i)));
        }
    }

    for size in 2..=k {
        let width = layers.last().map_or(1, LayerSpec::width);
        let mut neurons = Vec::new();
        let mut next_subset = HashMap::new();
        for s in subsets(k, size) {
            let rest = s[1..].to_vec();
            let q = QuadraticNeuron::product(width, single_at[&s[0]], subset_at[&rest], 1.0);
            next_subset.insert(s.clone(), neurons.len());
            if size < k {
                partial_products.push((s, Node::new(layers.len() + 1, neurons.len())));
            }
            neurons.push(Neuron::from(q));
        }
        let mut next_single = HashMap::new();
        if size < k {
            for i in 0..k - size {
                next_single.insert(i, neurons.len());
                neurons.push(Neuron::Passthrough { index: single_at[&i] });
            }
        }
        layers.push(LayerSpec::new(neurons, Activation::Identity));
        subset_at = next_subset;
        single_at = next_single;
    }

    let full_product = Node::new(layers.len(), subset_at[&(0..k).collect::<Vec<_>>()]);
    let width = layers.last().map_or(1, LayerSpec::width);
    let mut w = vec![0.0; width];
    w[full_product.neuron] = 1.0;
    let out_layer = layers.len() + 1;
    layers.push(LayerSpec::new(
        vec![ConventionalNeuron { w, b: 0.0 }.into()],
        Activation::Identity,
    ));

    let shortcuts = partial_products
        .iter()
        .map(|(_, node)| Shortcut {
            from: *node,
            to: Node::new(out_layer, 0),
            weight: 0.0,
            trainable: true,
        })
        .collect();

    let mut net = Network::new(1, layers, shortcuts)?;
    for layer in 2..out_layer {
        net.set_layer_trainable(layer, false);
    }
    Ok((
        net,
        FactorLayout {
            factors: k,
            partial_products,
            full_product,
        },
    ))
}

/// `[x², x, 1]` coefficients of each first-layer factor neuron.
pub fn factor_coefficients(net: &Network) -> Vec<[f64; 3]> {
    net.layers[0]
        .neurons
        .iter()
        .filter_map(|n| match n {
            Neuron::Quadratic(q) if q.input_dim() == 1 => Some([
                q.w_r[0] * q.w_g[0] + q.w_b[0],
                q.w_r[0] * q.b_g + q.b_r * q.w_g[0],
                q.b_r * q.b_g + q.c,
            ]),
            _ => None,
        })
        .collect()
}

/// Sets factor neuron `i` to `x² a + x b + c` given as `[a, b, c]`.
pub fn set_factor(net: &mut Network, i: usize, coeffs: [f64; 3]) -> Result<()> {
    match net.layers[0].neurons.get_mut(i) {
        Some(Neuron::Quadratic(q)) if q.input_dim() == 1 => {
            *q = QuadraticNeuron {
                w_r: vec![coeffs[1]],
                b_r: coeffs[2],
                w_g: vec![0.0],
                b_g: 1.0,
                w_b: vec![coeffs[0]],
                c: 0.0,
            };
            Ok(())
        }
        _ => invalid(format!("no scalar factor neuron at index {i}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quintic_layout() {
        let (net, layout) = build_factorization_trainable(5, 1, 2).unwrap();
        assert_eq!(net.widths(), vec![3, 4, 1, 1]);
        assert_eq!(layout.partial_products.len(), 6);
        assert_eq!(net.trainable_count(), 3 * 6 + 2 + 6);
        let frozen = net.trainable_flags().iter().filter(|t| !**t).count();
        assert!(frozen > 0);
    }

    #[test]
    fn zero_offset_is_plain_product() {
        let (mut net, _) = build_factorization_trainable(5, 1, 2).unwrap();
        set_factor(&mut net, 0, [0.0, 1.0, -1.0]).unwrap();
        set_factor(&mut net, 1, [1.0, 0.0, 1.0]).unwrap();
        set_factor(&mut net, 2, [1.0, 1.7, 1.2]).unwrap();
        for x in [-1.0, -0.5, 0.0, 0.7] {
            let want = (x - 1.0) * (x * x + 1.0) * (x * x + 1.7 * x + 1.2);
            assert!((net.eval_scalar(&[x]).unwrap() - want).abs() < 1e-12);
        }
        assert_eq!(factor_coefficients(&net)[2], [1.0, 1.7, 1.2]);
    }

    #[test]
    fn offsets_are_undone_by_readout() {
        // (m1 + 1)(m2 + 2) = m1 m2 + 2 m1 + m2 + 2, so m1 m2 = T1T2 − 2T1 − T2 + 2.
        let (mut net, layout) = build_factorization_trainable(2, 2, 0).unwrap();
        set_factor(&mut net, 0, [0.0, 1.0, 1.0]).unwrap();
        set_factor(&mut net, 1, [0.0, 1.0, 2.0]).unwrap();
        assert_eq!(layout.partial_products.len(), 2);
        net.shortcuts[0].weight = -2.0;
        net.shortcuts[1].weight = -1.0;
        if let Neuron::Conventional(c) = &mut net.layers[2].neurons[0] {
            c.b = 2.0;
        }
        for x in [-1.0, 0.25, 3.0] {
            assert!((net.eval_scalar(&[x]).unwrap() - x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn larger_factor_counts_compute_products() {
        let (mut net, _) = build_factorization_trainable(5, 5, 0).unwrap();
        for i in 0..5 {
            set_factor(&mut net, i, [0.0, 1.0, -(i as f64)]).unwrap();
        }
        let x = 2.5;
        let want: f64 = (0..5).map(|i| x - i as f64).product();
        assert!((net.eval_scalar(&[x]).unwrap() - want).abs() < 1e-12);
        assert!(net.max_width() <= 16);
    }

    #[test]
    fn inconsistent_counts_rejected() {
        assert!(build_factorization_trainable(5, 2, 2).is_err());
        assert!(build_factorization_trainable(0, 0, 0).is_err());
    }
}
