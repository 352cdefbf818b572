//! Layered networks of quadratic / conventional / pass-through neurons with
//! optional forward shortcut edges and per-parameter trainability masks.
//!
//! Parameters have a canonical flat ordering: layer-major, neuron-minor,
//! each neuron contributing `(w_r, b_r, w_g, b_g, w_b, c)` (quadratic) or
//! `(w, b)` (conventional); shortcut weights follow in edge order.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, QnnError, Result};
use crate::neuron::{Activation, Neuron};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + DeserializeOwned")]
pub struct LayerSpec<T = f64> {
    pub neurons: Vec<Neuron<T>>,
    pub activation: Activation,
}

impl<T: Real> LayerSpec<T> {
    pub fn new(neurons: Vec<Neuron<T>>, activation: Activation) -> Self {
        Self { neurons, activation }
    }

    pub fn width(&self) -> usize {
        self.neurons.len()
    }
}

/// Position of an activation: `layer == 0` is the network input,
/// `layer == k` is the output of the `k`-th layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub layer: usize,
    pub neuron: usize,
}

impl Node {
    pub fn new(layer: usize, neuron: usize) -> Self {
        Self { layer, neuron }
    }
}

/// Adds `weight * activation(from)` into the pre-activation of `to`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + DeserializeOwned")]
pub struct Shortcut<T = f64> {
    pub from: Node,
    pub to: Node,
    pub weight: T,
    pub trainable: bool,
}

/// A feed-forward network of quadratic, conventional and pass-through
/// neurons. `masks` covers neuron parameters in canonical order; shortcut
/// trainability lives on each edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + DeserializeOwned")]
pub struct Network<T = f64> {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec<T>>,
    pub shortcuts: Vec<Shortcut<T>>,
    pub masks: Vec<bool>,
}

/// Gradient of a scalar objective with respect to the trainable parameters,
/// in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle<T = f64> {
    pub values: Vec<T>,
    /// Canonical (full) parameter index of each entry of `values`.
    pub indices: Vec<usize>,
}

impl<T> GradientBundle<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-layer pre- and post-activations from a forward pass.
/// `post[0]` is the input; `pre[0]` is empty.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    pub pre: Vec<Vec<T>>,
    pub post: Vec<Vec<T>>,
}

impl<T: Real> Network<T> {
    /// Builds and validates a network with every parameter trainable.
    pub fn new(input_dim: usize, layers: Vec<LayerSpec<T>>, shortcuts: Vec<Shortcut<T>>) -> Result<Self> {
        let count = layers
            .iter()
            .flat_map(|l| &l.neurons)
            .map(Neuron::param_count)
            .sum();
        let net = Self {
            input_dim,
            layers,
            shortcuts,
            masks: vec![true; count],
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return invalid("network input dimension must be positive");
        }
        if self.layers.is_empty() {
            return invalid("network has no layers");
        }
        let mut width = self.input_dim;
        for (k, layer) in self.layers.iter().enumerate() {
            if layer.neurons.is_empty() {
                return invalid(format!("layer {} is empty", k + 1));
            }
            for n in &layer.neurons {
                n.accepts(width)?;
            }
            width = layer.width();
        }
        for s in &self.shortcuts {
            if s.from.layer >= s.to.layer {
                return invalid("shortcut edges must point forward");
            }
            if s.to.layer > self.layers.len() {
                return invalid("shortcut destination layer out of range");
            }
            if s.from.neuron >= self.width_at(s.from.layer) || s.to.neuron >= self.width_at(s.to.layer) {
                return invalid("shortcut endpoint out of range");
            }
        }
        check_dim(self.neuron_param_count(), self.masks.len())
    }

    /// Width of the activation vector at node layer `layer`.
    pub fn width_at(&self, layer: usize) -> usize {
        if layer == 0 {
            self.input_dim
        } else {
            self.layers[layer - 1].width()
        }
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, LayerSpec::width)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.layers.iter().map(LayerSpec::width).collect()
    }

    pub fn max_width(&self) -> usize {
        self.widths().into_iter().max().unwrap_or(0)
    }

    pub fn neuron_param_count(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| &l.neurons)
            .map(Neuron::param_count)
            .sum()
    }

    pub fn param_count(&self) -> usize {
        self.neuron_param_count() + self.shortcuts.len()
    }

    /// All parameters in canonical order.
    pub fn params(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for n in self.layers.iter().flat_map(|l| &l.neurons) {
            n.write_params(&mut out);
        }
        out.extend(self.shortcuts.iter().map(|s| s.weight));
        out
    }

    pub fn set_params(&mut self, values: &[T]) -> Result<()> {
        check_dim(self.param_count(), values.len())?;
        let mut pos = 0;
        for n in self.layers.iter_mut().flat_map(|l| &mut l.neurons) {
            pos += n.read_params(&values[pos..]);
        }
        for (s, &v) in self.shortcuts.iter_mut().zip(&values[pos..]) {
            s.weight = v;
        }
        Ok(())
    }

    /// Trainability of every parameter in canonical order.
    pub fn trainable_flags(&self) -> Vec<bool> {
        let mut flags = self.masks.clone();
        flags.extend(self.shortcuts.iter().map(|s| s.trainable));
        flags
    }

    pub fn trainable_indices(&self) -> Vec<usize> {
        self.trainable_flags()
            .into_iter()
            .enumerate()
            .filter_map(|(i, t)| t.then_some(i))
            .collect()
    }

    pub fn trainable_count(&self) -> usize {
        self.trainable_flags().into_iter().filter(|&t| t).count()
    }

    /// Marks every neuron parameter of layer `layer` (1-based) as frozen or
    /// trainable.
    pub fn set_layer_trainable(&mut self, layer: usize, trainable: bool) {
        let range = self.layer_param_range(layer);
        self.masks[range].iter_mut().for_each(|m| *m = trainable);
    }

    /// Marks every parameter of neuron `neuron` in layer `layer` (1-based).
    pub fn set_neuron_trainable(&mut self, layer: usize, neuron: usize, trainable: bool) {
        let start = self.layer_param_range(layer).start
            + self.layers[layer - 1].neurons[..neuron]
                .iter()
                .map(Neuron::param_count)
                .sum::<usize>();
        let len = self.layers[layer - 1].neurons[neuron].param_count();
        self.masks[start..start + len].iter_mut().for_each(|m| *m = trainable);
    }

    pub fn freeze_all(&mut self) {
        self.masks.iter_mut().for_each(|m| *m = false);
        self.shortcuts.iter_mut().for_each(|s| s.trainable = false);
    }

    fn layer_param_range(&self, layer: usize) -> std::ops::Range<usize> {
        let start: usize = self.layers[..layer - 1]
            .iter()
            .flat_map(|l| &l.neurons)
            .map(Neuron::param_count)
            .sum();
        let len: usize = self.layers[layer - 1].neurons.iter().map(Neuron::param_count).sum();
        start..start + len
    }

    pub fn forward(&self, x: &[T]) -> Result<Vec<T>> {
        Ok(self.forward_trace(x)?.post.pop().unwrap_or_default())
    }

    /// Convenience for single-output networks.
    pub fn eval_scalar(&self, x: &[T]) -> Result<T> {
        Ok(self.forward(x)?[0])
    }

    pub fn forward_trace(&self, x: &[T]) -> Result<Trace<T>> {
        check_dim(self.input_dim, x.len())?;
        let mut pre = Vec::with_capacity(self.layers.len() + 1);
        let mut post = Vec::with_capacity(self.layers.len() + 1);
        pre.push(Vec::new());
        post.push(x.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let k = k + 1;
            let input = &post[k - 1];
            let mut z: Vec<T> = layer.neurons.iter().map(|n| n.eval_unchecked(input)).collect();
            for s in self.shortcuts.iter().filter(|s| s.to.layer == k) {
                z[s.to.neuron] = z[s.to.neuron] + s.weight * post[s.from.layer][s.from.neuron];
            }
            let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            post.push(a);
        }
        Ok(Trace { pre, post })
    }

    /// Exact gradient of `upstream · forward(x)` with respect to every
    /// trainable parameter.
    pub fn backward(&self, x: &[T], upstream: &[T]) -> Result<GradientBundle<T>> {
        let full = self.backward_full(x, upstream)?;
        let indices = self.trainable_indices();
        let values = indices.iter().map(|&i| full[i]).collect();
        Ok(GradientBundle { values, indices })
    }

    /// Gradient with respect to all parameters (frozen included), canonical order.
    pub fn backward_full(&self, x: &[T], upstream: &[T]) -> Result<Vec<T>> {
        let trace = self.forward_trace(x)?;
        check_dim(self.output_dim(), upstream.len())?;
        let depth = self.layers.len();
        let mut grad_post: Vec<Vec<T>> = trace.post.iter().map(|a| vec![T::zero(); a.len()]).collect();
        grad_post[depth].copy_from_slice(upstream);

        let mut grad = vec![T::zero(); self.param_count()];
        let shortcut_base = self.neuron_param_count();
        let mut layer_end = shortcut_base;

        for k in (1..=depth).rev() {
            let layer = &self.layers[k - 1];
            let layer_params: usize = layer.neurons.iter().map(Neuron::param_count).sum();
            let layer_start = layer_end - layer_params;
            layer_end = layer_start;

            let deltas: Vec<T> = grad_post[k]
                .iter()
                .zip(&trace.pre[k])
                .map(|(&g, &z)| g * layer.activation.derivative(z))
                .collect();

            let (below, _) = grad_post.split_at_mut(k);
            let grad_in = &mut below[k - 1];
            let mut off = layer_start;
            for (neuron, &delta) in layer.neurons.iter().zip(&deltas) {
                let pc = neuron.param_count();
                neuron.backprop(&trace.post[k - 1], delta, &mut grad[off..off + pc], grad_in);
                off += pc;
            }
            for (e, s) in self.shortcuts.iter().enumerate().filter(|(_, s)| s.to.layer == k) {
                let delta = deltas[s.to.neuron];
                grad[shortcut_base + e] = delta * trace.post[s.from.layer][s.from.neuron];
                let g = &mut grad_post[s.from.layer][s.from.neuron];
                *g = *g + delta * s.weight;
            }
        }
        Ok(grad)
    }
}

impl<T: Real + Serialize + DeserializeOwned> Network<T> {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| QnnError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(s).map_err(|e| QnnError::Serialization(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::{ConventionalNeuron, QuadraticNeuron};

    fn norm_net() -> Network {
        Network::new(
            2,
            vec![LayerSpec::new(
                vec![QuadraticNeuron::squared_norm(2, 0.0).into()],
                Activation::Identity,
            )],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn single_norm_neuron() {
        assert_eq!(norm_net().forward(&[3.0, 4.0]).unwrap(), vec![25.0]);
    }

    #[test]
    fn two_layer_composition() {
        let mut net = norm_net();
        net.layers.push(LayerSpec::new(
            vec![ConventionalNeuron::new(vec![1.0], -25.0).unwrap().into()],
            Activation::Identity,
        ));
        net.masks.extend([true, true]);
        net.validate().unwrap();
        assert_eq!(net.forward(&[3.0, 4.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn norm_neuron_gradients() {
        let net = norm_net();
        let g = net.backward(&[3.0, 4.0], &[1.0]).unwrap();
        // canonical: w_r(2), b_r, w_g(2), b_g, w_b(2), c
        assert_eq!(g.len(), 9);
        assert_eq!(&g.values[6..8], &[9.0, 16.0]);
        assert_eq!(g.values[8], 1.0);
    }

    #[test]
    fn frozen_parameters_get_no_entry() {
        let mut net = norm_net();
        net.set_neuron_trainable(1, 0, false);
        assert!(net.backward(&[1.0, 2.0], &[1.0]).unwrap().is_empty());
        net.masks[8] = true;
        let g = net.backward(&[1.0, 2.0], &[1.0]).unwrap();
        assert_eq!(g.indices, vec![8]);
        assert_eq!(g.values, vec![1.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        let net = norm_net();
        assert!(net.forward(&[1.0]).is_err());
        assert!(net.backward(&[1.0, 1.0], &[1.0, 1.0]).is_err());
        let back = Shortcut {
            from: Node::new(1, 0),
            to: Node::new(1, 0),
            weight: 1.0,
            trainable: true,
        };
        assert!(Network::new(2, norm_net().layers, vec![back]).is_err());
        let bad_width = LayerSpec::new(
            vec![ConventionalNeuron::new(vec![1.0, 1.0], 0.0).unwrap().into()],
            Activation::Relu,
        );
        let mut layers = norm_net().layers;
        layers.push(bad_width);
        assert!(Network::new(2, layers, vec![]).is_err());
    }

    #[test]
    fn shortcut_feeds_preactivation() {
        let layers = vec![
            LayerSpec::new(vec![QuadraticNeuron::squared_norm(1, 0.0).into()], Activation::Identity),
            LayerSpec::new(
                vec![ConventionalNeuron::new(vec![2.0], 0.0).unwrap().into()],
                Activation::Relu,
            ),
        ];
        let sc = Shortcut {
            from: Node::new(0, 0),
            to: Node::new(2, 0),
            weight: -3.0,
            trainable: true,
        };
        let net = Network::new(1, layers, vec![sc]).unwrap();
        // 2 x^2 - 3x at x = 2 → 2, at x = 1 → relu(-1) = 0
        assert_eq!(net.forward(&[2.0]).unwrap(), vec![2.0]);
        assert_eq!(net.forward(&[1.0]).unwrap(), vec![0.0]);
        let g = net.backward(&[2.0], &[1.0]).unwrap();
        assert_eq!(*g.values.last().unwrap(), 2.0);
    }

    #[test]
    fn params_round_trip() {
        let mut net = norm_net();
        let p: Vec<f64> = (0..net.param_count()).map(|i| i as f64 * 0.5 - 1.0).collect();
        net.set_params(&p).unwrap();
        assert_eq!(net.params(), p);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut net = norm_net();
        let p: Vec<f64> = (0..net.param_count()).map(|i| (i as f64 + 0.1).sqrt() / 3.0).collect();
        net.set_params(&p).unwrap();
        let back = Network::<f64>::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
        assert!(back
            .params()
            .iter()
            .zip(&p)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
