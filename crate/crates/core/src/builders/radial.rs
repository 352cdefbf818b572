//! Radial approximators: a one-hidden-layer interpolant in the squared norm,
//! and the width-4 deep stack of truncated-parabola modules.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::network::{LayerSpec, Network};
use crate::neuron::{Activation, ConventionalNeuron, Neuron, QuadraticNeuron};

/// Worst-case ratio of the interpolation error to `L·h` when a Lipschitz
/// function is interpolated linearly in `u = t²` over a `t`-interval of
/// length `h`: `max_s s + s² − 2s³ ≈ 0.5282`.
const SQUARED_INTERP_FACTOR: f64 = 0.5282;

/// One-hidden-layer quadratic network `h(x) = a + Σ α_i relu(||x||² − γ_i)`
/// approximating the radial profile `f(||x||)` to sup error below `delta`.
///
/// `f` must be `lipschitz`-Lipschitz on `[r, big_r]` and constant outside.
/// The hidden width never exceeds `floor((R − r)L/δ) + 1`.
pub fn build_shallow_radial(
    f: impl Fn(f64) -> f64,
    r: f64,
    big_r: f64,
    lipschitz: f64,
    delta: f64,
    input_dim: usize,
) -> Result<Network> {
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    if !(r < big_r) || r < 0.0 {
        return invalid("need 0 <= r < R");
    }
    if !(lipschitz > 0.0) {
        return invalid("Lipschitz constant must be positive");
    }
    if input_dim == 0 {
        return invalid("input dimension must be positive");
    }
    let ratio = (big_r - r) * lipschitz / delta;
    let base = f(r);
    if ratio < 1.0 {
        let out = ConventionalNeuron::new(vec![0.0; input_dim], base)?;
        return Network::new(
            input_dim,
            vec![LayerSpec::new(vec![out.into()], Activation::Identity)],
            vec![],
        );
    }

    // k pieces of t-length h with L·h·SQUARED_INTERP_FACTOR < δ, subject to
    // the k + 1 hidden units fitting the width budget.
    let budget = ratio.floor() as usize;
    let mut pieces = (ratio / (1.0 / SQUARED_INTERP_FACTOR - 0.01)).floor() as usize + 1;
    let recenter = pieces > budget;
    pieces = pieces.min(budget).max(1);

    let h = (big_r - r) / pieces as f64;
    let knots_t: Vec<f64> = (0..=pieces)
        .map(|i| if i == pieces { big_r } else { r + h * i as f64 })
        .collect();
    let knots_u: Vec<f64> = knots_t.iter().map(|t| t * t).collect();
    let values: Vec<f64> = knots_t.iter().map(|&t| f(t)).collect();
    let slopes: Vec<f64> = (0..pieces)
        .map(|i| (values[i + 1] - values[i]) / (knots_u[i + 1] - knots_u[i]))
        .collect();

    // Unit i switches on at γ_i and changes the slope by α_i; the last unit
    // cancels the final slope so the output is constant beyond R.
    let mut alphas = Vec::with_capacity(pieces + 1);
    let mut prev = 0.0;
    for &s in &slopes {
        alphas.push(s - prev);
        prev = s;
    }
    alphas.push(-prev);

    let mut offset = base;
    if recenter {
        // Too few pieces for plain interpolation: centre the error band.
        let eval = |t: f64| {
            let u = t * t;
            base + knots_u
                .iter()
                .zip(&alphas)
                .map(|(&g, &a)| a * (u - g).max(0.0))
                .sum::<f64>()
        };
        let (lo, hi) = (0..=4000)
            .map(|i| {
                let t = r + (big_r - r) * i as f64 / 4000.0;
                f(t) - eval(t)
            })
            .fold((0.0f64, 0.0f64), |(lo, hi), e| (lo.min(e), hi.max(e)));
        offset += 0.5 * (lo + hi);
    }

    let hidden: Vec<Neuron> = knots_u
        .iter()
        .map(|&g| QuadraticNeuron::squared_norm(input_dim, -g).into())
        .collect();
    let out = ConventionalNeuron::new(alphas, offset)?;
    Network::new(
        input_dim,
        vec![
            LayerSpec::new(hidden, Activation::Relu),
            LayerSpec::new(vec![out.into()], Activation::Identity),
        ],
        vec![],
    )
}

/// Hidden width of a network produced by [`build_shallow_radial`].
pub fn shallow_hidden_units(net: &Network) -> usize {
    if net.depth() == 1 {
        0
    } else {
        net.layers[0].width()
    }
}

/// Breakpoints `a_0 < … < a_m`, signed heights `b_0 … b_{m−1}` and the
/// ramp fraction `delta ∈ (0, 1/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialPartition {
    pub breakpoints: Vec<f64>,
    pub heights: Vec<f64>,
    pub delta: f64,
}

impl RadialPartition {
    pub fn new(breakpoints: Vec<f64>, heights: Vec<f64>, delta: f64) -> Result<Self> {
        let p = Self { breakpoints, heights, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.heights.is_empty() {
            return invalid("partition has no intervals");
        }
        if self.breakpoints.len() != self.heights.len() + 1 {
            return invalid("need exactly one more breakpoint than heights");
        }
        if self.breakpoints[0] < 0.0 || self.breakpoints.iter().any(|v| !v.is_finite()) {
            return invalid("breakpoints must be finite and non-negative");
        }
        if self.breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return invalid("breakpoints must be strictly increasing");
        }
        if !(self.delta > 0.0 && self.delta < 0.5) {
            return invalid("delta must lie in (0, 1/2)");
        }
        Ok(())
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.heights)
            .map(|(w, &b)| (w[0], w[1], b))
    }

    /// The piecewise-constant profile the partition stands for.
    pub fn step_value(&self, t: f64) -> f64 {
        self.intervals()
            .find(|&(lo, hi, _)| t >= lo && t < hi)
            .map_or(0.0, |(_, _, b)| b)
    }

    /// `δ = ε / (4C)` with `C = Σ |b_i| (a_{i+1} − a_i)`, capped below 1/2.
    pub fn delta_for_accuracy(breakpoints: &[f64], heights: &[f64], eps: f64) -> f64 {
        let mass: f64 = breakpoints
            .windows(2)
            .zip(heights)
            .map(|(w, b)| b.abs() * (w[1] - w[0]))
            .sum();
        if mass == 0.0 {
            0.25
        } else {
            (eps / (4.0 * mass)).min(0.49)
        }
    }
}

/// Plateau `[lo, hi]` in `t` on which a module outputs its height exactly.
pub fn parabola_plateau(a_lo: f64, a_hi: f64, delta: f64) -> (f64, f64) {
    let p = a_lo + delta * (a_hi - a_lo);
    (p, (a_hi * a_hi + a_lo * a_lo - p * p).sqrt())
}

fn module_scale(a_lo: f64, a_hi: f64, delta: f64) -> f64 {
    let p = a_lo + delta * (a_hi - a_lo);
    (p * p - a_lo * a_lo) * (a_hi * a_hi - p * p)
}

fn selector(width: usize, entries: &[(usize, f64)]) -> Vec<f64> {
    let mut w = vec![0.0; width];
    for &(i, v) in entries {
        w[i] += v;
    }
    w
}

/// Incoming state of a module after the first: width 2 `[u, R]` straight
/// after the first module, width 4 `[u, R, K⁺, K⁻]` afterwards.
#[derive(Clone, Copy)]
struct Carry {
    prev_height: f64,
    width: usize,
}

/// The three layers of one truncated-parabola module. Channel 0 carries
/// `u = ||x||²`, channel 1 the module signal, channels 2 and 3 the running
/// sums of finished non-negative and negative modules.
fn module_layers(a_lo: f64, a_hi: f64, height: f64, delta: f64, carry: Option<Carry>) -> Vec<LayerSpec> {
    let mag = height.abs();
    let scale = mag / module_scale(a_lo, a_hi, delta);
    let ramp = |width: usize| {
        let mut q = QuadraticNeuron::zeros(width);
        q.w_r[0] = scale;
        q.b_r = -scale * a_lo * a_lo;
        q.w_g[0] = -1.0;
        q.b_g = a_hi * a_hi;
        Neuron::from(q)
    };
    let first = match carry {
        None => LayerSpec::new(vec![Neuron::Passthrough { index: 0 }, ramp(1)], Activation::Relu),
        Some(Carry { prev_height, width }) => {
            let (mut plus, mut minus) = if width == 4 {
                (vec![(2, 1.0)], vec![(3, 1.0)])
            } else {
                (vec![], vec![])
            };
            if prev_height >= 0.0 {
                plus.push((1, 1.0));
            } else {
                minus.push((1, 1.0));
            }
            LayerSpec::new(
                vec![
                    Neuron::Passthrough { index: 0 },
                    ramp(width),
                    ConventionalNeuron { w: selector(width, &plus), b: 0.0 }.into(),
                    ConventionalNeuron { w: selector(width, &minus), b: 0.0 }.into(),
                ],
                Activation::Relu,
            )
        }
    };
    let width = first.width();
    let mut layers = vec![first];
    // Two clipping layers: relu(|b| − previous signal).
    for _ in 0..2 {
        let mut neurons = vec![
            Neuron::Passthrough { index: 0 },
            ConventionalNeuron { w: selector(width, &[(1, -1.0)]), b: mag }.into(),
        ];
        neurons.extend((2..width).map(|index| Neuron::Passthrough { index }));
        layers.push(LayerSpec::new(neurons, Activation::Relu));
    }
    layers
}

fn stack_modules(intervals: &[(f64, f64, f64)], delta: f64, input_dim: usize) -> Result<Network> {
    if input_dim == 0 {
        return invalid("input dimension must be positive");
    }
    let mut layers = vec![LayerSpec::new(
        vec![QuadraticNeuron::squared_norm(input_dim, 0.0).into()],
        Activation::Relu,
    )];
    let mut carry = None;
    for &(a_lo, a_hi, b) in intervals {
        layers.extend(module_layers(a_lo, a_hi, b, delta, carry));
        let width = layers.last().map_or(1, LayerSpec::width);
        carry = Some(Carry { prev_height: b, width });
    }
    let Some(Carry { prev_height, width }) = carry else {
        return invalid("partition has no intervals");
    };
    let mut w = vec![0.0; width];
    w[1] = if prev_height >= 0.0 { 1.0 } else { -1.0 };
    if width == 4 {
        w[2] = 1.0;
        w[3] = -1.0;
    }
    layers.push(LayerSpec::new(
        vec![ConventionalNeuron { w, b: 0.0 }.into()],
        Activation::Identity,
    ));
    Network::new(input_dim, layers, vec![])
}

/// A single truncated-parabola module on `t = ||x||`: zero outside
/// `[a_lo, a_hi]`, `(b/C)(t² − a_lo²)(a_hi² − t²)` on the ramps and exactly
/// `b` on the plateau. Layers: squared norm, the three module layers, and
/// a signed read-out.
pub fn build_parabola_module(a_lo: f64, a_hi: f64, b: f64, delta: f64, input_dim: usize) -> Result<Network> {
    if !(0.0 <= a_lo && a_lo < a_hi && a_hi.is_finite()) {
        return invalid("module interval must satisfy 0 <= a_lo < a_hi");
    }
    if !(delta > 0.0 && delta < 0.5) {
        return invalid("delta must lie in (0, 1/2)");
    }
    if !b.is_finite() {
        return invalid("module height must be finite");
    }
    stack_modules(&[(a_lo, a_hi, b)], delta, input_dim)
}

/// Deep radial approximator with at most four neurons per layer: one
/// squared-norm layer, three layers per interval, one read-out layer
/// computing `K⁺ − K⁻`.
pub fn build_deep_radial(partition: &RadialPartition, input_dim: usize) -> Result<Network> {
    partition.validate()?;
    let intervals: Vec<_> = partition.intervals().collect();
    stack_modules(&intervals, partition.delta, input_dim)
}
