//! Quadratic, conventional and pass-through neurons.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Result};
use crate::scalar::Real;

/// Rectified linear unit.
pub fn relu<T: Real>(z: T) -> T {
    if z > T::zero() {
        z
    } else {
        T::zero()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply<T: Real>(self, z: T) -> T {
        match self {
            Activation::Relu => relu(z),
            Activation::Identity => z,
        }
    }

    /// Derivative at `z`; the ReLU kink takes the zero branch.
    pub fn derivative<T: Real>(self, z: T) -> T {
        match self {
            Activation::Relu if z > T::zero() => T::one(),
            Activation::Relu => T::zero(),
            Activation::Identity => T::one(),
        }
    }
}

fn dot<T: Real>(w: &[T], x: &[T]) -> T {
    w.iter().zip(x).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
}

/// Second-order neuron with pre-activation
/// `(w_r·x + b_r)(w_g·x + b_g) + w_b·(x∘x) + c`.
///
/// Holds `3n + 3` parameters for an `n`-dimensional input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct QuadraticNeuron<T = f64> {
    pub w_r: Vec<T>,
    pub b_r: T,
    pub w_g: Vec<T>,
    pub b_g: T,
    pub w_b: Vec<T>,
    pub c: T,
}

impl<T: Real> QuadraticNeuron<T> {
    pub fn new(w_r: Vec<T>, b_r: T, w_g: Vec<T>, b_g: T, w_b: Vec<T>, c: T) -> Result<Self> {
        let n = w_r.len();
        if n == 0 {
            return invalid("quadratic neuron needs at least one input");
        }
        check_dim(n, w_g.len())?;
        check_dim(n, w_b.len())?;
        Ok(Self { w_r, b_r, w_g, b_g, w_b, c })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            w_r: vec![T::zero(); n],
            b_r: T::zero(),
            w_g: vec![T::zero(); n],
            b_g: T::zero(),
            w_b: vec![T::zero(); n],
            c: T::zero(),
        }
    }

    /// `||x||² + c`: every square weight set to one.
    pub fn squared_norm(n: usize, c: T) -> Self {
        Self {
            w_b: vec![T::one(); n],
            c,
            ..Self::zeros(n)
        }
    }

    /// `scale · x_a · x_b` over an `n`-wide input.
    pub fn product(n: usize, a: usize, b: usize, scale: T) -> Self {
        let mut q = Self::zeros(n);
        q.w_r[a] = scale;
        q.w_g[b] = T::one();
        q
    }

    pub fn input_dim(&self) -> usize {
        self.w_r.len()
    }

    pub fn param_count(&self) -> usize {
        3 * self.input_dim() + 3
    }

    fn is_consistent(&self) -> bool {
        let n = self.w_r.len();
        n >= 1 && self.w_g.len() == n && self.w_b.len() == n
    }

    /// Pre-activation at `x`.
    pub fn preactivation(&self, x: &[T]) -> Result<T> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.eval_unchecked(x))
    }

    fn eval_unchecked(&self, x: &[T]) -> T {
        let r = dot(&self.w_r, x) + self.b_r;
        let g = dot(&self.w_g, x) + self.b_g;
        let sq = self
            .w_b
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (&w, &xi)| acc + w * xi * xi);
        r * g + sq + self.c
    }
}

/// Inner-product neuron `w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct ConventionalNeuron<T = f64> {
    pub w: Vec<T>,
    pub b: T,
}

impl<T: Real> ConventionalNeuron<T> {
    pub fn new(w: Vec<T>, b: T) -> Result<Self> {
        if w.is_empty() {
            return invalid("conventional neuron needs at least one input");
        }
        Ok(Self { w, b })
    }

    pub fn input_dim(&self) -> usize {
        self.w.len()
    }

    pub fn param_count(&self) -> usize {
        self.input_dim() + 1
    }

    pub fn preactivation(&self, x: &[T]) -> Result<T> {
        check_dim(self.input_dim(), x.len())?;
        Ok(dot(&self.w, x) + self.b)
    }

    /// The quadratic neuron with identical output on every input.
    pub fn to_quadratic(&self) -> QuadraticNeuron<T> {
        let n = self.input_dim();
        QuadraticNeuron {
            w_r: self.w.clone(),
            b_r: self.b,
            w_g: vec![T::zero(); n],
            b_g: T::one(),
            w_b: vec![T::zero(); n],
            c: T::zero(),
        }
    }
}

/// One unit of a layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub enum Neuron<T = f64> {
    Quadratic(QuadraticNeuron<T>),
    Conventional(ConventionalNeuron<T>),
    /// Copies input `index` unchanged; has no parameters.
    Passthrough { index: usize },
}

impl<T: Real> Neuron<T> {
    pub fn param_count(&self) -> usize {
        match self {
            Neuron::Quadratic(q) => q.param_count(),
            Neuron::Conventional(c) => c.param_count(),
            Neuron::Passthrough { .. } => 0,
        }
    }

    /// Checks that the neuron can read an input of width `n`.
    pub fn accepts(&self, n: usize) -> Result<()> {
        match self {
            Neuron::Quadratic(q) => {
                if !q.is_consistent() {
                    return invalid("quadratic neuron weight vectors differ in length");
                }
                check_dim(q.input_dim(), n)
            }
            Neuron::Conventional(c) => check_dim(c.input_dim(), n),
            Neuron::Passthrough { index } if *index < n => Ok(()),
            Neuron::Passthrough { index } => invalid(format!(
                "passthrough index {index} out of range for input width {n}"
            )),
        }
    }

    pub fn preactivation(&self, x: &[T]) -> Result<T> {
        self.accepts(x.len())?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[T]) -> T {
        match self {
            Neuron::Quadratic(q) => q.eval_unchecked(x),
            Neuron::Conventional(c) => dot(&c.w, x) + c.b,
            Neuron::Passthrough { index } => x[*index],
        }
    }

    /// Appends parameters in canonical order.
    pub(crate) fn write_params(&self, out: &mut Vec<T>) {
        match self {
            Neuron::Quadratic(q) => {
                out.extend_from_slice(&q.w_r);
                out.push(q.b_r);
                out.extend_from_slice(&q.w_g);
                out.push(q.b_g);
                out.extend_from_slice(&q.w_b);
                out.push(q.c);
            }
            Neuron::Conventional(c) => {
                out.extend_from_slice(&c.w);
                out.push(c.b);
            }
            Neuron::Passthrough { .. } => {}
        }
    }

    /// Reads parameters in canonical order; returns the number consumed.
    pub(crate) fn read_params(&mut self, src: &[T]) -> usize {
        let mut it = src.iter().copied();
        let mut fill = |v: &mut [T]| v.iter_mut().for_each(|p| *p = it.next().unwrap());
        match self {
            Neuron::Quadratic(q) => {
                fill(&mut q.w_r);
                fill(std::slice::from_mut(&mut q.b_r));
                fill(&mut q.w_g);
                fill(std::slice::from_mut(&mut q.b_g));
                fill(&mut q.w_b);
                fill(std::slice::from_mut(&mut q.c));
            }
            Neuron::Conventional(c) => {
                fill(&mut c.w);
                fill(std::slice::from_mut(&mut c.b));
            }
            Neuron::Passthrough { .. } => {}
        }
        self.param_count()
    }

    /// Chain rule through the pre-activation.
    ///
    /// `delta` is the derivative of the objective with respect to this
    /// neuron's pre-activation. Parameter gradients are written into
    /// `grad_params` (canonical order, length `param_count`) and input
    /// gradients are accumulated into `grad_x`.
    pub(crate) fn backprop(&self, x: &[T], delta: T, grad_params: &mut [T], grad_x: &mut [T]) {
        match self {
            Neuron::Quadratic(q) => {
                let n = q.input_dim();
                let r = dot(&q.w_r, x) + q.b_r;
                let g = dot(&q.w_g, x) + q.b_g;
                let (gw_r, rest) = grad_params.split_at_mut(n);
                let (gb_r, rest) = rest.split_at_mut(1);
                let (gw_g, rest) = rest.split_at_mut(n);
                let (gb_g, rest) = rest.split_at_mut(1);
                let (gw_b, gc) = rest.split_at_mut(n);
                for i in 0..n {
                    gw_r[i] = delta * g * x[i];
                    gw_g[i] = delta * r * x[i];
                    gw_b[i] = delta * x[i] * x[i];
                    let two = T::one() + T::one();
                    grad_x[i] = grad_x[i]
                        + delta * (q.w_r[i] * g + q.w_g[i] * r + two * q.w_b[i] * x[i]);
                }
                gb_r[0] = delta * g;
                gb_g[0] = delta * r;
                gc[0] = delta;
            }
            Neuron::Conventional(c) => {
                let n = c.input_dim();
                for i in 0..n {
                    grad_params[i] = delta * x[i];
                    grad_x[i] = grad_x[i] + delta * c.w[i];
                }
                grad_params[n] = delta;
            }
            Neuron::Passthrough { index } => {
                grad_x[*index] = grad_x[*index] + delta;
            }
        }
    }
}

impl<T> From<QuadraticNeuron<T>> for Neuron<T> {
    fn from(q: QuadraticNeuron<T>) -> Self {
        Neuron::Quadratic(q)
    }
}

impl<T> From<ConventionalNeuron<T>> for Neuron<T> {
    fn from(c: ConventionalNeuron<T>) -> Self {
        Neuron::Conventional(c)
    }
}
