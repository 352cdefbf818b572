//! Brute-force reference computations used to check the fast paths.

use crate::error::{invalid, Result};
use crate::network::{GradientBundle, Network};
use crate::poly::{FactoredForm, Polynomial};
use crate::scalar::{Coeff, Real};

/// Uniform grid of `n ≥ 2` points on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo < hi) || n < 2 {
            return invalid(format!("grid needs lo < hi and n >= 2 (got [{lo}, {hi}], n = {n})"));
        }
        Ok(Self { lo, hi, n })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + self.step() * i as f64
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.point(i))
    }
}

/// Horner evaluation, exact when `T` is exact.
pub fn horner<T: Coeff>(p: &Polynomial<T>, x: &T) -> T {
    p.coeffs()
        .iter()
        .rev()
        .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
}

/// Coefficients of a factored form by repeated convolution.
pub fn expand_factored(ff: &FactoredForm) -> Polynomial<f64> {
    let mut acc = vec![ff.scale];
    let mut convolve = |factor: &[f64]| {
        let mut out = vec![0.0; acc.len() + factor.len() - 1];
        for (i, a) in acc.iter().enumerate() {
            for (j, b) in factor.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        acc = out;
    };
    for &r in &ff.linear_roots {
        convolve(&[-r, 1.0]);
    }
    for &(a, b) in &ff.quadratic_factors {
        convolve(&[b, a, 1.0]);
    }
    Polynomial::new(acc)
}

/// Central-difference gradient of `sum(forward(x))` with respect to each
/// trainable parameter.
pub fn finite_diff_grad<T: Real>(net: &Network<T>, x: &[T], step: T) -> Result<GradientBundle<T>> {
    let upstream = vec![T::one(); net.output_dim()];
    finite_diff_grad_with(net, x, &upstream, step)
}

/// Central-difference gradient of `upstream · forward(x)`.
pub fn finite_diff_grad_with<T: Real>(
    net: &Network<T>,
    x: &[T],
    upstream: &[T],
    step: T,
) -> Result<GradientBundle<T>> {
    if !(step > T::zero()) {
        return invalid("finite-difference step must be positive");
    }
    let objective = |n: &Network<T>| -> Result<T> {
        let y = n.forward(x)?;
        Ok(y.iter().zip(upstream).fold(T::zero(), |acc, (&a, &b)| acc + a * b))
    };
    let base = net.params();
    let indices = net.trainable_indices();
    let mut probe = net.clone();
    let mut values = Vec::with_capacity(indices.len());
    for &i in &indices {
        let mut p = base.clone();
        p[i] = base[i] + step;
        probe.set_params(&p)?;
        let up = objective(&probe)?;
        p[i] = base[i] - step;
        probe.set_params(&p)?;
        let down = objective(&probe)?;
        values.push((up - down) / (step + step));
    }
    Ok(GradientBundle { values, indices })
}

/// `B_n f(x)` by direct summation of the Bernstein basis in `f64`.
pub fn bernstein_direct(f: impl Fn(f64) -> f64, n: usize, x: f64) -> f64 {
    let mut binom = 1.0;
    let mut total = 0.0;
    for m in 0..=n {
        if m > 0 {
            binom = binom * (n - m + 1) as f64 / m as f64;
        }
        total += f(m as f64 / n as f64) * binom * x.powi(m as i32) * (1.0 - x).powi((n - m) as i32);
    }
    total
}

/// Trapezoidal approximation of `∫ |f − g|` over the grid.
pub fn grid_l1(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, grid: &GridSpec) -> f64 {
    let h = grid.step();
    let vals: Vec<f64> = grid.points().map(|t| (f(t) - g(t)).abs()).collect();
    let inner: f64 = vals[1..vals.len() - 1].iter().sum();
    h * (inner + 0.5 * (vals[0] + vals[vals.len() - 1]))
}

/// `max |f − g|` over the grid points.
pub fn grid_sup(f: impl Fn(f64) -> f64, g: impl Fn(f64) -> f64, grid: &GridSpec) -> f64 {
    grid.points().map(|t| (f(t) - g(t)).abs()).fold(0.0, f64::max)
}
