//! Quadratic neural networks: neurons of the form
//! `(w_r·x + b_r)(w_g·x + b_g) + w_b·(x∘x) + c`, networks built from them,
//! closed-form constructions for radial functions and polynomials, and a
//! small gradient-descent trainer.
//!
//! The core types are generic over the scalar type; the aliases at the
//! crate root fix `f64` (and exact rationals for polynomial coefficients).

pub mod bernstein;
pub mod builders;
pub mod error;
pub mod experiments;
pub mod factor;
pub mod network;
pub mod neuron;
pub mod oracles;
pub mod poly;
pub mod scalar;
pub mod trainer;

pub use bernstein::bernstein_coeffs;
pub use error::{QnnError, Result};
pub use factor::{factor_polynomial, roots};
pub use network::{GradientBundle, LayerSpec, Network, Node, Shortcut};
pub use neuron::{relu, Activation, ConventionalNeuron, Neuron, QuadraticNeuron};
pub use poly::{relative_coeff_error, FactoredForm, Polynomial};
pub use scalar::{Coeff, Real};
pub use trainer::{train, Dataset, Loss, TrainConfig, TrainOutcome};

pub use num_rational::BigRational;

/// Double-precision network.
pub type NetworkSpec = Network<f64>;
/// Single-precision network, for experiments only.
pub type NetworkSpec32 = Network<f32>;
pub type QuadraticNeuron64 = QuadraticNeuron<f64>;
pub type ConventionalNeuron64 = ConventionalNeuron<f64>;
/// Polynomial with exact rational coefficients.
pub type RationalPolynomial = Polynomial<BigRational>;
