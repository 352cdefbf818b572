//! Constructive network builders.
//!
//! Every builder emits an ordinary [`Network`](crate::Network) whose
//! parameters are set in closed form; nothing here is trained.

mod bounds;
mod circuit;
mod polynet;
mod radial;
mod trainable;

pub use bounds::{multivariate_size_bounds, MultiPolySpec};
pub use polynet::{build_poly_net, build_poly_net_from_polynomial, build_separable_net, SeparableSpec};
pub use radial::{
    build_deep_radial, build_parabola_module, build_shallow_radial, parabola_plateau,
    shallow_hidden_units, RadialPartition,
};
pub use trainable::{build_factorization_trainable, factor_coefficients, set_factor, FactorLayout};
