//! Univariate polynomials and their real factored form.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{QnnError, Result};
use crate::oracles::horner;
use crate::scalar::Coeff;

/// Coefficients lowest degree first. Trailing zeros are trimmed, so the
/// leading coefficient is nonzero unless the polynomial is identically zero
/// (stored as an empty vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Coeff + Serialize + DeserializeOwned")]
pub struct Polynomial<T = f64> {
    coeffs: Vec<T>,
}

impl<T: Coeff> Polynomial<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> T {
        self.coeffs.last().cloned().unwrap_or_else(T::zero)
    }

    pub fn eval(&self, x: &T) -> T {
        horner(self, x)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        Polynomial::new(self.coeffs.iter().map(Coeff::to_f64).collect())
    }
}

impl Polynomial<f64> {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| QnnError::Serialization(e.to_string()))
    }
}

/// `scale · ∏(x − r_i) · ∏(x² + a_j x + b_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactoredForm {
    pub scale: f64,
    pub linear_roots: Vec<f64>,
    /// `(a, b)` pairs for `x² + a x + b`.
    pub quadratic_factors: Vec<(f64, f64)>,
}

impl FactoredForm {
    pub fn degree(&self) -> usize {
        self.linear_roots.len() + 2 * self.quadratic_factors.len()
    }

    pub fn factor_count(&self) -> usize {
        self.linear_roots.len() + self.quadratic_factors.len()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| QnnError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| QnnError::Serialization(e.to_string()))
    }
}

/// Largest coefficient difference relative to the largest coefficient of `reference`.
pub fn relative_coeff_error(reference: &Polynomial<f64>, other: &Polynomial<f64>) -> f64 {
    let n = reference.coeffs().len().max(other.coeffs().len());
    let get = |p: &Polynomial<f64>, i: usize| p.coeffs().get(i).copied().unwrap_or(0.0);
    let scale = reference.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let diff = (0..n).fold(0.0f64, |m, i| m.max((get(reference, i) - get(other, i)).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
