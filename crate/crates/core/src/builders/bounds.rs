use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `P(x) = Σ_k coeff_k ∏_j x_j^{e_k,j}` with `M` terms over `N` variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiPolySpec {
    /// `exponents[k][j]` is the power of variable `j` in term `k`.
    pub exponents: Vec<Vec<u32>>,
    pub coefficients: Vec<f64>,
}

impl MultiPolySpec {
    pub fn new(exponents: Vec<Vec<u32>>, coefficients: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() || exponents[0].is_empty() {
            return invalid("need at least one term and one variable");
        }
        let n = exponents[0].len();
        if exponents.iter().any(|e| e.len() != n) {
            return invalid("every term needs one exponent per variable");
        }
        if coefficients.len() != exponents.len() {
            return invalid("need one coefficient per term");
        }
        Ok(Self { exponents, coefficients })
    }

    pub fn terms(&self) -> usize {
        self.exponents.len()
    }

    pub fn variables(&self) -> usize {
        self.exponents[0].len()
    }
}

/// Width `Σ_j 2·max_k n_j(k) + 2M` and depth `max_{j,k} n_j(k) + N` of the
/// exact multivariate construction.
///
/// The depth formula leaves the variable index free; it is read as the
/// largest exponent over all variables and terms.
pub fn multivariate_size_bounds(spec: &MultiPolySpec) -> (usize, usize) {
    let m = spec.terms();
    let n = spec.variables();
    let col_max = |j: usize| spec.exponents.iter().map(|e| e[j] as usize).max().unwrap_or(0);
    let width = (0..n).map(|j| 2 * col_max(j)).sum::<usize>() + 2 * m;
    let depth = (0..n).map(col_max).max().unwrap_or(0) + n;
    (width, depth)
}
