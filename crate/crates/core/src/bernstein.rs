//! Bernstein approximants expanded into the monomial basis.

use crate::error::{invalid, Result};
use crate::poly::Polynomial;
use crate::scalar::Coeff;

fn binomial_rows<T: Coeff>(n: usize) -> Vec<Vec<T>> {
    let mut rows: Vec<Vec<T>> = vec![vec![T::one()]];
    for k in 1..=n {
        let prev = &rows[k - 1];
        let mut row = vec![T::one(); k + 1];
        for j in 1..k {
            row[j] = prev[j - 1].clone() + prev[j].clone();
        }
        rows.push(row);
    }
    rows
}

/// Monomial coefficients of `B_n f(x) = Σ_m f(m/n) C(n,m) x^m (1−x)^(n−m)`.
///
/// The coefficient of `x^k` is `Σ_{m≤k} f(m/n) C(n,m) C(n−m,k−m) (−1)^(k−m)`.
/// With `T = BigRational` and a rational-valued `f` the result is exact.
pub fn bernstein_coeffs<T: Coeff>(f: impl Fn(&T) -> T, n: usize) -> Result<Polynomial<T>> {
    if n == 0 {
        return invalid("Bernstein degree must be at least 1");
    }
    let binom = binomial_rows::<T>(n);
    let denom = T::from_usize(n);
    let samples: Vec<T> = (0..=n)
        .map(|m| f(&(T::from_usize(m) / denom.clone())) * binom[n][m].clone())
        .collect();
    let coeffs = (0..=n)
        .map(|k| {
            (0..=k).fold(T::zero(), |acc, m| {
                let term = samples[m].clone() * binom[n - m][k - m].clone();
                if (k - m) % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            })
        })
        .collect();
    Ok(Polynomial::new(coeffs))
}
