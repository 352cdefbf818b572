//! Real factorization of univariate polynomials into linear and
//! irreducible quadratic factors.
//!
//! Roots come from the eigenvalues of the balanced companion matrix and are
//! then polished with Newton steps on the original coefficients.

use nalgebra::linalg::balancing::balance_parlett_reinsch;
use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{invalid, QnnError, Result};
use crate::oracles::expand_factored;
use crate::poly::{relative_coeff_error, FactoredForm, Polynomial};

/// Roots with `|Im z| < REAL_TOL · (1 + |z|)` are treated as real.
pub const REAL_TOL: f64 = 1e-9;

/// Factorizations whose re-expansion misses the input by more than this
/// (relative to the largest coefficient) are reported as failures.
pub const RESIDUAL_TOL: f64 = 1e-8;

const NEWTON_STEPS: usize = 30;

fn eval_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn polish(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = eval_with_derivative(coeffs, z);
    for _ in 0..NEWTON_STEPS {
        let (_, dp) = eval_with_derivative(coeffs, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = eval_with_derivative(coeffs, cand);
        if !(pc.norm() < p.norm()) {
            break;
        }
        z = cand;
        p = pc;
    }
    z
}

/// All complex roots of a polynomial of degree ≥ 1 (with multiplicity).
pub fn roots(p: &Polynomial<f64>) -> Result<Vec<Complex64>> {
    let coeffs = p.coeffs();
    let degree = p.degree();
    if p.is_zero() || degree == 0 {
        return invalid("cannot take roots of a constant polynomial");
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return invalid("polynomial has non-finite coefficients");
    }
    let zeros_at_origin = coeffs.iter().take_while(|&&c| c == 0.0).count();
    let reduced = &coeffs[zeros_at_origin..];
    let n = reduced.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    if n == 0 {
        return Ok(out);
    }
    let lead = reduced[n];
    let mut companion = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        companion[(i, n - 1)] = -reduced[i] / lead;
    }
    balance_parlett_reinsch(&mut companion);
    let schur = Schur::try_new(companion, f64::EPSILON, 10_000).ok_or(QnnError::Factorization {
        degree,
        residual: f64::INFINITY,
    })?;
    out.extend(
        schur
            .complex_eigenvalues()
            .iter()
            .map(|&z| polish(reduced, z)),
    );
    Ok(out)
}

/// Factor `p` as `C · ∏(x − r_i) · ∏(x² + a_j x + b_j)` over the reals.
pub fn factor_polynomial(p: &Polynomial<f64>) -> Result<FactoredForm> {
    let degree = p.degree();
    let all = roots(p)?;
    let mut real = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for z in all {
        if z.im.abs() < REAL_TOL * (1.0 + z.norm()) {
            real.push(z.re);
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    let mut quadratic_factors = Vec::new();
    for z in upper {
        let nearest = lower
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (**a - z.conj())
                    .norm()
                    .total_cmp(&(**b - z.conj()).norm())
            })
            .map(|(i, _)| i);
        match nearest {
            Some(i) => {
                let w = lower.swap_remove(i);
                let u = 0.5 * (z.re + w.re);
                let v = 0.5 * (z.im - w.im);
                quadratic_factors.push((-2.0 * u, u * u + v * v));
            }
            None => real.push(z.re),
        }
    }
    real.extend(lower.into_iter().map(|w| w.re));
    real.sort_by(f64::total_cmp);
    quadratic_factors.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let ff = FactoredForm {
        scale: p.leading(),
        linear_roots: real,
        quadratic_factors,
    };
    let residual = relative_coeff_error(p, &expand_factored(&ff));
    if !(residual <= RESIDUAL_TOL) {
        return Err(QnnError::Factorization { degree, residual });
    }
    Ok(ff)
}
