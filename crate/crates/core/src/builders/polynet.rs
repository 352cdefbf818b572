//! Exact polynomial networks: one quadratic neuron per real factor, then a
//! balanced tree of pairwise products.

use crate::error::{invalid, Result};
use crate::factor::factor_polynomial;
use crate::network::{LayerSpec, Network};
use crate::neuron::{Activation, ConventionalNeuron, Neuron, QuadraticNeuron};
use crate::poly::{FactoredForm, Polynomial};

use super::circuit::{parallel, product_tree, Part};

fn validate(ff: &FactoredForm) -> Result<()> {
    if ff.degree() == 0 {
        return invalid("factored form has no factors");
    }
    if !(ff.scale.is_finite() && ff.scale != 0.0) {
        return invalid("factored form scale must be finite and nonzero");
    }
    let finite = ff.linear_roots.iter().all(|r| r.is_finite())
        && ff.quadratic_factors.iter().all(|(a, b)| a.is_finite() && b.is_finite());
    if !finite {
        return invalid("factored form has non-finite factors");
    }
    Ok(())
}

/// First-layer neurons. Real roots are paired into `(x − r)(x − s)`
/// neurons; `scale` is folded into the first neuron.
fn factor_neurons(ff: &FactoredForm) -> Vec<QuadraticNeuron> {
    let mut out = Vec::with_capacity(ff.factor_count());
    for pair in ff.linear_roots.chunks(2) {
        let mut q = QuadraticNeuron::zeros(1);
        q.w_r[0] = 1.0;
        q.b_r = -pair[0];
        match pair {
            [_, s] => {
                q.w_g[0] = 1.0;
                q.b_g = -s;
            }
            _ => q.b_g = 1.0,
        }
        out.push(q);
    }
    for &(a, b) in &ff.quadratic_factors {
        let mut q = QuadraticNeuron::zeros(1);
        q.w_r[0] = a;
        q.b_r = b;
        q.b_g = 1.0;
        q.w_b[0] = 1.0;
        out.push(q);
    }
    let first = &mut out[0];
    first.w_r[0] *= ff.scale;
    first.b_r *= ff.scale;
    first.w_b[0] *= ff.scale;
    out
}

fn univariate_layers(ff: &FactoredForm) -> Vec<LayerSpec> {
    let factors = factor_neurons(ff);
    let k = factors.len();
    let mut layers = vec![LayerSpec::new(
        factors.into_iter().map(Neuron::from).collect(),
        Activation::Identity,
    )];
    layers.extend(product_tree(k));
    layers
}

/// Network computing `ff` exactly on a scalar input. Depth is at most
/// `ceil(log2(l1 + l2)) + 1` and width at most the degree.
pub fn build_poly_net(ff: &FactoredForm) -> Result<Network> {
    validate(ff)?;
    Network::new(1, univariate_layers(ff), vec![])
}

fn constant_layers(c: f64) -> Vec<LayerSpec> {
    vec![LayerSpec::new(
        vec![ConventionalNeuron { w: vec![0.0], b: c }.into()],
        Activation::Identity,
    )]
}

/// Factorizes `p` and builds its network; constants get a single bias neuron.
pub fn build_poly_net_from_polynomial(p: &Polynomial) -> Result<Network> {
    Network::new(1, poly_layers(p)?, vec![])
}

fn poly_layers(p: &Polynomial) -> Result<Vec<LayerSpec>> {
    if p.degree() == 0 {
        let c = p.coeffs().first().copied().unwrap_or(0.0);
        return Ok(constant_layers(c));
    }
    let ff = factor_polynomial(p)?;
    validate(&ff)?;
    Ok(univariate_layers(&ff))
}

/// `f(x) = Σ_l ∏_i φ_{l,i}(x_i)` with one univariate polynomial per
/// (term, variable).
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSpec {
    pub terms: Vec<Vec<Polynomial>>,
}

impl SeparableSpec {
    pub fn new(terms: Vec<Vec<Polynomial>>) -> Result<Self> {
        let s = Self { terms };
        s.validate()?;
        Ok(s)
    }

    pub fn variables(&self) -> usize {
        self.terms.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variables();
        if self.terms.is_empty() || n == 0 {
            return invalid("separable spec needs at least one term and one variable");
        }
        if self.terms.iter().any(|t| t.len() != n) {
            return invalid("every term needs one polynomial per variable");
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.iter().zip(x).map(|(p, xi)| p.eval(xi)).product::<f64>())
            .sum()
    }
}

/// Univariate product trees per (term, variable), a product tree across
/// variables per term, and a summing read-out.
pub fn build_separable_net(spec: &SeparableSpec) -> Result<Network> {
    spec.validate()?;
    let n = spec.variables();
    let mut factors = Vec::with_capacity(spec.terms.len() * n);
    for term in &spec.terms {
        for (i, phi) in term.iter().enumerate() {
            factors.push(Part {
                layers: poly_layers(phi)?,
                inputs: vec![i],
            });
        }
    }
    let mut layers = parallel(&factors, n);

    let products: Vec<Part> = (0..spec.terms.len())
        .map(|l| Part {
            layers: product_tree(n),
            inputs: (l * n..(l + 1) * n).collect(),
        })
        .collect();
    layers.extend(parallel(&products, spec.terms.len() * n));

    let width = spec.terms.len();
    layers.push(LayerSpec::new(
        vec![ConventionalNeuron { w: vec![1.0; width], b: 0.0 }.into()],
        Activation::Identity,
    ));
    Network::new(n, layers, vec![])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::horner;

    fn quintic() -> Polynomial {
        Polynomial::new(vec![-1.2, -0.5, -0.5, 0.5, 0.7, 1.0])
    }

    #[test]
    fn square_is_depth_one() {
        let ff = FactoredForm {
            scale: 1.0,
            linear_roots: vec![],
            quadratic_factors: vec![(0.0, 0.0)],
        };
        let net = build_poly_net(&ff).unwrap();
        assert_eq!(net.depth(), 1);
        assert_eq!(net.eval_scalar(&[2.0]).unwrap(), 4.0);
    }

    #[test]
    fn quintic_value() {
        let net = build_poly_net_from_polynomial(&quintic()).unwrap();
        let want = horner(&quintic(), &-0.5);
        assert!((net.eval_scalar(&[-0.5]).unwrap() - want).abs() < 1e-12);
        assert!((want + 1.125).abs() < 1e-14);
    }

    #[test]
    fn four_real_roots() {
        let ff = FactoredForm {
            scale: 1.0,
            linear_roots: vec![1.0, 2.0, 3.0, 4.0],
            quadratic_factors: vec![],
        };
        let net = build_poly_net(&ff).unwrap();
        assert!(net.depth() <= 3);
        assert!(net.max_width() <= 4);
        assert_eq!(net.eval_scalar(&[0.0]).unwrap(), 24.0);
    }

    #[test]
    fn scale_is_applied() {
        let ff = FactoredForm {
            scale: -3.0,
            linear_roots: vec![0.5],
            quadratic_factors: vec![(1.0, 2.0)],
        };
        let net = build_poly_net(&ff).unwrap();
        let x = 1.5;
        let want = -3.0 * (x - 0.5) * (x * x + x + 2.0);
        assert!((net.eval_scalar(&[x]).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn rejects_empty_form() {
        let ff = FactoredForm {
            scale: 1.0,
            linear_roots: vec![],
            quadratic_factors: vec![],
        };
        assert!(build_poly_net(&ff).is_err());
    }

    #[test]
    fn separable_products() {
        let x = Polynomial::new(vec![0.0, 1.0]);
        let spec = SeparableSpec::new(vec![vec![x.clone(), x.clone()]]).unwrap();
        let net = build_separable_net(&spec).unwrap();
        assert_eq!(net.eval_scalar(&[3.0, 4.0]).unwrap(), 12.0);

        let spec = SeparableSpec::new(vec![
            vec![x.clone(), x.clone()],
            vec![Polynomial::new(vec![1.0, 1.0]), Polynomial::new(vec![-1.0, 1.0])],
        ])
        .unwrap();
        let net = build_separable_net(&spec).unwrap();
        assert_eq!(net.eval_scalar(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(net.eval_scalar(&[2.0, 3.0]).unwrap(), spec.eval(&[2.0, 3.0]));
    }

    #[test]
    fn separable_with_constant_and_mixed_degrees() {
        let spec = SeparableSpec::new(vec![
            vec![Polynomial::new(vec![2.0]), quintic(), Polynomial::new(vec![0.5, -1.0, 0.25])],
            vec![Polynomial::new(vec![-1.0, 0.0, 0.0, 1.0]), Polynomial::new(vec![1.0, 1.0]), Polynomial::new(vec![3.0])],
        ])
        .unwrap();
        let net = build_separable_net(&spec).unwrap();
        for x in [[0.3, -0.7, 1.1], [-1.0, 0.5, 0.0], [1.5, 1.5, -2.0]] {
            let want = spec.eval(&x);
            let got = net.eval_scalar(&x).unwrap();
            assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "{got} vs {want}");
        }
    }

    #[test]
    fn separable_rejects_ragged_terms() {
        let x = Polynomial::new(vec![0.0, 1.0]);
        assert!(SeparableSpec::new(vec![vec![x.clone()], vec![x.clone(), x]]).is_err());
        assert!(SeparableSpec::new(vec![]).is_err());
    }
}
