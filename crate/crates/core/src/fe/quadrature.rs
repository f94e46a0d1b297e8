use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Highest polynomial exactness served by [`quadrature`].
pub const MAX_EXACTNESS: usize = 30;

/// Quadrature rule on the reference triangle; weights sum to its area 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    exactness: usize,
    points: Vec<[f64; 2]>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn exactness(&self) -> usize {
        self.exactness
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, w)| w * f(p)).sum()
    }
}

/// Rule exact for all polynomials of total degree `exactness_degree`.
///
/// Built as a collapsed (Duffy) tensor product of Gauss-Legendre rules:
/// (s, t) in [0,1]^2 maps to (s (1 - t), t) with Jacobian (1 - t). A monomial
/// of degree d becomes degree d in s and d + 1 in t, so (d + 3) / 2 points per
/// direction suffice. All weights are positive.
pub fn quadrature(exactness_degree: usize) -> Result<QuadratureRule> {
    if exactness_degree > MAX_EXACTNESS {
        return Err(Error::invalid(format!(
            "quadrature exactness {exactness_degree} exceeds the maximum {MAX_EXACTNESS}"
        )));
    }
    let n = (exactness_degree + 3) / 2;
    let gl = GaussLegendre::new(NonZeroUsize::new(n).expect("n >= 1"));
    // nodes on [0, 1]
    let line: Vec<(f64, f64)> = gl
        .as_node_weight_pairs()
        .iter()
        .map(|&(x, w)| (0.5 * (x + 1.0), 0.5 * w))
        .collect();
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for &(t, wt) in &line {
        for &(s, ws) in &line {
            points.push([s * (1.0 - t), t]);
            weights.push(ws * wt * (1.0 - t));
        }
    }
    Ok(QuadratureRule {
        exactness: exactness_degree,
        points,
        weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Exact integral of x^a y^b over the reference triangle.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn exact_for_all_monomials_up_to_degree() {
        for d in 0..=MAX_EXACTNESS {
            let rule = quadrature(d).unwrap();
            assert!(rule.weights().iter().all(|&w| w > 0.0));
            assert!((rule.weights().iter().sum::<f64>() - 0.5).abs() < 1e-15);
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    let got = rule.integrate(|p| p[0].powi(a as i32) * p[1].powi(b as i32));
                    let exact = monomial_integral(a, b);
                    assert!(
                        (got - exact).abs() <= 1e-14 * exact.max(1e-3),
                        "d={d} a={a} b={b}: {got} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn spot_values() {
        assert!((quadrature(0).unwrap().integrate(|_| 1.0) - 0.5).abs() < 1e-16);
        assert!((quadrature(2).unwrap().integrate(|p| p[0] * p[1]) - 1.0 / 24.0).abs() < 1e-16);
        assert!((quadrature(4).unwrap().integrate(|p| p[0].powi(4)) - 1.0 / 30.0).abs() < 1e-16);
    }

    #[test]
    fn points_inside_reference_triangle() {
        let rule = quadrature(14).unwrap();
        for p in rule.points() {
            assert!(p[0] > 0.0 && p[1] > 0.0 && p[0] + p[1] < 1.0);
        }
    }

    #[test]
    fn rejects_too_high_degree() {
        assert!(quadrature(MAX_EXACTNESS + 1).is_err());
    }
}
