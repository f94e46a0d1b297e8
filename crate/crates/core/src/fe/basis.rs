use crate::error::{Error, Result};

use super::QuadratureRule;

/// Nodal Lagrange basis on the reference triangle.
///
/// Local nodes are ordered: the three vertices, then `degree - 1` nodes on
/// each edge (edges 0->1, 1->2, 2->0, each traversed from its first vertex),
/// then interior nodes.
#[derive(Debug, Clone)]
pub struct ReferenceBasis {
    degree: usize,
    /// Barycentric multi-indices (i0, i1, i2) with i0 + i1 + i2 = degree.
    indices: Vec<[usize; 3]>,
    nodes: Vec<[f64; 2]>,
}

impl ReferenceBasis {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::invalid(format!("unsupported Lagrange degree {degree}")));
        }
        let k = degree;
        let mut indices = vec![[k, 0, 0], [0, k, 0], [0, 0, k]];
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            for t in 1..k {
                let mut m = [0; 3];
                m[a] = k - t;
                m[b] = t;
                indices.push(m);
            }
        }
        if k == 3 {
            indices.push([1, 1, 1]);
        }
        let nodes = indices
            .iter()
            .map(|m| [m[1] as f64 / k as f64, m[2] as f64 / k as f64])
            .collect();
        Ok(Self { degree, indices, nodes })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Reference coordinates of the Lagrange nodes.
    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Number of nodes strictly inside each edge.
    pub fn nodes_per_edge(&self) -> usize {
        self.degree - 1
    }

    pub fn interior_nodes(&self) -> usize {
        if self.degree == 3 {
            1
        } else {
            0
        }
    }

    pub fn eval(&self, point: [f64; 2]) -> Vec<f64> {
        let mut values = vec![0.0; self.len()];
        let mut grads = vec![[0.0; 2]; self.len()];
        self.eval_into(point, &mut values, &mut grads);
        values
    }

    pub fn grad(&self, point: [f64; 2]) -> Vec<[f64; 2]> {
        let mut values = vec![0.0; self.len()];
        let mut grads = vec![[0.0; 2]; self.len()];
        self.eval_into(point, &mut values, &mut grads);
        grads
    }

    /// Values and reference gradients of every basis function at `point`.
    ///
    /// Uses the product form phi = prod_m prod_{s < i_m} (k L_m - s) / (s + 1)
    /// in the barycentric coordinates L_m.
    pub fn eval_into(&self, point: [f64; 2], values: &mut [f64], grads: &mut [[f64; 2]]) {
        let k = self.degree as f64;
        let lambda = [1.0 - point[0] - point[1], point[0], point[1]];
        // d lambda_m / d(x, y)
        const DLAMBDA: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        for (n, m) in self.indices.iter().enumerate() {
            // factor value and derivative w.r.t. its own lambda, per barycentric coordinate
            let mut f = [1.0; 3];
            let mut df = [0.0; 3];
            for c in 0..3 {
                let (mut v, mut d) = (1.0, 0.0);
                for s in 0..m[c] {
                    let denom = (s + 1) as f64;
                    let term = (k * lambda[c] - s as f64) / denom;
                    d = d * term + v * k / denom;
                    v *= term;
                }
                f[c] = v;
                df[c] = d;
            }
            values[n] = f[0] * f[1] * f[2];
            let mut g = [0.0; 2];
            for c in 0..3 {
                let others: f64 = (0..3).filter(|&o| o != c).map(|o| f[o]).product();
                g[0] += df[c] * others * DLAMBDA[c][0];
                g[1] += df[c] * others * DLAMBDA[c][1];
            }
            grads[n] = g;
        }
    }

    /// Tabulates values and reference gradients at every point of `rule`.
    pub fn tabulate(&self, rule: &QuadratureRule) -> Tabulation {
        let nb = self.len();
        let nq = rule.len();
        let mut values = vec![0.0; nq * nb];
        let mut grads = vec![[0.0; 2]; nq * nb];
        for (q, &pt) in rule.points().iter().enumerate() {
            self.eval_into(pt, &mut values[q * nb..(q + 1) * nb], &mut grads[q * nb..(q + 1) * nb]);
        }
        Tabulation {
            n_basis: nb,
            values,
            grads,
        }
    }
}

/// Basis values and reference gradients at the points of a quadrature rule,
/// stored point-major.
#[derive(Debug, Clone)]
pub struct Tabulation {
    n_basis: usize,
    values: Vec<f64>,
    grads: Vec<[f64; 2]>,
}

impl Tabulation {
    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn values(&self, q: usize) -> &[f64] {
        &self.values[q * self.n_basis..(q + 1) * self.n_basis]
    }

    pub fn ref_grads(&self, q: usize) -> &[[f64; 2]] {
        &self.grads[q * self.n_basis..(q + 1) * self.n_basis]
    }
}

/// Values and reference gradients of the degree-`degree` Lagrange basis at `point`.
pub fn lagrange_basis(degree: usize, point: [f64; 2]) -> Result<(Vec<f64>, Vec<[f64; 2]>)> {
    const TOL: f64 = 1e-12;
    if point[0] < -TOL || point[1] < -TOL || point[0] + point[1] > 1.0 + TOL {
        return Err(Error::invalid(format!("point {point:?} is outside the reference triangle")));
    }
    let basis = ReferenceBasis::new(degree)?;
    let mut values = vec![0.0; basis.len()];
    let mut grads = vec![[0.0; 2]; basis.len()];
    basis.eval_into(point, &mut values, &mut grads);
    Ok((values, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::quadrature;
    use proptest::prelude::*;

    #[test]
    fn node_counts_and_kronecker() {
        for k in 1..=3 {
            let b = ReferenceBasis::new(k).unwrap();
            assert_eq!(b.len(), (k + 1) * (k + 2) / 2);
            for (j, &node) in b.nodes().iter().enumerate() {
                let v = b.eval(node);
                for (i, vi) in v.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((vi - expect).abs() < 1e-13, "k={k} i={i} j={j} {vi}");
                }
            }
        }
    }

    #[test]
    fn linear_at_barycenter() {
        let (v, _) = lagrange_basis(1, [1.0 / 3.0, 1.0 / 3.0]).unwrap();
        for x in v {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_vertex_node() {
        let (v, _) = lagrange_basis(2, [0.0, 0.0]).unwrap();
        assert_eq!(v[0], 1.0);
        assert!(v[1..].iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(lagrange_basis(4, [0.1, 0.1]).is_err());
        assert!(lagrange_basis(0, [0.1, 0.1]).is_err());
        assert!(lagrange_basis(2, [0.8, 0.8]).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let h = 1e-6;
        for k in 1..=3 {
            let b = ReferenceBasis::new(k).unwrap();
            let p = [0.23, 0.41];
            let g = b.grad(p);
            let (xp, xm) = (b.eval([p[0] + h, p[1]]), b.eval([p[0] - h, p[1]]));
            let (yp, ym) = (b.eval([p[0], p[1] + h]), b.eval([p[0], p[1] - h]));
            for i in 0..b.len() {
                assert!((g[i][0] - (xp[i] - xm[i]) / (2.0 * h)).abs() < 1e-7);
                assert!((g[i][1] - (yp[i] - ym[i]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        // p(x, y) = sum of monomials up to the basis degree
        let poly = |k: usize, x: f64, y: f64| -> f64 {
            let mut s = 0.0;
            for a in 0..=k {
                for c in 0..=(k - a) {
                    s += (1.0 + a as f64 + 0.5 * c as f64) * x.powi(a as i32) * y.powi(c as i32);
                }
            }
            s
        };
        for k in 1..=3 {
            let b = ReferenceBasis::new(k).unwrap();
            let coeffs: Vec<f64> = b.nodes().iter().map(|n| poly(k, n[0], n[1])).collect();
            for &pt in &[[0.1, 0.2], [0.7, 0.05], [0.3, 0.3], [0.0, 1.0]] {
                let v = b.eval(pt);
                let interp: f64 = v.iter().zip(&coeffs).map(|(a, c)| a * c).sum();
                assert!((interp - poly(k, pt[0], pt[1])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stiffness_is_symmetric() {
        let rule = quadrature(4).unwrap();
        for k in 1..=3 {
            let b = ReferenceBasis::new(k).unwrap();
            let tab = b.tabulate(&rule);
            let n = b.len();
            let mut m = vec![0.0; n * n];
            for q in 0..rule.len() {
                let g = tab.ref_grads(q);
                for i in 0..n {
                    for j in 0..n {
                        m[i * n + j] += rule.weights()[q] * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    assert!((m[i * n + j] - m[j * n + i]).abs() < 1e-14);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(x in 0.0f64..1.0, t in 0.0f64..1.0, k in 1usize..=3) {
            let p = [x, (1.0 - x) * t];
            let (v, g) = lagrange_basis(k, p).unwrap();
            prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let gx: f64 = g.iter().map(|d| d[0]).sum();
            let gy: f64 = g.iter().map(|d| d[1]).sum();
            prop_assert!(gx.abs() < 1e-11 && gy.abs() < 1e-11);
        }
    }
}
