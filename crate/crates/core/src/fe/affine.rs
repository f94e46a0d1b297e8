use crate::error::{Error, Result};
use crate::mesh::Point;

/// Affine map x = v0 + J xi from the reference triangle onto a physical one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    origin: Point,
    jac: [[f64; 2]; 2],
    det: f64,
    inv_t: [[f64; 2]; 2],
}

impl AffineMap {
    pub fn new(vertices: [Point; 3]) -> Result<Self> {
        let [a, b, c] = vertices;
        let jac = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let scale = jac.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(det.abs() > 1e-14 * scale * scale) {
            return Err(Error::DegenerateTriangle { index: 0, area: 0.5 * det });
        }
        let inv_det = 1.0 / det;
        // (J^{-1})^T
        let inv_t = [
            [jac[1][1] * inv_det, -jac[1][0] * inv_det],
            [-jac[0][1] * inv_det, jac[0][0] * inv_det],
        ];
        Ok(Self {
            origin: a,
            jac,
            det,
            inv_t,
        })
    }

    pub fn jacobian(&self) -> [[f64; 2]; 2] {
        self.jac
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    pub fn inverse_transpose(&self) -> [[f64; 2]; 2] {
        self.inv_t
    }

    #[inline]
    pub fn map(&self, xi: [f64; 2]) -> Point {
        [
            self.origin[0] + self.jac[0][0] * xi[0] + self.jac[0][1] * xi[1],
            self.origin[1] + self.jac[1][0] * xi[0] + self.jac[1][1] * xi[1],
        ]
    }

    pub fn inverse(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        // J^{-1} = (inv_t)^T
        [
            self.inv_t[0][0] * d[0] + self.inv_t[1][0] * d[1],
            self.inv_t[0][1] * d[0] + self.inv_t[1][1] * d[1],
        ]
    }

    /// Physical gradient from a reference gradient.
    #[inline]
    pub fn push_grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }
}
