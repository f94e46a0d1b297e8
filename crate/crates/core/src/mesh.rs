//! Structured triangulations of the unit square.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Tag carried by boundary edges. The whole boundary is a single Dirichlet part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// A conforming triangulation with counterclockwise triangles.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMetrics {
    pub h_max: f64,
    pub n_vertices: usize,
    pub n_triangles: usize,
}

impl Mesh {
    /// Builds a mesh from raw parts, checking orientation and index bounds.
    pub fn from_parts(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let nv = vertices.len();
        for (k, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::invalid(format!("triangle {k} references a missing vertex")));
            }
            let area = signed_area(&vertices, tri);
            if area <= 0.0 {
                return Err(Error::DegenerateTriangle { index: k, area });
            }
        }
        for e in &boundary_edges {
            if e.vertices.iter().any(|&v| v >= nv) {
                return Err(Error::invalid("boundary edge references a missing vertex"));
            }
        }
        Ok(Self {
            vertices,
            triangles,
            boundary_edges,
        })
    }

    /// Structured mesh of `n x n` squares, each cut along its lower-left to
    /// upper-right diagonal.
    pub fn unit_square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("unit square mesh needs n >= 1"));
        }
        let stride = n + 1;
        let h = 1.0 / n as f64;
        let mut vertices = Vec::with_capacity(stride * stride);
        for j in 0..=n {
            for i in 0..=n {
                // exact 0 and 1 on the boundary
                let x = if i == n { 1.0 } else { i as f64 * h };
                let y = if j == n { 1.0 } else { j as f64 * h };
                vertices.push([x, y]);
            }
        }
        let idx = |i: usize, j: usize| j * stride + i;
        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
        let mut boundary_edges = Vec::with_capacity(4 * n);
        let mut push = |a, b| {
            boundary_edges.push(BoundaryEdge {
                vertices: [a, b],
                tag: BoundaryTag::Dirichlet,
            })
        };
        for i in 0..n {
            push(idx(i, 0), idx(i + 1, 0));
        }
        for j in 0..n {
            push(idx(n, j), idx(n, j + 1));
        }
        for i in (0..n).rev() {
            push(idx(i + 1, n), idx(i, n));
        }
        for j in (0..n).rev() {
            push(idx(0, j + 1), idx(0, j));
        }
        Self::from_parts(vertices, triangles, boundary_edges)
    }

    /// Splits every triangle into four congruent children through its edge midpoints.
    pub fn refine_uniform(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let (pa, pb) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let [a, b] = e.vertices;
            let m = midpoint(a, b, &mut vertices);
            boundary_edges.push(BoundaryEdge { vertices: [a, m], tag: e.tag });
            boundary_edges.push(BoundaryEdge { vertices: [m, b], tag: e.tag });
        }
        Mesh {
            vertices,
            triangles,
            boundary_edges,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn triangle_coords(&self, k: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[k];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, k: usize) -> f64 {
        signed_area(&self.vertices, &self.triangles[k])
    }

    pub fn metrics(&self) -> MeshMetrics {
        let dist = |p: Point, q: Point| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
        let h_max = (0..self.triangles.len())
            .map(|k| {
                let [a, b, c] = self.triangle_coords(k);
                dist(a, b).max(dist(b, c)).max(dist(c, a))
            })
            .fold(0.0, f64::max);
        MeshMetrics {
            h_max,
            n_vertices: self.vertices.len(),
            n_triangles: self.triangles.len(),
        }
    }

    /// Plain-text dump: `v x y`, `t i j k` and `b i j` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.vertices {
            let _ = writeln!(out, "v {:.17e} {:.17e}", v[0], v[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(out, "t {} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(out, "b {} {}", e.vertices[0], e.vertices[1]);
        }
        out
    }

    pub fn write_text(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn signed_area(vertices: &[Point], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|i| vertices[i]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}
