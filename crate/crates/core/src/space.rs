//! Continuous Lagrange spaces on a [`Mesh`].

use std::collections::HashMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fe::{default_exactness, quadrature, AffineMap, QuadratureRule, ReferenceBasis};
use crate::mesh::{Mesh, Point};

/// Continuous piecewise-polynomial space of a given degree with one or two
/// components.
///
/// Scalar nodes are numbered vertices first (mesh order), then edge nodes,
/// then element-interior nodes. Vector-valued dofs are component-blocked:
/// dof `c * n_nodes + i` is component `c` at node `i`.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    basis: ReferenceBasis,
    components: usize,
    cell_nodes: Vec<Vec<usize>>,
    node_coords: Vec<Point>,
    boundary_nodes: Vec<usize>,
    maps: Vec<AffineMap>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, components: usize) -> Result<Self> {
        if !(components == 1 || components == 2) {
            return Err(Error::invalid(format!("spaces have 1 or 2 components (got {components})")));
        }
        let basis = ReferenceBasis::new(degree)?;
        let k = degree;
        let per_edge = basis.nodes_per_edge();
        let mut node_coords: Vec<Point> = mesh.vertices().to_vec();
        let mut edge_first: HashMap<(usize, usize), usize> = HashMap::new();
        let mut cell_nodes = Vec::with_capacity(mesh.triangles().len());
        let mut maps = Vec::with_capacity(mesh.triangles().len());

        for (t, tri) in mesh.triangles().iter().enumerate() {
            let coords = mesh.triangle_coords(t);
            let map = AffineMap::new(coords).map_err(|_| Error::DegenerateTriangle {
                index: t,
                area: mesh.area(t),
            })?;
            maps.push(map);
            let mut nodes = Vec::with_capacity(basis.len());
            nodes.extend_from_slice(tri);
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let (ga, gb) = (tri[a], tri[b]);
                let key = (ga.min(gb), ga.max(gb));
                let first = *edge_first.entry(key).or_insert_with(|| {
                    let start = node_coords.len();
                    let (p, q) = (mesh.vertices()[key.0], mesh.vertices()[key.1]);
                    for s in 1..k {
                        let w = s as f64 / k as f64;
                        node_coords.push([p[0] + w * (q[0] - p[0]), p[1] + w * (q[1] - p[1])]);
                    }
                    start
                });
                for t_local in 1..k {
                    // global edge nodes run from the lower-numbered vertex
                    let s = if ga < gb { t_local - 1 } else { k - t_local - 1 };
                    nodes.push(first + s);
                }
            }
            debug_assert_eq!(nodes.len(), 3 + 3 * per_edge);
            for n in 0..basis.interior_nodes() {
                node_coords.push(map.map(basis.nodes()[3 + 3 * per_edge + n]));
                nodes.push(node_coords.len() - 1);
            }
            cell_nodes.push(nodes);
        }

        let mut on_boundary = vec![false; node_coords.len()];
        for e in mesh.boundary_edges() {
            let [a, b] = e.vertices;
            on_boundary[a] = true;
            on_boundary[b] = true;
            if per_edge > 0 {
                let first = edge_first
                    .get(&(a.min(b), a.max(b)))
                    .copied()
                    .ok_or_else(|| Error::invalid("boundary edge is not an edge of any triangle"))?;
                for s in 0..per_edge {
                    on_boundary[first + s] = true;
                }
            }
        }
        let boundary_nodes = (0..node_coords.len()).filter(|&i| on_boundary[i]).collect();

        Ok(Self {
            mesh,
            basis,
            components,
            cell_nodes,
            node_coords,
            boundary_nodes,
            maps,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn same_mesh(&self, other: &FeSpace) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn n_nodes(&self) -> usize {
        self.node_coords.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.components * self.n_nodes()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_nodes.len()
    }

    pub fn cell_nodes(&self, cell: usize) -> &[usize] {
        &self.cell_nodes[cell]
    }

    pub fn cell_map(&self, cell: usize) -> &AffineMap {
        &self.maps[cell]
    }

    pub fn node_coords(&self) -> &[Point] {
        &self.node_coords
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    /// Global dofs on the boundary, all components.
    pub fn boundary_dofs(&self) -> Vec<usize> {
        let n = self.n_nodes();
        (0..self.components)
            .flat_map(|c| self.boundary_nodes.iter().map(move |&i| c * n + i))
            .collect()
    }

    /// Nodal interpolant of a scalar function.
    pub fn interpolate_scalar(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.node_coords.iter().map(|&x| f(x)).collect()
    }

    /// Nodal interpolant of a vector function (component-blocked).
    pub fn interpolate_vector(&self, f: impl Fn(Point) -> [f64; 2]) -> Vec<f64> {
        let n = self.n_nodes();
        let mut out = vec![0.0; 2 * n];
        for (i, &x) in self.node_coords.iter().enumerate() {
            let v = f(x);
            out[i] = v[0];
            out[n + i] = v[1];
        }
        out
    }

    pub(crate) fn check_len(&self, v: &[f64], what: &str) -> Result<()> {
        if v.len() != self.n_dofs() {
            return Err(Error::DimensionMismatch(format!(
                "{what} has {} entries, space has {} dofs",
                v.len(),
                self.n_dofs()
            )));
        }
        Ok(())
    }
}

/// Taylor-Hood triple on one mesh: velocity P_{r+1}^2, pressure P_r,
/// temperature P_{r+1}, plus the assembly quadrature rule.
#[derive(Debug, Clone)]
pub struct MixedSpaces {
    pub velocity: FeSpace,
    pub pressure: FeSpace,
    pub temperature: FeSpace,
    pub rule: QuadratureRule,
}

impl MixedSpaces {
    /// `r` is the pressure degree (1 or 2). `exactness` overrides the
    /// default assembly rule `2 (r + 1) + 4`.
    pub fn new(mesh: Arc<Mesh>, r: usize, exactness: Option<usize>) -> Result<Self> {
        if !(1..=2).contains(&r) {
            return Err(Error::invalid(format!("pressure degree r must be 1 or 2 (got {r})")));
        }
        let rule = quadrature(exactness.unwrap_or_else(|| default_exactness(r + 1)))?;
        Ok(Self {
            velocity: FeSpace::new(mesh.clone(), r + 1, 2)?,
            pressure: FeSpace::new(mesh.clone(), r, 1)?,
            temperature: FeSpace::new(mesh, r + 1, 1)?,
            rule,
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.velocity.mesh()
    }

    /// Pressure degree r.
    pub fn degree(&self) -> usize {
        self.pressure.degree()
    }

    /// (velocity, pressure, temperature) dof counts.
    pub fn dofs(&self) -> (usize, usize, usize) {
        (self.velocity.n_dofs(), self.pressure.n_dofs(), self.temperature.n_dofs())
    }
}
