//! Global matrices and load vectors for the frozen-coefficient subproblems.
//!
//! All loops run over cells in mesh order and accumulate through a
//! [`TripletBuilder`], so assembled values do not depend on anything but the
//! inputs.

use crate::constitutive::{CarreauParams, SymTensor2, ViscosityModel};
use crate::error::{Error, Result};
use crate::fe::{QuadratureRule, Tabulation};
use crate::mesh::Point;
use crate::space::FeSpace;
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Coefficients frozen at the previous fixed-point iterate.
///
/// `temperature` holds the full temperature (boundary lift included) on the
/// temperature space.
#[derive(Debug, Clone, Copy)]
pub struct FrozenCoefficients<'a> {
    pub velocity: &'a [f64],
    pub temperature: &'a [f64],
    pub sigma: f64,
    pub r_reg: f64,
}

impl FrozenCoefficients<'_> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be >= 0 (got {})", self.sigma)));
        }
        if !(self.r_reg >= 2.0 && self.r_reg.is_finite()) {
            return Err(Error::invalid(format!("r_reg must be >= 2 (got {})", self.r_reg)));
        }
        Ok(())
    }
}

/// |eps|^(r - 2), taking 0^0 = 1 for r = 2 and 0 for r > 2.
#[inline]
pub fn regularization_weight(eps_norm: f64, r_reg: f64) -> f64 {
    if r_reg == 2.0 {
        1.0
    } else if eps_norm == 0.0 {
        0.0
    } else {
        eps_norm.powf(r_reg - 2.0)
    }
}

/// Physical basis gradients of `cell` at quadrature point `q`.
#[inline]
pub(crate) fn physical_grads(space: &FeSpace, tab: &Tabulation, cell: usize, q: usize, out: &mut [[f64; 2]]) {
    let map = space.cell_map(cell);
    for (o, &g) in out.iter_mut().zip(tab.ref_grads(q)) {
        *o = map.push_grad(g);
    }
}

/// Value of a scalar field at a quadrature point.
#[inline]
pub(crate) fn scalar_value(space: &FeSpace, coeffs: &[f64], tab: &Tabulation, cell: usize, q: usize) -> f64 {
    space
        .cell_nodes(cell)
        .iter()
        .zip(tab.values(q))
        .map(|(&n, v)| coeffs[n] * v)
        .sum()
}

#[inline]
pub(crate) fn scalar_grad(space: &FeSpace, coeffs: &[f64], grads: &[[f64; 2]], cell: usize) -> [f64; 2] {
    let mut g = [0.0; 2];
    for (&n, d) in space.cell_nodes(cell).iter().zip(grads) {
        g[0] += coeffs[n] * d[0];
        g[1] += coeffs[n] * d[1];
    }
    g
}

#[inline]
pub(crate) fn vector_value(space: &FeSpace, coeffs: &[f64], tab: &Tabulation, cell: usize, q: usize) -> [f64; 2] {
    let n = space.n_nodes();
    let mut u = [0.0; 2];
    for (&node, v) in space.cell_nodes(cell).iter().zip(tab.values(q)) {
        u[0] += coeffs[node] * v;
        u[1] += coeffs[n + node] * v;
    }
    u
}

/// `g[i][j] = d u_i / d x_j` of a vector field.
#[inline]
pub(crate) fn vector_grad(space: &FeSpace, coeffs: &[f64], grads: &[[f64; 2]], cell: usize) -> [[f64; 2]; 2] {
    let n = space.n_nodes();
    let mut g = [[0.0; 2]; 2];
    for (&node, d) in space.cell_nodes(cell).iter().zip(grads) {
        for c in 0..2 {
            let a = coeffs[c * n + node];
            g[c][0] += a * d[0];
            g[c][1] += a * d[1];
        }
    }
    g
}

fn require_components(space: &FeSpace, components: usize, what: &str) -> Result<()> {
    if space.components() != components {
        return Err(Error::DimensionMismatch(format!(
            "{what} needs a {components}-component space (got {})",
            space.components()
        )));
    }
    Ok(())
}

fn require_same_mesh(a: &FeSpace, b: &FeSpace) -> Result<()> {
    if a.same_mesh(b) {
        Ok(())
    } else {
        Err(Error::MeshMismatch)
    }
}

/// `sum_q w_q c(cell, q) eps(phi_j) : eps(phi_i)` over the vector space.
fn assemble_strain_form(
    space: &FeSpace,
    rule: &QuadratureRule,
    mut coeff: impl FnMut(usize, usize, &[[f64; 2]]) -> f64,
) -> CsrMatrix {
    let nb = space.basis().len();
    let n = space.n_nodes();
    let tab = space.basis().tabulate(rule);
    let mut grads = vec![[0.0; 2]; nb];
    // local blocks xx, xy, yx, yy
    let mut local = vec![0.0; 4 * nb * nb];
    let mut builder = TripletBuilder::with_capacity(2 * n, 2 * n, space.n_cells() * 4 * nb * nb);
    for cell in 0..space.n_cells() {
        local.iter_mut().for_each(|v| *v = 0.0);
        let det = space.cell_map(cell).det();
        for q in 0..rule.len() {
            physical_grads(space, &tab, cell, q, &mut grads);
            let w = rule.weights()[q] * det * coeff(cell, q, &grads);
            for i in 0..nb {
                let gi = grads[i];
                for j in 0..nb {
                    let gj = grads[j];
                    local[i * nb + j] += w * (gi[0] * gj[0] + 0.5 * gi[1] * gj[1]);
                    local[nb * nb + i * nb + j] += w * 0.5 * gi[1] * gj[0];
                    local[2 * nb * nb + i * nb + j] += w * 0.5 * gi[0] * gj[1];
                    local[3 * nb * nb + i * nb + j] += w * (gi[1] * gj[1] + 0.5 * gi[0] * gj[0]);
                }
            }
        }
        let nodes = space.cell_nodes(cell);
        for (b, (ci, cj)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
            for i in 0..nb {
                for j in 0..nb {
                    builder.push(ci * n + nodes[i], cj * n + nodes[j], local[b * nb * nb + i * nb + j]);
                }
            }
        }
    }
    builder.build()
}

/// Strain stiffness `int eps(phi_j) : eps(phi_i)`.
pub fn assemble_strain_stiffness(velocity: &FeSpace, rule: &QuadratureRule) -> Result<CsrMatrix> {
    require_components(velocity, 2, "strain stiffness")?;
    Ok(assemble_strain_form(velocity, rule, |_, _, _| 1.0))
}

/// Frozen momentum block
/// `int 2 nu(theta) [eta(|eps(w)|^2) + sigma |eps(w)|^(r-2)] eps(phi_j) : eps(phi_i)`.
pub fn assemble_a1_frozen(
    frozen: &FrozenCoefficients<'_>,
    velocity: &FeSpace,
    temperature: &FeSpace,
    viscosity: &ViscosityModel,
    params: &CarreauParams,
    rule: &QuadratureRule,
) -> Result<CsrMatrix> {
    frozen.validate()?;
    require_components(velocity, 2, "momentum block")?;
    require_components(temperature, 1, "temperature field")?;
    require_same_mesh(velocity, temperature)?;
    velocity.check_len(frozen.velocity, "frozen velocity")?;
    temperature.check_len(frozen.temperature, "frozen temperature")?;
    let t_tab = temperature.basis().tabulate(rule);
    let (sigma, r_reg) = (frozen.sigma, frozen.r_reg);
    Ok(assemble_strain_form(velocity, rule, |cell, q, grads| {
        let eps = SymTensor2::sym_grad(vector_grad(velocity, frozen.velocity, grads, cell));
        let z = eps.norm_sq();
        let theta = scalar_value(temperature, frozen.temperature, &t_tab, cell, q);
        let mut c = params.eval_eta(z);
        if sigma > 0.0 {
            c += sigma * regularization_weight(z.sqrt(), r_reg);
        }
        2.0 * viscosity.nu(theta) * c
    }))
}

/// Divergence coupling `B[l][j] = -int q_l div phi_j` (pressure rows, velocity columns).
pub fn assemble_b(velocity: &FeSpace, pressure: &FeSpace, rule: &QuadratureRule) -> Result<CsrMatrix> {
    require_components(velocity, 2, "divergence coupling")?;
    require_components(pressure, 1, "divergence coupling")?;
    require_same_mesh(velocity, pressure)?;
    let nv = velocity.n_nodes();
    let (nbv, nbp) = (velocity.basis().len(), pressure.basis().len());
    let v_tab = velocity.basis().tabulate(rule);
    let p_tab = pressure.basis().tabulate(rule);
    let mut grads = vec![[0.0; 2]; nbv];
    let mut local = vec![0.0; 2 * nbp * nbv];
    let mut builder = TripletBuilder::with_capacity(pressure.n_dofs(), velocity.n_dofs(), velocity.n_cells() * 2 * nbp * nbv);
    for cell in 0..velocity.n_cells() {
        local.iter_mut().for_each(|v| *v = 0.0);
        let det = velocity.cell_map(cell).det();
        for q in 0..rule.len() {
            physical_grads(velocity, &v_tab, cell, q, &mut grads);
            let w = rule.weights()[q] * det;
            for (l, &ql) in p_tab.values(q).iter().enumerate() {
                for j in 0..nbv {
                    local[l * nbv + j] -= w * ql * grads[j][0];
                    local[nbp * nbv + l * nbv + j] -= w * ql * grads[j][1];
                }
            }
        }
        let (vn, pn) = (velocity.cell_nodes(cell), pressure.cell_nodes(cell));
        for c in 0..2 {
            for l in 0..nbp {
                for j in 0..nbv {
                    builder.push(pn[l], c * nv + vn[j], local[c * nbp * nbv + l * nbv + j]);
                }
            }
        }
    }
    Ok(builder.build())
}

/// Scalar diffusion `int kappa grad psi_j . grad psi_i`.
pub fn assemble_a2(temperature: &FeSpace, kappa: f64, rule: &QuadratureRule) -> Result<CsrMatrix> {
    require_components(temperature, 1, "diffusion")?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid(format!("kappa must be positive (got {kappa})")));
    }
    let nb = temperature.basis().len();
    let tab = temperature.basis().tabulate(rule);
    let mut grads = vec![[0.0; 2]; nb];
    let mut local = vec![0.0; nb * nb];
    let n = temperature.n_dofs();
    let mut builder = TripletBuilder::with_capacity(n, n, temperature.n_cells() * nb * nb);
    for cell in 0..temperature.n_cells() {
        local.iter_mut().for_each(|v| *v = 0.0);
        let det = temperature.cell_map(cell).det();
        for q in 0..rule.len() {
            physical_grads(temperature, &tab, cell, q, &mut grads);
            let w = rule.weights()[q] * det * kappa;
            for i in 0..nb {
                for j in 0..nb {
                    local[i * nb + j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
                }
            }
        }
        let nodes = temperature.cell_nodes(cell);
        for i in 0..nb {
            for j in 0..nb {
                builder.push(nodes[i], nodes[j], local[i * nb + j]);
            }
        }
    }
    Ok(builder.build())
}

/// Antisymmetrized convection
/// `C[i][j] = 1/2 int (u . grad psi_j) psi_i - 1/2 int (u . grad psi_i) psi_j`,
/// skew-symmetric to the last bit.
pub fn assemble_ch(
    velocity_field: &[f64],
    velocity: &FeSpace,
    temperature: &FeSpace,
    rule: &QuadratureRule,
) -> Result<CsrMatrix> {
    require_components(velocity, 2, "convection velocity")?;
    require_components(temperature, 1, "convection")?;
    require_same_mesh(velocity, temperature)?;
    velocity.check_len(velocity_field, "convection velocity")?;
    let nb = temperature.basis().len();
    let v_tab = velocity.basis().tabulate(rule);
    let t_tab = temperature.basis().tabulate(rule);
    let mut grads = vec![[0.0; 2]; nb];
    let mut d = vec![0.0; nb * nb];
    let n = temperature.n_dofs();
    let mut builder = TripletBuilder::with_capacity(n, n, temperature.n_cells() * nb * nb);
    for cell in 0..temperature.n_cells() {
        d.iter_mut().for_each(|v| *v = 0.0);
        let det = temperature.cell_map(cell).det();
        for q in 0..rule.len() {
            physical_grads(temperature, &t_tab, cell, q, &mut grads);
            let u = vector_value(velocity, velocity_field, &v_tab, cell, q);
            let w = 0.5 * rule.weights()[q] * det;
            let vals = t_tab.values(q);
            for i in 0..nb {
                for j in 0..nb {
                    d[i * nb + j] += w * (u[0] * grads[j][0] + u[1] * grads[j][1]) * vals[i];
                }
            }
        }
        let nodes = temperature.cell_nodes(cell);
        for i in 0..nb {
            for j in 0..nb {
                builder.push(nodes[i], nodes[j], d[i * nb + j] - d[j * nb + i]);
            }
        }
    }
    Ok(builder.build())
}

/// `int f . phi_i` for a vector source.
pub fn assemble_vector_load(velocity: &FeSpace, rule: &QuadratureRule, f: impl Fn(Point) -> [f64; 2]) -> Result<Vec<f64>> {
    require_components(velocity, 2, "vector load")?;
    let n = velocity.n_nodes();
    let tab = velocity.basis().tabulate(rule);
    let mut out = vec![0.0; 2 * n];
    for cell in 0..velocity.n_cells() {
        let map = velocity.cell_map(cell);
        let nodes = velocity.cell_nodes(cell);
        for (q, &xi) in rule.points().iter().enumerate() {
            let fx = f(map.map(xi));
            let w = rule.weights()[q] * map.det();
            for (&node, v) in nodes.iter().zip(tab.values(q)) {
                out[node] += w * fx[0] * v;
                out[n + node] += w * fx[1] * v;
            }
        }
    }
    Ok(out)
}

/// `int g psi_i` for a scalar source.
pub fn assemble_scalar_load(space: &FeSpace, rule: &QuadratureRule, g: impl Fn(Point) -> f64) -> Result<Vec<f64>> {
    require_components(space, 1, "scalar load")?;
    let tab = space.basis().tabulate(rule);
    let mut out = vec![0.0; space.n_dofs()];
    for cell in 0..space.n_cells() {
        let map = space.cell_map(cell);
        for (q, &xi) in rule.points().iter().enumerate() {
            let gx = g(map.map(xi));
            let w = rule.weights()[q] * map.det();
            for (&node, v) in space.cell_nodes(cell).iter().zip(tab.values(q)) {
                out[node] += w * gx * v;
            }
        }
    }
    Ok(out)
}

/// `m[l] = int q_l`, the row enforcing a zero-mean pressure.
pub fn zero_mean_constraint(pressure: &FeSpace, rule: &QuadratureRule) -> Result<Vec<f64>> {
    assemble_scalar_load(pressure, rule, |_| 1.0)
}
