//! Manufactured solutions with closed-form forcing, and error norms.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::{physical_grads, scalar_grad, scalar_value, vector_grad, vector_value};
use crate::constitutive::{CarreauParams, SymTensor2, ViscosityModel};
use crate::error::{Error, Result};
use crate::fe::quadrature;
use crate::mesh::Point;
use crate::solver::CoupledState;
use crate::space::MixedSpaces;

/// Built-in cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseKind {
    /// Swirling velocity, pressure sin(x+y), temperature cos(xy); eta_inf = 0.5 by default.
    Test1,
    /// Same exact fields as `Test1` with eta_inf = 0 (degenerate Carreau law).
    Test2,
    /// Rigid rotation u = (y, -x), pi = x + y - 1, theta = 1 + x - y; every field is
    /// linear, so any conforming discretization reproduces it exactly.
    Rigid,
}

impl CaseKind {
    pub fn default_eta_inf(self) -> f64 {
        match self {
            CaseKind::Test1 | CaseKind::Rigid => 0.5,
            CaseKind::Test2 => 0.0,
        }
    }

    pub fn all() -> [CaseKind; 3] {
        [CaseKind::Test1, CaseKind::Test2, CaseKind::Rigid]
    }
}

impl FromStr for CaseKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "test1" => Ok(CaseKind::Test1),
            "test2" => Ok(CaseKind::Test2),
            "rigid" => Ok(CaseKind::Rigid),
            other => Err(Error::invalid(format!("unknown case {other:?} (expected test1, test2 or rigid)"))),
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseKind::Test1 => "test1",
            CaseKind::Test2 => "test2",
            CaseKind::Rigid => "rigid",
        })
    }
}

/// Exact fields plus the data needed to derive their forcing terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    pub params: CarreauParams,
    pub viscosity: ViscosityModel,
    pub kappa: f64,
}

impl ManufacturedCase {
    pub fn new(kind: CaseKind, params: CarreauParams, viscosity: ViscosityModel, kappa: f64) -> Result<Self> {
        params.validate()?;
        viscosity.validate()?;
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must be positive (got {kappa})")));
        }
        Ok(Self {
            kind,
            params,
            viscosity,
            kappa,
        })
    }

    /// The swirl case with nu(t) = exp(-t).
    pub fn test1(p: f64, eta_inf: f64, eta0: f64, lambda: f64, kappa: f64) -> Result<Self> {
        let kind = if eta_inf == 0.0 { CaseKind::Test2 } else { CaseKind::Test1 };
        Self::new(kind, CarreauParams::new(eta_inf, eta0, lambda, p)?, ViscosityModel::ExpDecay, kappa)
    }

    pub fn velocity(&self, x: Point) -> [f64; 2] {
        let [x, y] = x;
        match self.kind {
            CaseKind::Test1 | CaseKind::Test2 => {
                let (sa, sb) = ((x * x + y * y).sin(), (x * x - y * y).sin());
                [5.0 * y * sa + 4.0 * y * sb, -5.0 * x * sa + 4.0 * x * sb]
            }
            CaseKind::Rigid => [y, -x],
        }
    }

    /// `g[i][j] = d u_i / d x_j`.
    pub fn velocity_grad(&self, x: Point) -> [[f64; 2]; 2] {
        let [x, y] = x;
        match self.kind {
            CaseKind::Test1 | CaseKind::Test2 => {
                let (a, b) = (x * x + y * y, x * x - y * y);
                let (sa, ca, sb, cb) = (a.sin(), a.cos(), b.sin(), b.cos());
                [
                    [
                        10.0 * x * y * ca + 8.0 * x * y * cb,
                        5.0 * sa + 10.0 * y * y * ca + 4.0 * sb - 8.0 * y * y * cb,
                    ],
                    [
                        -5.0 * sa - 10.0 * x * x * ca + 4.0 * sb + 8.0 * x * x * cb,
                        -10.0 * x * y * ca - 8.0 * x * y * cb,
                    ],
                ]
            }
            CaseKind::Rigid => [[0.0, 1.0], [-1.0, 0.0]],
        }
    }

    /// `h[i][j][k] = d^2 u_i / d x_j d x_k`.
    pub fn velocity_hessian(&self, x: Point) -> [[[f64; 2]; 2]; 2] {
        let [x, y] = x;
        match self.kind {
            CaseKind::Test1 | CaseKind::Test2 => {
                let (a, b) = (x * x + y * y, x * x - y * y);
                let (sa, ca, sb, cb) = (a.sin(), a.cos(), b.sin(), b.cos());
                let (x2, y2) = (x * x, y * y);
                let ux_xx = -16.0 * x2 * y * sb - 20.0 * x2 * y * sa + 8.0 * y * cb + 10.0 * y * ca;
                let ux_xy = 16.0 * x * y2 * sb - 20.0 * x * y2 * sa + 8.0 * x * cb + 10.0 * x * ca;
                let ux_yy = -16.0 * y2 * y * sb - 20.0 * y2 * y * sa - 24.0 * y * cb + 30.0 * y * ca;
                let uy_xx = -16.0 * x2 * x * sb + 20.0 * x2 * x * sa + 24.0 * x * cb - 30.0 * x * ca;
                let uy_xy = 16.0 * x2 * y * sb + 20.0 * x2 * y * sa - 8.0 * y * cb - 10.0 * y * ca;
                let uy_yy = -16.0 * x * y2 * sb + 20.0 * x * y2 * sa - 8.0 * x * cb - 10.0 * x * ca;
                [[[ux_xx, ux_xy], [ux_xy, ux_yy]], [[uy_xx, uy_xy], [uy_xy, uy_yy]]]
            }
            CaseKind::Rigid => [[[0.0; 2]; 2]; 2],
        }
    }

    pub fn pressure(&self, x: Point) -> f64 {
        match self.kind {
            CaseKind::Test1 | CaseKind::Test2 => (x[0] + x[1]).sin(),
            CaseKind::Rigid => x[0] + x[1] - 1.0,
        }
    }

    pub fn pressure_grad(&self, x: Point) -> [f64; 2] {
        match self.kind {
            CaseKind::Test1 | CaseKind::Test2 => {
                let c = (x[0] + x[1]).cos();
                [c, c]
            }
            CaseKind::Rigid => [1.0, 1.0],
        }
    }

    pub fn temperature(&self, x: Point) -> f64 {
        match self.kind {
            CaseKind::Test1 | CaseKind::Test2 => (x[0] * x[1]).cos(),
            CaseKind::Rigid => 1.0 + x[0] - x[1],
        }
    }

    pub fn temperature_grad(&self, x: Point) -> [f64; 2] {
        match self.kind {
            CaseKind::Test1 | CaseKind::Test2 => {
                let s = (x[0] * x[1]).sin();
                [-x[1] * s, -x[0] * s]
            }
            CaseKind::Rigid => [1.0, -1.0],
        }
    }

    pub fn temperature_laplacian(&self, x: Point) -> f64 {
        match self.kind {
            CaseKind::Test1 | CaseKind::Test2 => -(x[0] * x[0] + x[1] * x[1]) * (x[0] * x[1]).cos(),
            CaseKind::Rigid => 0.0,
        }
    }

    /// Viscous stress `2 nu(theta) eta(|eps(u)|^2) eps(u)` of the exact solution.
    pub fn stress(&self, x: Point) -> SymTensor2 {
        let eps = SymTensor2::sym_grad(self.velocity_grad(x));
        eps * (2.0 * self.viscosity.nu(self.temperature(x)) * self.params.eval_eta(eps.norm_sq()))
    }

    /// Momentum source `-div(2 nu(theta) eta(|eps(u)|^2) eps(u)) + grad pi`, by the chain rule.
    pub fn forcing_f(&self, x: Point) -> [f64; 2] {
        let g = self.velocity_grad(x);
        let h = self.velocity_hessian(x);
        let eps = SymTensor2::sym_grad(g);
        let e = [[eps.xx, eps.xy], [eps.xy, eps.yy]];
        // d eps_ij / d x_k
        let de = |i: usize, j: usize, k: usize| 0.5 * (h[i][j][k] + h[j][i][k]);
        let z = eps.norm_sq();
        let theta = self.temperature(x);
        let dtheta = self.temperature_grad(x);
        let (nu, dnu) = (self.viscosity.nu(theta), self.viscosity.nu_prime(theta));
        let (eta, deta) = (self.params.eval_eta(z), self.params.eta_prime(z));
        let mut dc = [0.0; 2];
        for (k, dck) in dc.iter_mut().enumerate() {
            let dz: f64 = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| 2.0 * e[i][j] * de(i, j, k)).sum();
            *dck = 2.0 * (dnu * dtheta[k] * eta + nu * deta * dz);
        }
        let c = 2.0 * nu * eta;
        let dp = self.pressure_grad(x);
        let mut f = [0.0; 2];
        for i in 0..2 {
            let div: f64 = (0..2).map(|j| c * de(i, j, j) + e[i][j] * dc[j]).sum();
            f[i] = -div + dp[i];
        }
        f
    }

    /// Heat source `-kappa lap(theta) + u . grad(theta)`.
    pub fn forcing_g(&self, x: Point) -> f64 {
        let u = self.velocity(x);
        let dt = self.temperature_grad(x);
        -self.kappa * self.temperature_laplacian(x) + u[0] * dt[0] + u[1] * dt[1]
    }

    pub fn divergence(&self, x: Point) -> f64 {
        let g = self.velocity_grad(x);
        g[0][0] + g[1][1]
    }
}

/// Load vectors `int f . phi_i` and `int g psi_i` of a manufactured case.
pub fn assemble_loads(case: &ManufacturedCase, spaces: &MixedSpaces) -> Result<(Vec<f64>, Vec<f64>)> {
    let f = crate::assembly::assemble_vector_load(&spaces.velocity, &spaces.rule, |x| case.forcing_f(x))?;
    let g = crate::assembly::assemble_scalar_load(&spaces.temperature, &spaces.rule, |x| case.forcing_g(x))?;
    Ok((f, g))
}

/// Maximum deviation between the closed-form sources and finite-difference oracles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcingValidation {
    pub samples: usize,
    /// max |f - f_fd| / max(|f_fd|, 1)
    pub max_rel_f: f64,
    /// max |g - g_fd| / max(|g_fd|, 1)
    pub max_rel_g: f64,
    pub max_abs_divergence: f64,
}

impl ForcingValidation {
    pub fn max_rel(&self) -> f64 {
        self.max_rel_f.max(self.max_rel_g)
    }
}

/// `-div S + grad pi` with `div S` from central differences of the exact stress field.
pub fn forcing_f_finite_difference(case: &ManufacturedCase, x: Point, step: f64) -> [f64; 2] {
    let s = |p: Point| case.stress(p);
    let (sxp, sxm) = (s([x[0] + step, x[1]]), s([x[0] - step, x[1]]));
    let (syp, sym) = (s([x[0], x[1] + step]), s([x[0], x[1] - step]));
    let inv = 0.5 / step;
    let div_x = (sxp.xx - sxm.xx) * inv + (syp.xy - sym.xy) * inv;
    let div_y = (sxp.xy - sxm.xy) * inv + (syp.yy - sym.yy) * inv;
    let dp = case.pressure_grad(x);
    [-div_x + dp[0], -div_y + dp[1]]
}

/// `-kappa lap(theta) + u . grad(theta)` with both derivatives by central differences.
pub fn forcing_g_finite_difference(case: &ManufacturedCase, x: Point, step: f64) -> f64 {
    let t = |p: Point| case.temperature(p);
    let c = t(x);
    let (xp, xm) = (t([x[0] + step, x[1]]), t([x[0] - step, x[1]]));
    let (yp, ym) = (t([x[0], x[1] + step]), t([x[0], x[1] - step]));
    let lap = (xp + xm + yp + ym - 4.0 * c) / (step * step);
    let grad = [(xp - xm) / (2.0 * step), (yp - ym) / (2.0 * step)];
    let u = case.velocity(x);
    -case.kappa * lap + u[0] * grad[0] + u[1] * grad[1]
}

/// Compares closed-form f and g against finite differences at seeded random interior points.
pub fn validate_forcing(case: &ManufacturedCase, samples: usize, seed: u64) -> ForcingValidation {
    const STRESS_STEP: f64 = 1e-5;
    const LAPLACE_STEP: f64 = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = ForcingValidation {
        samples,
        max_rel_f: 0.0,
        max_rel_g: 0.0,
        max_abs_divergence: 0.0,
    };
    for _ in 0..samples {
        let x = [rng.gen_range(1e-3..1.0 - 1e-3), rng.gen_range(1e-3..1.0 - 1e-3)];
        let f = case.forcing_f(x);
        let f_fd = forcing_f_finite_difference(case, x, STRESS_STEP);
        let diff = ((f[0] - f_fd[0]).powi(2) + (f[1] - f_fd[1]).powi(2)).sqrt();
        let scale = (f_fd[0].powi(2) + f_fd[1].powi(2)).sqrt().max(1.0);
        out.max_rel_f = out.max_rel_f.max(diff / scale);
        let g = case.forcing_g(x);
        let g_fd = forcing_g_finite_difference(case, x, LAPLACE_STEP);
        out.max_rel_g = out.max_rel_g.max((g - g_fd).abs() / g_fd.abs().max(1.0));
        out.max_abs_divergence = out.max_abs_divergence.max(case.divergence(x).abs());
    }
    out
}

/// Discretization errors of a computed state against the exact fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// ||u - u_h||_{L^2}
    pub err_u_l2: f64,
    /// ||eps(u - u_h)||_{L^s}
    pub err_u_w1s: f64,
    /// ||grad(u - u_h)||_{L^s}
    pub err_u_grad_ls: f64,
    /// mean-free pressure error in L^{s'}
    pub err_pi: f64,
    /// ||grad(theta - theta_h)||_{L^2}
    pub err_theta_h1: f64,
    /// ||theta - theta_h||_{L^2}
    pub err_theta_l2: f64,
    /// velocity exponent s
    pub s: f64,
    pub quadrature_exactness: usize,
}

/// Error norms by elementwise quadrature with exactness raised by `quadrature_boost`
/// over the assembly rule.
pub fn error_norms(
    state: &CoupledState,
    spaces: &MixedSpaces,
    case: &ManufacturedCase,
    quadrature_boost: usize,
) -> Result<ErrorReport> {
    spaces.velocity.check_len(&state.u, "velocity")?;
    spaces.pressure.check_len(&state.pi, "pressure")?;
    spaces.temperature.check_len(&state.theta, "temperature")?;
    let s = case.params.velocity_exponent();
    let s_dual = s / (s - 1.0);
    let exactness = spaces.rule.exactness() + quadrature_boost;
    let rule = quadrature(exactness)?;
    let (v, q, t) = (&spaces.velocity, &spaces.pressure, &spaces.temperature);
    let (v_tab, q_tab, t_tab) = (v.basis().tabulate(&rule), q.basis().tabulate(&rule), t.basis().tabulate(&rule));
    let mut v_grads = vec![[0.0; 2]; v.basis().len()];
    let mut t_grads = vec![[0.0; 2]; t.basis().len()];

    // pressure means
    let (mut mean_exact, mut mean_h) = (0.0, 0.0);
    for cell in 0..q.n_cells() {
        let map = q.cell_map(cell);
        for (k, &xi) in rule.points().iter().enumerate() {
            let w = rule.weights()[k] * map.det();
            mean_exact += w * case.pressure(map.map(xi));
            mean_h += w * scalar_value(q, &state.pi, &q_tab, cell, k);
        }
    }

    let mut acc = [0.0f64; 6];
    for cell in 0..v.n_cells() {
        let map = v.cell_map(cell);
        for (k, &xi) in rule.points().iter().enumerate() {
            let x = map.map(xi);
            let w = rule.weights()[k] * map.det();
            physical_grads(v, &v_tab, cell, k, &mut v_grads);
            physical_grads(t, &t_tab, cell, k, &mut t_grads);

            let uh = vector_value(v, &state.u, &v_tab, cell, k);
            let u = case.velocity(x);
            acc[0] += w * ((u[0] - uh[0]).powi(2) + (u[1] - uh[1]).powi(2));

            let gh = vector_grad(v, &state.u, &v_grads, cell);
            let g = case.velocity_grad(x);
            let dg = [[g[0][0] - gh[0][0], g[0][1] - gh[0][1]], [g[1][0] - gh[1][0], g[1][1] - gh[1][1]]];
            acc[1] += w * SymTensor2::sym_grad(dg).norm().powf(s);
            let full = dg.iter().flatten().map(|d| d * d).sum::<f64>().sqrt();
            acc[2] += w * full.powf(s);

            let ph = scalar_value(q, &state.pi, &q_tab, cell, k) - mean_h;
            let pe = case.pressure(x) - mean_exact;
            acc[3] += w * (pe - ph).abs().powf(s_dual);

            let th = scalar_value(t, &state.theta, &t_tab, cell, k);
            let dth = scalar_grad(t, &state.theta, &t_grads, cell);
            let dte = case.temperature_grad(x);
            acc[4] += w * ((dte[0] - dth[0]).powi(2) + (dte[1] - dth[1]).powi(2));
            acc[5] += w * (case.temperature(x) - th).powi(2);
        }
    }
    Ok(ErrorReport {
        err_u_l2: acc[0].sqrt(),
        err_u_w1s: acc[1].powf(1.0 / s),
        err_u_grad_ls: acc[2].powf(1.0 / s),
        err_pi: acc[3].powf(1.0 / s_dual),
        err_theta_h1: acc[4].sqrt(),
        err_theta_l2: acc[5].sqrt(),
        s,
        quadrature_exactness: exactness,
    })
}

/// Experimental orders `log(e_k / e_{k+1}) / log(h_k / h_{k+1})`.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(Error::invalid("eoc needs matching error and h lists of length >= 2"));
    }
    if errors.iter().chain(hs).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::invalid("eoc needs positive finite errors and mesh sizes"));
    }
    if hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("eoc needs strictly decreasing mesh sizes"));
    }
    Ok(errors
        .windows(2)
        .zip(hs.windows(2))
        .map(|(e, h)| (e[0] / e[1]).ln() / (h[0] / h[1]).ln())
        .collect())
}
