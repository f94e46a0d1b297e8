use crate::assembly::{
    assemble_a1_frozen, assemble_a2, assemble_b, assemble_ch, physical_grads, scalar_grad, scalar_value, vector_grad,
    vector_value, zero_mean_constraint, FrozenCoefficients,
};
use crate::constitutive::{CarreauParams, SymTensor2, ViscosityModel};
use crate::error::{Error, Result};
use crate::fe::Tabulation;
use crate::manufactured::{assemble_loads, ManufacturedCase};
use crate::space::{FeSpace, MixedSpaces};
use crate::sparse::{apply_dirichlet, CsrMatrix, SparseSystem, TripletBuilder};

use super::{CoupledState, DirectSolver, IterationLog, IterationRecord, SolverConfig};

/// Growth factor and streak length of the divergence guard.
const GROWTH_FACTOR: f64 = 10.0;
const GROWTH_STREAK: usize = 3;

/// Dirichlet data for velocity and temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub velocity_dofs: Vec<usize>,
    pub velocity_values: Vec<f64>,
    pub temperature_dofs: Vec<usize>,
    pub temperature_values: Vec<f64>,
}

impl BoundaryData {
    pub fn homogeneous(spaces: &MixedSpaces) -> Self {
        let velocity_dofs = spaces.velocity.boundary_dofs();
        let temperature_dofs = spaces.temperature.boundary_dofs();
        Self {
            velocity_values: vec![0.0; velocity_dofs.len()],
            temperature_values: vec![0.0; temperature_dofs.len()],
            velocity_dofs,
            temperature_dofs,
        }
    }

    /// Nodal interpolants of the exact traces. The velocity trace is then
    /// projected onto zero discrete flux, see [`BoundaryData::remove_flux`].
    pub fn from_case(case: &ManufacturedCase, spaces: &MixedSpaces, b: &CsrMatrix) -> Self {
        let mut out = Self::homogeneous(spaces);
        let u = spaces.velocity.interpolate_vector(|x| case.velocity(x));
        let t = spaces.temperature.interpolate_scalar(|x| case.temperature(x));
        out.velocity_values = out.velocity_dofs.iter().map(|&d| u[d]).collect();
        out.temperature_values = out.temperature_dofs.iter().map(|&d| t[d]).collect();
        out.remove_flux(b);
        out
    }

    /// Makes the boundary data compatible with `int div u_h = 0`.
    ///
    /// The pressure basis sums to one, so `sum_l (B u)_l = d . g` with `d` the
    /// column sums of `B` at the boundary dofs. An interpolated trace has a
    /// small nonzero flux, which would leave `B u_h != 0`; subtracting its
    /// component along `d` removes it with a perturbation of the same size.
    pub fn remove_flux(&mut self, b: &CsrMatrix) {
        let mut colsum = vec![0.0; b.ncols()];
        for r in 0..b.nrows() {
            for (c, v) in b.row(r) {
                colsum[c] += v;
            }
        }
        let d: Vec<f64> = self.velocity_dofs.iter().map(|&j| colsum[j]).collect();
        let dd: f64 = d.iter().map(|x| x * x).sum();
        if dd == 0.0 {
            return;
        }
        let dg: f64 = d.iter().zip(&self.velocity_values).map(|(a, g)| a * g).sum();
        let s = dg / dd;
        for (g, a) in self.velocity_values.iter_mut().zip(&d) {
            *g -= s * a;
        }
    }

    /// Zero in the interior, the boundary data on the boundary.
    fn lift(dofs: &[usize], values: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&d, &v) in dofs.iter().zip(values) {
            out[d] = v;
        }
        out
    }
}

/// All data of one discrete coupled problem, with cached operators.
#[derive(Debug)]
pub struct CoupledProblem<'a> {
    spaces: &'a MixedSpaces,
    params: CarreauParams,
    viscosity: ViscosityModel,
    config: SolverConfig,
    f_load: Vec<f64>,
    g_load: Vec<f64>,
    bc: BoundaryData,
    b: CsrMatrix,
    mean: Vec<f64>,
    /// velocity boundary dofs plus the pinned pressure dof, in system numbering
    stokes_dofs: Vec<usize>,
    stokes_values: Vec<f64>,
    a2: CsrMatrix,
    v_tab: Tabulation,
    q_tab: Tabulation,
    t_tab: Tabulation,
    stokes_solver: DirectSolver,
    heat_solver: DirectSolver,
}

impl<'a> CoupledProblem<'a> {
    pub fn new(
        spaces: &'a MixedSpaces,
        params: CarreauParams,
        viscosity: ViscosityModel,
        loads: (Vec<f64>, Vec<f64>),
        bc: BoundaryData,
        config: SolverConfig,
    ) -> Result<Self> {
        config.validate()?;
        params.validate()?;
        viscosity.validate()?;
        spaces.velocity.check_len(&loads.0, "momentum load")?;
        spaces.temperature.check_len(&loads.1, "heat load")?;
        if bc.velocity_dofs.len() != bc.velocity_values.len() || bc.temperature_dofs.len() != bc.temperature_values.len() {
            return Err(Error::DimensionMismatch("boundary dofs and values differ in length".into()));
        }
        if loads.0.iter().chain(&loads.1).chain(&bc.velocity_values).chain(&bc.temperature_values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("problem data"));
        }
        let rule = &spaces.rule;
        let mut stokes_dofs = bc.velocity_dofs.clone();
        stokes_dofs.push(spaces.velocity.n_dofs());
        let mut stokes_values = bc.velocity_values.clone();
        stokes_values.push(0.0);
        Ok(Self {
            stokes_dofs,
            stokes_values,
            b: assemble_b(&spaces.velocity, &spaces.pressure, rule)?,
            mean: zero_mean_constraint(&spaces.pressure, rule)?,
            a2: assemble_a2(&spaces.temperature, config.kappa, rule)?,
            v_tab: spaces.velocity.basis().tabulate(rule),
            q_tab: spaces.pressure.basis().tabulate(rule),
            t_tab: spaces.temperature.basis().tabulate(rule),
            spaces,
            params,
            viscosity,
            config,
            f_load: loads.0,
            g_load: loads.1,
            bc,
            stokes_solver: DirectSolver::new(),
            heat_solver: DirectSolver::new(),
        })
    }

    /// Problem with the forcing and boundary traces of a manufactured case.
    pub fn from_case(spaces: &'a MixedSpaces, case: &ManufacturedCase, config: SolverConfig) -> Result<Self> {
        if case.kappa != config.kappa {
            return Err(Error::invalid(format!(
                "case kappa {} differs from solver kappa {}",
                case.kappa, config.kappa
            )));
        }
        let b = assemble_b(&spaces.velocity, &spaces.pressure, &spaces.rule)?;
        let bc = BoundaryData::from_case(case, spaces, &b);
        let loads = assemble_loads(case, spaces)?;
        Self::new(spaces, case.params, case.viscosity, loads, bc, config)
    }

    pub fn spaces(&self) -> &MixedSpaces {
        self.spaces
    }

    pub fn boundary_data(&self) -> &BoundaryData {
        &self.bc
    }

    /// Divergence block `B` (pressure rows, velocity columns).
    pub fn divergence_matrix(&self) -> &CsrMatrix {
        &self.b
    }

    /// Velocity exponent s of the stopping norm.
    pub fn s(&self) -> f64 {
        self.params.velocity_exponent()
    }

    /// `(u, pi, theta) = (0, 0, temperature lift)`.
    pub fn initial_state(&self) -> CoupledState {
        let sp = self.spaces;
        CoupledState {
            u: vec![0.0; sp.velocity.n_dofs()],
            pi: vec![0.0; sp.pressure.n_dofs()],
            theta: BoundaryData::lift(&self.bc.temperature_dofs, &self.bc.temperature_values, sp.temperature.n_dofs()),
        }
    }

    /// Frozen Stokes solve: returns the new velocity and mean-free pressure.
    ///
    /// The pressure is fixed by pinning its first dof to zero and shifting the
    /// result to zero mean afterwards. This is equivalent to a zero-mean
    /// multiplier (constants lie in the kernel of `B^T` once the boundary flux
    /// vanishes) but keeps the system free of a dense row and column.
    pub fn stokes_step(&mut self, u_k: &[f64], theta_k: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let sp = self.spaces;
        if u_k.iter().chain(theta_k).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("frozen Stokes coefficients"));
        }
        let frozen = FrozenCoefficients {
            velocity: u_k,
            temperature: theta_k,
            sigma: self.config.sigma,
            r_reg: self.config.r_reg,
        };
        let a = assemble_a1_frozen(&frozen, &sp.velocity, &sp.temperature, &self.viscosity, &self.params, &sp.rule)?;
        let (nu, np) = (sp.velocity.n_dofs(), sp.pressure.n_dofs());
        let n = nu + np;
        let mut t = TripletBuilder::with_capacity(n, n, a.nnz() + 2 * self.b.nnz());
        t.push_block(&a, 0, 0);
        t.push_block_transposed(&self.b, 0, nu);
        t.push_block(&self.b, nu, 0);
        let mut rhs = vec![0.0; n];
        rhs[..nu].copy_from_slice(&self.f_load);
        let system = SparseSystem::new(t.build(), rhs)?;
        let system = apply_dirichlet(&system, &self.stokes_dofs, &self.stokes_values)?;
        let x = self.stokes_solver.solve(&system)?;
        let mut pi = x[nu..].to_vec();
        let shift = self.mean.iter().zip(&pi).map(|(m, p)| m * p).sum::<f64>() / self.mean.iter().sum::<f64>();
        pi.iter_mut().for_each(|p| *p -= shift);
        Ok((x[..nu].to_vec(), pi))
    }

    /// Convection-diffusion solve with the given velocity.
    pub fn temperature_step(&mut self, u: &[f64]) -> Result<Vec<f64>> {
        let sp = self.spaces;
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("convecting velocity"));
        }
        let c = assemble_ch(u, &sp.velocity, &sp.temperature, &sp.rule)?;
        let system = SparseSystem::new(self.a2.add(&c)?, self.g_load.clone())?;
        let system = apply_dirichlet(&system, &self.bc.temperature_dofs, &self.bc.temperature_values)?;
        self.heat_solver.solve(&system)
    }

    /// `(||du||_{L^s}, ||dpi||_{L^{s'}}, ||dtheta||_{L^2})`.
    pub fn increments(&self, old: &CoupledState, new: &CoupledState) -> (f64, f64, f64) {
        let s = self.s();
        let sd = s / (s - 1.0);
        let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| y - x).collect::<Vec<_>>();
        let sp = self.spaces;
        (
            lp_norm(&sp.velocity, &self.v_tab, sp, &diff(&old.u, &new.u), s),
            lp_norm(&sp.pressure, &self.q_tab, sp, &diff(&old.pi, &new.pi), sd),
            lp_norm(&sp.temperature, &self.t_tab, sp, &diff(&old.theta, &new.theta), 2.0),
        )
    }

    /// Exponent `(s - 1) p2` of the strain diagnostic, with `p2 = 2p / (p - 1)`
    /// (the admissible choice `q = 2p > p`); for p = 2 this gives p2 = 4.
    pub fn diag_exponent(&self) -> f64 {
        let p = self.params.p;
        (self.s() - 1.0) * 2.0 * p / (p - 1.0)
    }

    fn record(&self, iter: usize, old: &CoupledState, new: &CoupledState) -> IterationRecord {
        let (du, dpi, dtheta) = self.increments(old, new);
        let sp = self.spaces;
        let (eps_norm_diag, grad_theta_diag) = diagnostics(self, new, self.diag_exponent());
        let bu = self.b.matvec(&new.u);
        IterationRecord {
            iter,
            du,
            dpi,
            dtheta,
            eps_norm_diag,
            grad_theta_diag,
            theta_min: new.theta.iter().copied().fold(f64::INFINITY, f64::min),
            theta_max: new.theta.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            div_residual: bu.iter().fold(0.0, |m, v| m.max(v.abs())),
            pressure_mean: self.mean.iter().zip(&new.pi).map(|(m, p)| m * p).sum::<f64>() / area(sp),
        }
    }

    /// Runs the fixed-point iteration from `initial` (or [`initial_state`](Self::initial_state)).
    pub fn solve(&mut self, initial: Option<CoupledState>) -> Result<(CoupledState, IterationLog)> {
        let sp = self.spaces;
        let mut state = match initial {
            Some(st) => {
                sp.velocity.check_len(&st.u, "initial velocity")?;
                sp.pressure.check_len(&st.pi, "initial pressure")?;
                sp.temperature.check_len(&st.theta, "initial temperature")?;
                st
            }
            None => self.initial_state(),
        };
        let mut log = IterationLog {
            records: Vec::new(),
            s: self.s(),
            diag_exponent: self.diag_exponent(),
        };
        let mut streak = 0;
        for iter in 1..=self.config.max_iter {
            let (u, pi) = self.stokes_step(&state.u, &state.theta)?;
            let theta = self.temperature_step(&u)?;
            let next = CoupledState { u, pi, theta };
            let rec = self.record(iter, &state, &next);
            let inc = rec.increment();
            log::debug!(
                "picard {iter}: du={:.3e} dpi={:.3e} dtheta={:.3e} theta in [{:.4}, {:.4}]",
                rec.du,
                rec.dpi,
                rec.dtheta,
                rec.theta_min,
                rec.theta_max
            );
            if !inc.is_finite() {
                log.records.push(rec);
                return Err(Error::Diverged {
                    iteration: iter,
                    increment: inc,
                    log: Box::new(log),
                });
            }
            match log.last() {
                Some(prev) if inc > GROWTH_FACTOR * prev.increment() => streak += 1,
                _ => streak = 0,
            }
            log.records.push(rec);
            state = next;
            if inc < self.config.tol {
                return Ok((state, log));
            }
            if streak >= GROWTH_STREAK {
                return Err(Error::Diverged {
                    iteration: iter,
                    increment: inc,
                    log: Box::new(log),
                });
            }
        }
        let last_increment = log.last().map_or(f64::NAN, |r| r.increment());
        Err(Error::NonConvergence {
            iterations: self.config.max_iter,
            last_increment,
            state: Box::new(state),
            log: Box::new(log),
        })
    }
}

/// Solves a manufactured case from the zero initial iterate.
pub fn picard_solve(
    spaces: &MixedSpaces,
    case: &ManufacturedCase,
    config: &SolverConfig,
) -> Result<(CoupledState, IterationLog)> {
    CoupledProblem::from_case(spaces, case, *config)?.solve(None)
}

fn area(spaces: &MixedSpaces) -> f64 {
    let m = spaces.mesh();
    (0..m.triangles().len()).map(|t| m.area(t)).sum()
}

/// `(int |v_h|^p)^(1/p)` with the assembly rule.
fn lp_norm(space: &FeSpace, tab: &Tabulation, spaces: &MixedSpaces, coeffs: &[f64], p: f64) -> f64 {
    let rule = &spaces.rule;
    let mut acc = 0.0;
    for cell in 0..space.n_cells() {
        let det = space.cell_map(cell).det();
        for q in 0..rule.len() {
            let mag = if space.components() == 2 {
                let v = vector_value(space, coeffs, tab, cell, q);
                (v[0] * v[0] + v[1] * v[1]).sqrt()
            } else {
                scalar_value(space, coeffs, tab, cell, q).abs()
            };
            acc += rule.weights()[q] * det * mag.powf(p);
        }
    }
    acc.powf(1.0 / p)
}

/// `(||eps(u_h)||_{L^e}, ||grad theta_h||_{L^2})`.
fn diagnostics(problem: &CoupledProblem<'_>, state: &CoupledState, e: f64) -> (f64, f64) {
    let sp = problem.spaces;
    let rule = &sp.rule;
    let mut vg = vec![[0.0; 2]; sp.velocity.basis().len()];
    let mut tg = vec![[0.0; 2]; sp.temperature.basis().len()];
    let (mut a, mut b) = (0.0, 0.0);
    for cell in 0..sp.velocity.n_cells() {
        let det = sp.velocity.cell_map(cell).det();
        for q in 0..rule.len() {
            let w = rule.weights()[q] * det;
            physical_grads(&sp.velocity, &problem.v_tab, cell, q, &mut vg);
            physical_grads(&sp.temperature, &problem.t_tab, cell, q, &mut tg);
            a += w * SymTensor2::sym_grad(vector_grad(&sp.velocity, &state.u, &vg, cell)).norm().powf(e);
            let g = scalar_grad(&sp.temperature, &state.theta, &tg, cell);
            b += w * (g[0] * g[0] + g[1] * g[1]);
        }
    }
    (a.powf(1.0 / e), b.sqrt())
}
