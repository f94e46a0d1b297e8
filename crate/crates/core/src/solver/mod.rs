//! Picard fixed-point solver for the coupled Stokes/heat system.
//!
//! Each iteration freezes the viscosity at the previous iterate, solves the
//! Stokes saddle-point problem, then solves the convection-diffusion problem
//! for the temperature with the new velocity.

mod linear;
mod picard;

use std::fmt::Write as _;

pub use linear::{saddle_solve, DirectSolver, RESIDUAL_TOL};
pub use picard::{picard_solve, BoundaryData, CoupledProblem};

use crate::error::{Error, Result};

/// Fixed-point and discretization settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// stopping tolerance on the summed increments
    pub tol: f64,
    pub max_iter: usize,
    /// regularization weight (0 disables the extra term)
    pub sigma: f64,
    /// regularization exponent, >= 2
    pub r_reg: f64,
    /// heat diffusion coefficient
    pub kappa: f64,
    /// assembly quadrature exactness; `None` means 2 (r + 1) + 4
    pub quad_exactness: Option<usize>,
    /// start from a supplied state instead of zero (see [`picard_solve`])
    pub warm_start: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            sigma: 0.0,
            r_reg: 2.0,
            kappa: 1.0,
            quad_exactness: None,
            warm_start: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::invalid(format!("tol must be positive (got {})", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be >= 0 (got {})", self.sigma)));
        }
        if !(self.r_reg >= 2.0 && self.r_reg.is_finite()) {
            return Err(Error::invalid(format!("r_reg must be >= 2 (got {})", self.r_reg)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid(format!("kappa must be positive (got {})", self.kappa)));
        }
        Ok(())
    }
}

/// Discrete velocity, mean-free pressure and full temperature coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub u: Vec<f64>,
    pub pi: Vec<f64>,
    pub theta: Vec<f64>,
}

/// One fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// velocity increment in L^s
    pub du: f64,
    /// pressure increment in L^{s'}
    pub dpi: f64,
    /// temperature increment in L^2
    pub dtheta: f64,
    /// ||eps(u_h)||_{L^{(s-1) p2}}
    pub eps_norm_diag: f64,
    /// ||grad theta_h||_{L^2}
    pub grad_theta_diag: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// ||B u_h||_inf
    pub div_residual: f64,
    /// int pi_h
    pub pressure_mean: f64,
}

impl IterationRecord {
    pub fn increment(&self) -> f64 {
        self.du + self.dpi + self.dtheta
    }
}

/// Per-iteration diagnostics of a Picard solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
    /// velocity exponent s of the stopping norm
    pub s: f64,
    /// exponent of the diagnostic strain norm, (s - 1) p2
    pub diag_exponent: f64,
}

impl IterationLog {
    pub const CSV_HEADER: &'static str =
        "iter,du,dpi,dtheta,eps_norm_diag,grad_theta_diag,theta_min,theta_max,div_residual,pressure_mean";

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.iter,
                r.du,
                r.dpi,
                r.dtheta,
                r.eps_norm_diag,
                r.grad_theta_diag,
                r.theta_min,
                r.theta_max,
                r.div_residual,
                r.pressure_mean
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig { tol: -1.0, ..Default::default() },
            SolverConfig { tol: 0.0, ..Default::default() },
            SolverConfig { max_iter: 0, ..Default::default() },
            SolverConfig { sigma: -1e-3, ..Default::default() },
            SolverConfig { r_reg: 1.5, ..Default::default() },
            SolverConfig { kappa: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn log_csv_shape() {
        let rec = IterationRecord {
            iter: 1,
            du: 1.0,
            dpi: 0.5,
            dtheta: 0.25,
            eps_norm_diag: 2.0,
            grad_theta_diag: 3.0,
            theta_min: 0.0,
            theta_max: 1.0,
            div_residual: 0.0,
            pressure_mean: 0.0,
        };
        let log = IterationLog {
            records: vec![rec, IterationRecord { iter: 2, ..rec }],
            s: 2.0,
            diag_exponent: 4.0,
        };
        assert_eq!(rec.increment(), 1.75);
        let csv = log.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], IterationLog::CSV_HEADER);
        assert!(lines[2].starts_with("2,1.0000000000000000e0,"));
    }
}
