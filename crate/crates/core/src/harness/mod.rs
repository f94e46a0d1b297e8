//! Multi-level convergence studies.

mod config;
mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use rayon::prelude::*;

pub use config::{parse_config, parse_config_str};
pub use report::{csv_string, emit_csv, emit_loglog_svg, emit_sigma_svg, parse_csv, render_loglog_svg, Series, CSV_HEADER};

use crate::constitutive::{CarreauParams, ViscosityModel};
use crate::error::{Error, Result};
use crate::manufactured::{eoc, error_norms, CaseKind, ManufacturedCase};
use crate::mesh::Mesh;
use crate::solver::{CoupledProblem, CoupledState, IterationLog, SolverConfig};
use crate::space::MixedSpaces;

/// Default mesh levels.
pub const DEFAULT_LEVELS: [usize; 4] = [8, 16, 32, 64];
/// Default regularization sweep for the degenerate case.
pub const DEFAULT_SIGMAS: [f64; 5] = [0.0, 1e-2, 1e-3, 1e-4, 1e-5];

/// Description of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudySpec {
    pub case: CaseKind,
    pub p: Vec<f64>,
    /// `None` takes the case default (0.5, or 0 for test2)
    pub eta_inf: Option<f64>,
    pub eta0: f64,
    pub lambda: f64,
    pub viscosity: ViscosityModel,
    /// velocity/temperature polynomial degree (2 or 3); pressure uses one less
    pub degree: usize,
    pub levels: Vec<usize>,
    /// empty means `[0]` for test1/rigid and [`DEFAULT_SIGMAS`] for test2
    pub sigma: Vec<f64>,
    pub solver: SolverConfig,
    /// error quadrature exactness over the assembly rule
    pub quad_boost: usize,
    /// worker threads (0 lets rayon decide)
    pub jobs: usize,
    pub out_dir: PathBuf,
    pub svg: bool,
}

impl Default for StudySpec {
    fn default() -> Self {
        Self {
            case: CaseKind::Test1,
            p: vec![1.6],
            eta_inf: None,
            eta0: 2.0,
            lambda: 1.0,
            viscosity: ViscosityModel::ExpDecay,
            degree: 2,
            levels: DEFAULT_LEVELS.to_vec(),
            sigma: Vec::new(),
            solver: SolverConfig::default(),
            quad_boost: 4,
            jobs: 1,
            out_dir: PathBuf::from("results"),
            svg: true,
        }
    }
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.degree) {
            return Err(Error::invalid(format!("degree must be 2 or 3 (got {})", self.degree)));
        }
        if self.p.is_empty() {
            return Err(Error::invalid("p list is empty"));
        }
        if self.levels.is_empty() || self.levels[0] == 0 {
            return Err(Error::invalid("levels must be positive"));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("levels must be strictly increasing (got {:?})", self.levels)));
        }
        if let Some(s) = self.sigma.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid(format!("sigma entries must be >= 0 (got {s})")));
        }
        self.solver.validate()?;
        self.viscosity.validate()?;
        for &p in &self.p {
            self.params(p)?;
        }
        Ok(())
    }

    pub fn eta_inf(&self) -> f64 {
        self.eta_inf.unwrap_or_else(|| self.case.default_eta_inf())
    }

    pub fn sigmas(&self) -> Vec<f64> {
        match (self.sigma.is_empty(), self.case) {
            (false, _) => self.sigma.clone(),
            (true, CaseKind::Test2) => DEFAULT_SIGMAS.to_vec(),
            (true, _) => vec![0.0],
        }
    }

    pub fn params(&self, p: f64) -> Result<CarreauParams> {
        CarreauParams::new(self.eta_inf(), self.eta0, self.lambda, p)
    }

    pub fn manufactured(&self, p: f64) -> Result<ManufacturedCase> {
        ManufacturedCase::new(self.case, self.params(p)?, self.viscosity, self.solver.kappa)
    }

    /// (p, sigma) pairs in report order.
    pub fn series(&self) -> Vec<(f64, f64)> {
        let sigmas = self.sigmas();
        self.p.iter().flat_map(|&p| sigmas.iter().map(move |&s| (p, s))).collect()
    }
}

/// Outcome code of one level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    NonConvergence = 1,
    Diverged = 2,
    Failed = 3,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Status::Ok),
            1 => Some(Status::NonConvergence),
            2 => Some(Status::Diverged),
            3 => Some(Status::Failed),
            _ => None,
        }
    }

    fn of(err: &Error) -> Self {
        match err {
            Error::NonConvergence { .. } => Status::NonConvergence,
            Error::Diverged { .. } => Status::Diverged,
            _ => Status::Failed,
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRow {
    pub level: usize,
    pub h: f64,
    pub ndof_u: usize,
    pub ndof_p: usize,
    pub ndof_t: usize,
    pub iters: usize,
    pub err_u_l2: f64,
    pub err_u_w1s: f64,
    pub err_pi: f64,
    pub err_t_h1: f64,
    pub status: Status,
}

impl LevelRow {
    pub fn is_ok(&self) -> bool {
        self.status == Status::Ok
    }

    /// Errors in CSV column order.
    pub fn errors(&self) -> [f64; 4] {
        [self.err_u_l2, self.err_u_w1s, self.err_pi, self.err_t_h1]
    }
}

/// Names of the four error families, in [`LevelRow::errors`] order.
pub const ERROR_FAMILIES: [&str; 4] = ["err_u_l2", "err_u_w1s", "err_pi", "err_t_h1"];

/// Extra per-level quantities that are not part of the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDiagnostics {
    pub log: Option<IterationLog>,
    pub message: Option<String>,
    /// max over accepted iterates of ||B u_h||_inf
    pub max_div_residual: f64,
    /// max over accepted iterates of |mean(pi_h)|
    pub max_pressure_mean: f64,
    pub err_u_grad_ls: f64,
    pub err_t_l2: f64,
}

/// Results of one (p, sigma) series across mesh levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub p: f64,
    pub sigma: f64,
    pub rows: Vec<LevelRow>,
    pub diagnostics: Vec<LevelDiagnostics>,
    pub metadata: BTreeMap<String, String>,
}

impl ConvergenceReport {
    /// EOCs of one error family between consecutive levels; NaN where
    /// either level failed.
    pub fn eocs(&self, family: usize) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].errors()[family], w[1].errors()[family]);
                if w[0].is_ok() && w[1].is_ok() {
                    eoc(&[a, b], &[w[0].h, w[1].h]).map_or(f64::NAN, |v| v[0])
                } else {
                    f64::NAN
                }
            })
            .collect()
    }

    /// EOC of a family over the two finest levels.
    pub fn finest_eoc(&self, family: usize) -> f64 {
        self.eocs(family).last().copied().unwrap_or(f64::NAN)
    }

    /// File stem such as `test1_r1_p1.6_sigma0`.
    pub fn stem(&self) -> String {
        format!(
            "{}_r{}_p{}_sigma{}",
            self.metadata.get("case").map_or("case", String::as_str),
            self.metadata.get("pressure_degree").map_or("?", String::as_str),
            self.p,
            self.sigma
        )
    }
}

struct Job {
    p: f64,
    sigma: f64,
    level: usize,
}

struct Outcome {
    row: LevelRow,
    diag: LevelDiagnostics,
    state: Option<CoupledState>,
}

fn solve_level(
    spec: &StudySpec,
    spaces: &MixedSpaces,
    p: f64,
    sigma: f64,
    initial: Option<CoupledState>,
) -> Outcome {
    let (nu, np, nt) = spaces.dofs();
    let mut row = LevelRow {
        level: 0,
        h: spaces.mesh().metrics().h_max,
        ndof_u: nu,
        ndof_p: np,
        ndof_t: nt,
        iters: 0,
        err_u_l2: f64::NAN,
        err_u_w1s: f64::NAN,
        err_pi: f64::NAN,
        err_t_h1: f64::NAN,
        status: Status::Failed,
    };
    let mut diag = LevelDiagnostics {
        log: None,
        message: None,
        max_div_residual: f64::NAN,
        max_pressure_mean: f64::NAN,
        err_u_grad_ls: f64::NAN,
        err_t_l2: f64::NAN,
    };
    let result = (|| {
        let case = spec.manufactured(p)?;
        let cfg = SolverConfig { sigma, ..spec.solver };
        let mut problem = CoupledProblem::from_case(spaces, &case, cfg)?;
        let (state, log) = problem.solve(initial)?;
        let report = error_norms(&state, spaces, &case, spec.quad_boost)?;
        Ok::<_, Error>((state, log, report))
    })();
    match result {
        Ok((state, log, report)) => {
            row.iters = log.len();
            row.err_u_l2 = report.err_u_l2;
            row.err_u_w1s = report.err_u_w1s;
            row.err_pi = report.err_pi;
            row.err_t_h1 = report.err_theta_h1;
            row.status = Status::Ok;
            diag.max_div_residual = log.records.iter().map(|r| r.div_residual).fold(0.0, f64::max);
            diag.max_pressure_mean = log.records.iter().map(|r| r.pressure_mean.abs()).fold(0.0, f64::max);
            diag.err_u_grad_ls = report.err_u_grad_ls;
            diag.err_t_l2 = report.err_theta_l2;
            diag.log = Some(log);
            Outcome {
                row,
                diag,
                state: Some(state),
            }
        }
        Err(e) => {
            log::warn!("p={p} sigma={sigma} h={:.4e}: {e}", row.h);
            row.status = Status::of(&e);
            if let Error::NonConvergence { iterations, log, .. } | Error::Diverged { iteration: iterations, log, .. } = &e {
                row.iters = *iterations;
                diag.log = Some((**log).clone());
            }
            diag.message = Some(e.to_string());
            Outcome { row, diag, state: None }
        }
    }
}

fn metadata(spec: &StudySpec, p: f64, sigma: f64, assembly_exactness: usize) -> BTreeMap<String, String> {
    let eta_inf = spec.eta_inf();
    let s = if eta_inf > 0.0 { 2.0 } else { p };
    let entries = [
        ("case", spec.case.to_string()),
        ("p", p.to_string()),
        ("eta_inf", eta_inf.to_string()),
        ("eta0", spec.eta0.to_string()),
        ("lambda", spec.lambda.to_string()),
        ("kappa", spec.solver.kappa.to_string()),
        ("viscosity", spec.viscosity.to_string()),
        ("sigma", sigma.to_string()),
        ("r_reg", spec.solver.r_reg.to_string()),
        ("sigma_term", "2 nu(theta) [eta(|eps|^2) + sigma |eps|^(r-2)] eps".into()),
        ("velocity_degree", spec.degree.to_string()),
        ("pressure_degree", (spec.degree - 1).to_string()),
        ("temperature_degree", spec.degree.to_string()),
        ("levels", format!("{:?}", spec.levels)),
        ("tol", format!("{:e}", spec.solver.tol)),
        ("max_iter", spec.solver.max_iter.to_string()),
        ("stop_norms", format!("u in L^{s}, pi in L^{}, theta in L^2", s / (s - 1.0))),
        ("initial_iterate", if spec.solver.warm_start { "warm (previous series)" } else { "u=0, pi=0, theta=boundary lift" }.into()),
        ("quadrature_assembly", assembly_exactness.to_string()),
        ("quadrature_error", (assembly_exactness + spec.quad_boost).to_string()),
        ("velocity_trace", "nodal interpolant projected to zero discrete flux".into()),
        ("version", crate::VERSION.to_string()),
    ];
    entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Runs every (p, sigma, level) combination and collects one report per
/// (p, sigma). Failed solves give NaN rows with a nonzero status.
///
/// Solves run in a pool of `spec.jobs` workers; results are gathered in spec
/// order, so the output does not depend on scheduling. With `warm_start`,
/// the series at a given level are solved in order, each starting from the
/// previous one's state.
pub fn run_study(spec: &StudySpec) -> Result<Vec<ConvergenceReport>> {
    spec.validate()?;
    let series = spec.series();
    let r = spec.degree - 1;
    let spaces: Vec<MixedSpaces> = spec
        .levels
        .iter()
        .map(|&n| MixedSpaces::new(Arc::new(Mesh::unit_square(n)?), r, spec.solver.quad_exactness))
        .collect::<Result<_>>()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;

    let mut outcomes: Vec<Vec<Option<Outcome>>> = (0..series.len()).map(|_| (0..spec.levels.len()).map(|_| None).collect()).collect();
    if spec.solver.warm_start {
        let per_level: Vec<Vec<Outcome>> = pool.install(|| {
            spaces
                .par_iter()
                .map(|sp| {
                    let mut prev: Option<CoupledState> = None;
                    series
                        .iter()
                        .map(|&(p, sigma)| {
                            let out = solve_level(spec, sp, p, sigma, prev.take());
                            prev = out.state.clone();
                            out
                        })
                        .collect()
                })
                .collect()
        });
        for (li, level) in per_level.into_iter().enumerate() {
            for (si, out) in level.into_iter().enumerate() {
                outcomes[si][li] = Some(out);
            }
        }
    } else {
        let jobs: Vec<(usize, usize, Job)> = series
            .iter()
            .enumerate()
            .flat_map(|(si, &(p, sigma))| {
                spec.levels
                    .iter()
                    .enumerate()
                    .map(move |(li, &level)| (si, li, Job { p, sigma, level }))
            })
            .collect();
        let done: Vec<Outcome> = pool.install(|| {
            jobs.par_iter()
                .map(|(_, li, job)| {
                    log::info!("solving p={} sigma={} n={}", job.p, job.sigma, job.level);
                    solve_level(spec, &spaces[*li], job.p, job.sigma, None)
                })
                .collect()
        });
        for ((si, li, _), out) in jobs.iter().zip(done) {
            outcomes[*si][*li] = Some(out);
        }
    }

    let exactness = spaces[0].rule.exactness();
    Ok(series
        .iter()
        .zip(outcomes)
        .map(|(&(p, sigma), outs)| {
            let (mut rows, mut diagnostics) = (Vec::new(), Vec::new());
            for (out, &n) in outs.into_iter().zip(&spec.levels) {
                let mut out = out.expect("every job produces an outcome");
                out.row.level = n;
                rows.push(out.row);
                diagnostics.push(out.diag);
            }
            ConvergenceReport {
                p,
                sigma,
                rows,
                diagnostics,
                metadata: metadata(spec, p, sigma, exactness),
            }
        })
        .collect())
}

/// Runs a study and writes `<stem>.csv`, `<stem>.meta.txt` and, if enabled,
/// `<stem>.svg` per series plus a sigma overlay for sweeps.
pub fn run_and_write(spec: &StudySpec) -> Result<Vec<ConvergenceReport>> {
    let reports = run_study(spec)?;
    std::fs::create_dir_all(&spec.out_dir).map_err(|e| Error::io(&spec.out_dir, e))?;
    for rep in &reports {
        let stem = rep.stem();
        emit_csv(rep, spec.out_dir.join(format!("{stem}.csv")))?;
        let meta: String = rep.metadata.iter().map(|(k, v)| format!("{k} = {v}\n")).collect();
        let meta_path = spec.out_dir.join(format!("{stem}.meta.txt"));
        std::fs::write(&meta_path, meta).map_err(|e| Error::io(&meta_path, e))?;
        if spec.svg && rep.rows.iter().filter(|r| r.is_ok()).count() >= 2 {
            emit_loglog_svg(rep, spec.out_dir.join(format!("{stem}.svg")))?;
        }
    }
    if spec.svg && spec.sigmas().len() > 1 {
        for &p in &spec.p {
            let group: Vec<&ConvergenceReport> = reports.iter().filter(|r| r.p == p).collect();
            let path = spec.out_dir.join(format!("{}_r{}_p{}_sigma_sweep.svg", spec.case, spec.degree - 1, p));
            if let Err(e) = emit_sigma_svg(&group, &path) {
                log::warn!("skipping {}: {e}", path.display());
            }
        }
    }
    Ok(reports)
}
