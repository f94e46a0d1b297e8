//! `carreau`: single solves, convergence studies and consistency checks for
//! the non-isothermal Carreau Stokes solver.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use carreau_core::constitutive::property_sweep;
use carreau_core::harness::{self, StudySpec};
use carreau_core::manufactured::{error_norms, validate_forcing};
use carreau_core::solver::CoupledProblem;
use carreau_core::{CaseKind, Error, ManufacturedCase, Mesh, MixedSpaces, ViscosityModel};

/// Exit codes.
const EXIT_SOLVER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

/// Acceptance threshold of `validate-forcing`.
const FORCING_TOL: f64 = 1e-5;

#[derive(Parser, Debug)]
#[command(name = "carreau", version, about = "Mixed finite elements for non-isothermal Carreau-law Stokes flow")]
#[command(after_help = "Flags override values from --config, which override built-in defaults.\n\
Exit codes: 0 success, 1 solver failure, 2 invalid configuration, 3 I/O error.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one case on one mesh and print its errors as CSV.
    Solve(SolveArgs),
    /// Run a multi-level convergence study and write CSV/SVG reports.
    Study(StudyArgs),
    /// Sample the monotonicity and Lipschitz inequalities of the Carreau law.
    CheckConstitutive(ConstitutiveArgs),
    /// Compare closed-form forcing terms with finite-difference oracles.
    ValidateForcing(ForcingArgs),
}

#[derive(Args, Debug, Clone, Default)]
struct ModelArgs {
    /// Configuration file with [case], [solver], [mesh], [output] sections
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Manufactured case: test1, test2 or rigid [default: test1]
    #[arg(long)]
    case: Option<CaseKind>,
    /// Power-law exponent(s) in (1, 2], comma separated [default: 1.6]
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<f64>>,
    /// Limiting viscosity eta_inf (Pa s) [default: 0.5, 0 for test2]
    #[arg(long)]
    eta_inf: Option<f64>,
    /// Zero-shear viscosity eta0 (Pa s) [default: 2]
    #[arg(long)]
    eta0: Option<f64>,
    /// Carreau time constant lambda (s^2) [default: 1]
    #[arg(long)]
    lambda: Option<f64>,
    /// Heat diffusion coefficient kappa (m^2/s) [default: 1]
    #[arg(long)]
    kappa: Option<f64>,
    /// Temperature factor: exp_decay, constant(c), affine_clamped(a,b,lo,hi) [default: exp_decay]
    #[arg(long)]
    viscosity: Option<ViscosityModel>,
    /// Regularization weight(s) sigma >= 0, comma separated [default: 0; test2 sweeps 0,1e-2,1e-3,1e-4,1e-5]
    #[arg(long, value_delimiter = ',')]
    sigma: Option<Vec<f64>>,
    /// Regularization exponent r >= 2 [default: 2]
    #[arg(long)]
    r_reg: Option<f64>,
    /// Velocity/temperature degree, 2 (P2/P1/P2) or 3 (P3/P2/P3) [default: 2]
    #[arg(long)]
    degree: Option<usize>,
    /// Fixed-point tolerance on the summed increments [default: 1e-10]
    #[arg(long)]
    tol: Option<f64>,
    /// Maximum number of fixed-point iterations [default: 200]
    #[arg(long)]
    max_iter: Option<usize>,
    /// Extra quadrature exactness for error norms [default: 4]
    #[arg(long)]
    quad_boost: Option<usize>,
    /// Assembly quadrature exactness [default: 2 * degree + 4]
    #[arg(long)]
    quad_exactness: Option<usize>,
}

impl ModelArgs {
    /// Defaults, then the config file, then flags.
    fn spec(&self) -> Result<StudySpec, Error> {
        let mut s = match &self.config {
            Some(path) => harness::parse_config(path)?,
            None => StudySpec::default(),
        };
        if let Some(v) = self.case {
            s.case = v;
        }
        if let Some(v) = &self.p {
            s.p = v.clone();
        }
        if self.eta_inf.is_some() {
            s.eta_inf = self.eta_inf;
        }
        if let Some(v) = self.eta0 {
            s.eta0 = v;
        }
        if let Some(v) = self.lambda {
            s.lambda = v;
        }
        if let Some(v) = self.kappa {
            s.solver.kappa = v;
        }
        if let Some(v) = self.viscosity {
            s.viscosity = v;
        }
        if let Some(v) = &self.sigma {
            s.sigma = v.clone();
        }
        if let Some(v) = self.r_reg {
            s.solver.r_reg = v;
        }
        if let Some(v) = self.degree {
            s.degree = v;
        }
        if let Some(v) = self.tol {
            s.solver.tol = v;
        }
        if let Some(v) = self.max_iter {
            s.solver.max_iter = v;
        }
        if let Some(v) = self.quad_boost {
            s.quad_boost = v;
        }
        if self.quad_exactness.is_some() {
            s.solver.quad_exactness = self.quad_exactness;
        }
        Ok(s)
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Mesh subdivisions per side (h = sqrt(2)/n)
    #[arg(long, default_value_t = 16)]
    n: usize,
    /// Write the per-iteration log as CSV to this file
    #[arg(long, value_name = "PATH")]
    log_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct StudyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Mesh levels n, comma separated and increasing [default: 8,16,32,64]
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Output directory [default: results]
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for independent solves; 0 uses all cores [default: 1]
    #[arg(long)]
    jobs: Option<usize>,
    /// Start each (p, sigma) series from the previous one's state on the same level
    #[arg(long)]
    warm_start: bool,
    /// Skip SVG plots
    #[arg(long)]
    no_svg: bool,
}

#[derive(Args, Debug)]
struct ConstitutiveArgs {
    /// Power-law exponent(s), comma separated
    #[arg(long, value_delimiter = ',', default_value = "2,1.6,1.2")]
    p: Vec<f64>,
    /// Limiting viscosity eta_inf (Pa s)
    #[arg(long, default_value_t = 0.5)]
    eta_inf: f64,
    /// Zero-shear viscosity eta0 (Pa s)
    #[arg(long, default_value_t = 2.0)]
    eta0: f64,
    /// Carreau time constant lambda (s^2)
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Number of random tensor pairs
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Entries are drawn uniformly from [-range, range] (1/s)
    #[arg(long, default_value_t = 10.0)]
    range: f64,
    /// Random seed
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ForcingArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Random interior sample points per case
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Random seed
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Check every shipped case at p = 2, 1.6, 1.2 instead of the selected one
    #[arg(long)]
    all: bool,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Io { .. }) => EXIT_IO,
        Some(e) if e.is_solver_failure() => EXIT_SOLVER,
        Some(_) => EXIT_CONFIG,
        None if err.downcast_ref::<std::io::Error>().is_some() => EXIT_IO,
        None => EXIT_CONFIG,
    }
}

fn solve(args: &SolveArgs) -> anyhow::Result<u8> {
    let spec = args.model.spec()?;
    spec.validate()?;
    let mesh = Arc::new(Mesh::unit_square(args.n)?);
    let spaces = MixedSpaces::new(mesh.clone(), spec.degree - 1, spec.solver.quad_exactness)?;
    println!("case,p,sigma,n,h,iters,err_u_l2,err_u_w1s,err_u_grad_ls,err_pi,err_t_h1,err_t_l2");
    for (p, sigma) in spec.series() {
        let case = spec.manufactured(p)?;
        let cfg = carreau_core::SolverConfig { sigma, ..spec.solver };
        let mut problem = CoupledProblem::from_case(&spaces, &case, cfg)?;
        let (state, log) = problem.solve(None)?;
        if let Some(path) = &args.log_csv {
            std::fs::write(path, log.to_csv()).map_err(|e| Error::Io { path: path.clone(), source: e })?;
        }
        let e = error_norms(&state, &spaces, &case, spec.quad_boost)?;
        println!(
            "{},{},{},{},{:.6e},{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            spec.case,
            p,
            sigma,
            args.n,
            mesh.metrics().h_max,
            log.len(),
            e.err_u_l2,
            e.err_u_w1s,
            e.err_u_grad_ls,
            e.err_pi,
            e.err_theta_h1,
            e.err_theta_l2
        );
    }
    Ok(0)
}

fn study(args: &StudyArgs) -> anyhow::Result<u8> {
    let mut spec = args.model.spec()?;
    if let Some(v) = &args.levels {
        spec.levels = v.clone();
    }
    if let Some(v) = &args.out {
        spec.out_dir = v.clone();
    }
    if let Some(v) = args.jobs {
        spec.jobs = v;
    }
    spec.solver.warm_start |= args.warm_start;
    spec.svg &= !args.no_svg;
    let reports = harness::run_and_write(&spec)?;
    let mut failed = 0;
    for rep in &reports {
        eprintln!("p={} sigma={}:", rep.p, rep.sigma);
        for (row, diag) in rep.rows.iter().zip(&rep.diagnostics) {
            eprintln!(
                "  n={:<3} iters={:<3} err_u_l2={:.3e} err_u_w1s={:.3e} err_pi={:.3e} err_t_h1={:.3e}{}",
                row.level,
                row.iters,
                row.err_u_l2,
                row.err_u_w1s,
                row.err_pi,
                row.err_t_h1,
                diag.message.as_deref().map(|m| format!("  [{m}]")).unwrap_or_default()
            );
            failed += usize::from(!row.is_ok());
        }
        let eocs: Vec<String> = harness::ERROR_FAMILIES
            .iter()
            .enumerate()
            .map(|(f, name)| format!("{name}={:.2}", rep.finest_eoc(f)))
            .collect();
        eprintln!("  finest EOC: {}", eocs.join(" "));
    }
    eprintln!("reports written to {}", spec.out_dir.display());
    if failed > 0 {
        eprintln!("{failed} level(s) failed to converge");
        return Ok(EXIT_SOLVER);
    }
    Ok(0)
}

fn check_constitutive(args: &ConstitutiveArgs) -> anyhow::Result<u8> {
    println!("p,eta_inf,samples,min_pairing,min_pairing_over_lower_bound,min_lipschitz_ratio,max_lipschitz_ratio,growth_constant,status");
    let mut ok = true;
    for &p in &args.p {
        let params = carreau_core::CarreauParams::new(args.eta_inf, args.eta0, args.lambda, p)?;
        let s = property_sweep(&params, args.samples, args.range, args.seed);
        let mut pass = s.min_pairing > 0.0 && s.max_lipschitz_ratio.is_finite();
        if args.eta_inf > 0.0 {
            pass &= s.min_pairing_over_lower_bound >= 1.0 - 1e-12;
        }
        if p == 2.0 {
            pass &= (s.max_lipschitz_ratio - args.eta0).abs() <= 1e-12 && (s.min_lipschitz_ratio - args.eta0).abs() <= 1e-12;
        }
        ok &= pass;
        println!(
            "{p},{},{},{:.6e},{:.15},{:.15},{:.15},{:.6},{}",
            args.eta_inf,
            s.samples,
            s.min_pairing,
            s.min_pairing_over_lower_bound,
            s.min_lipschitz_ratio,
            s.max_lipschitz_ratio,
            s.growth_constant,
            if pass { "pass" } else { "FAIL" }
        );
    }
    Ok(if ok { 0 } else { EXIT_SOLVER })
}

fn validate(args: &ForcingArgs) -> anyhow::Result<u8> {
    let spec = args.model.spec()?;
    let cases: Vec<ManufacturedCase> = if args.all {
        let mut v = Vec::new();
        for kind in CaseKind::all() {
            for p in [2.0, 1.6, 1.2] {
                let (params, viscosity) = match kind {
                    CaseKind::Rigid => (carreau_core::CarreauParams::new(0.5, 2.0, 1.0, p)?, ViscosityModel::Constant(1.0)),
                    _ => (carreau_core::CarreauParams::new(kind.default_eta_inf(), spec.eta0, spec.lambda, p)?, spec.viscosity),
                };
                v.push(ManufacturedCase::new(kind, params, viscosity, spec.solver.kappa)?);
            }
        }
        v
    } else {
        spec.p.iter().map(|&p| spec.manufactured(p)).collect::<Result<_, _>>()?
    };
    println!("case,p,eta_inf,samples,max_rel_f,max_rel_g,max_abs_div,status");
    let mut ok = true;
    for case in &cases {
        let v = validate_forcing(case, args.samples, args.seed);
        let pass = v.max_rel() <= FORCING_TOL;
        ok &= pass;
        println!(
            "{},{},{},{},{:.3e},{:.3e},{:.3e},{}",
            case.kind,
            case.params.p,
            case.params.eta_inf,
            v.samples,
            v.max_rel_f,
            v.max_rel_g,
            v.max_abs_divergence,
            if pass { "pass" } else { "FAIL" }
        );
    }
    Ok(if ok { 0 } else { EXIT_SOLVER })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a).context("solve failed"),
        Command::Study(a) => study(a).context("study failed"),
        Command::CheckConstitutive(a) => check_constitutive(a).context("constitutive check failed"),
        Command::ValidateForcing(a) => validate(a).context("forcing validation failed"),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
