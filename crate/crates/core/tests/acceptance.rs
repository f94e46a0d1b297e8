//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line regardless of capture
//! settings; the process exits nonzero if any criterion fails.

use std::sync::Arc;
use std::time::Instant;

use carreau_core::assembly::assemble_ch;
use carreau_core::constitutive::property_sweep;
use carreau_core::harness::{csv_string, run_study, ConvergenceReport, StudySpec};
use carreau_core::manufactured::{eoc, error_norms, validate_forcing};
use carreau_core::solver::CoupledProblem;
use carreau_core::{CarreauParams, CaseKind, ManufacturedCase, Mesh, MixedSpaces, SolverConfig, ViscosityModel};

const LEVELS: [usize; 4] = [8, 16, 32, 64];

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, name: &str, start: Instant, o: &Outcome) {
    println!(
        "criterion {id} [{}] {name}: {} ({:.1} s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        start.elapsed().as_secs_f64()
    );
}

fn in_range(v: f64, lo: f64, hi: f64) -> bool {
    v >= lo && v <= hi
}

/// Finest-pair EOC of a per-level quantity.
fn finest(values: &[f64], rep: &ConvergenceReport) -> f64 {
    let n = values.len();
    let hs: Vec<f64> = rep.rows.iter().map(|r| r.h).collect();
    eoc(&values[n - 2..], &hs[n - 2..]).map_or(f64::NAN, |v| v[0])
}

fn all_ok(rep: &ConvergenceReport) -> bool {
    rep.rows.iter().all(|r| r.is_ok())
}

/// Test 1 rate check for one velocity degree.
fn test1_rates(degree: usize, h1: (f64, f64), l2: (f64, f64), pressure_min: f64) -> (Outcome, Vec<ConvergenceReport>) {
    let spec = StudySpec {
        case: CaseKind::Test1,
        p: vec![2.0, 1.6, 1.2],
        degree,
        levels: LEVELS.to_vec(),
        ..Default::default()
    };
    let reps = match run_study(&spec) {
        Ok(r) => r,
        Err(e) => {
            return (
                Outcome {
                    pass: false,
                    detail: format!("study failed: {e}"),
                },
                Vec::new(),
            )
        }
    };
    let mut pass = true;
    let mut detail = Vec::new();
    for rep in &reps {
        let grad: Vec<f64> = rep.diagnostics.iter().map(|d| d.err_u_grad_ls).collect();
        let (e_h1, e_eps, e_l2, e_pi, e_t) = (finest(&grad, rep), rep.finest_eoc(1), rep.finest_eoc(0), rep.finest_eoc(2), rep.finest_eoc(3));
        let ok = all_ok(rep)
            && in_range(e_h1, h1.0, h1.1)
            && in_range(e_eps, h1.0, h1.1)
            && in_range(e_l2, l2.0, l2.1)
            && in_range(e_t, h1.0, h1.1)
            && e_pi >= pressure_min;
        pass &= ok;
        detail.push(format!(
            "p={}: H1u={e_h1:.3} eps(u)={e_eps:.3} L2u={e_l2:.3} L2pi={e_pi:.3} H1t={e_t:.3} iters={:?}",
            rep.p,
            rep.rows.iter().map(|r| r.iters).collect::<Vec<_>>()
        ));
    }
    (
        Outcome {
            pass,
            detail: detail.join("; "),
        },
        reps,
    )
}

fn criterion3(reps: &[ConvergenceReport]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [1.6, 1.2] {
        let Some(rep) = reps.iter().find(|r| r.p == p && r.sigma == 0.0) else {
            return Outcome {
                pass: false,
                detail: format!("missing p={p} sigma=0 series"),
            };
        };
        let monotone = |f: usize| rep.rows.windows(2).all(|w| w[1].errors()[f] < w[0].errors()[f]);
        let (eu, et, ep) = (rep.finest_eoc(1), rep.finest_eoc(3), rep.finest_eoc(2));
        let (target, target_p) = (2.0 * (p - 1.0) - 0.3, 2.0 * (p - 1.0) * (p - 1.0) - 0.3);
        let ok = all_ok(rep) && monotone(1) && monotone(3) && eu >= target && et >= target && ep >= target_p;
        pass &= ok;
        detail.push(format!(
            "p={p}: W1p u={eu:.3} H1t={et:.3} (>= {target:.2}) Lp' pi={ep:.3} (>= {target_p:.3})"
        ));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn criterion4(reps: &[ConvergenceReport]) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for p in [1.6, 1.2] {
        let series: Vec<&ConvergenceReport> = [0.0, 1e-4, 1e-3, 1e-2]
            .iter()
            .filter_map(|&s| reps.iter().find(|r| r.p == p && r.sigma == s))
            .collect();
        if series.len() != 4 || !series.iter().all(|r| all_ok(r)) {
            pass = false;
            detail.push(format!("p={p}: missing or failed series"));
            continue;
        }
        let finest: Vec<f64> = series.iter().map(|r| r.rows.last().unwrap().err_u_w1s).collect();
        let ratio = |r: &ConvergenceReport| {
            let n = r.rows.len();
            r.rows[n - 1].err_u_w1s / r.rows[n - 2].err_u_w1s
        };
        let increasing = finest.windows(2).all(|w| w[1] > w[0]);
        let (flat, conv) = (ratio(series[3]), ratio(series[0]));
        let ok = increasing && flat > 0.7 && conv < 0.6;
        pass &= ok;
        detail.push(format!(
            "p={p}: finest errors {:?}, ratio(sigma=1e-2)={flat:.3}, ratio(sigma=0)={conv:.3}",
            finest.iter().map(|e| format!("{e:.4e}")).collect::<Vec<_>>()
        ));
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn criterion5() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for eta_inf in [0.5, 0.0] {
        for p in [2.0, 1.6, 1.2] {
            let params = CarreauParams::new(eta_inf, 2.0, 1.0, p).unwrap();
            let s = property_sweep(&params, 100_000, 10.0, 20_240_601);
            let mut ok = s.min_pairing > 0.0 && s.max_lipschitz_ratio.is_finite() && s.samples == 100_000;
            if eta_inf > 0.0 {
                ok &= s.min_pairing_over_lower_bound >= 1.0 - 1e-12;
            }
            if p == 2.0 {
                ok &= (s.max_lipschitz_ratio - 2.0).abs() <= 1e-12 && (s.min_lipschitz_ratio - 2.0).abs() <= 1e-12;
            }
            pass &= ok;
            detail.push(format!(
                "eta_inf={eta_inf} p={p}: min pairing {:.3e}, min pairing/bound {:.6}, sup lipschitz {:.6}",
                s.min_pairing, s.min_pairing_over_lower_bound, s.max_lipschitz_ratio
            ));
        }
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

/// Structure invariants on every Picard iterate of direct solves, on every
/// accepted state of the studies, and CSV determinism.
fn criterion6(studies: &[&[ConvergenceReport]]) -> Outcome {
    let mut max_bu = 0.0f64;
    let mut max_skew = 0.0f64;
    let mut max_mean = 0.0f64;
    let mut checked = 0usize;
    let cases = [
        (ManufacturedCase::test1(1.6, 0.5, 2.0, 1.0, 1.0).unwrap(), 2, 0.0),
        (ManufacturedCase::test1(1.2, 0.5, 2.0, 1.0, 1.0).unwrap(), 3, 0.0),
        (ManufacturedCase::test1(1.6, 0.0, 2.0, 1.0, 1.0).unwrap(), 2, 1e-3),
    ];
    for (case, degree, sigma) in cases {
        let spaces = MixedSpaces::new(Arc::new(Mesh::unit_square(16).unwrap()), degree - 1, None).unwrap();
        let cfg = SolverConfig { sigma, ..Default::default() };
        let mut problem = CoupledProblem::from_case(&spaces, &case, cfg).unwrap();
        let mut state = problem.initial_state();
        let area: f64 = carreau_core::assembly::zero_mean_constraint(&spaces.pressure, &spaces.rule).unwrap().iter().sum();
        for _ in 0..cfg.max_iter {
            let (u, pi) = problem.stokes_step(&state.u, &state.theta).unwrap();
            let theta = problem.temperature_step(&u).unwrap();
            let bu = problem.divergence_matrix().matvec(&u);
            max_bu = max_bu.max(bu.iter().fold(0.0, |m, v| m.max(v.abs())));
            let c = assemble_ch(&u, &spaces.velocity, &spaces.temperature, &spaces.rule).unwrap();
            max_skew = max_skew.max(c.skew_defect() / c.max_abs());
            let m = carreau_core::assembly::zero_mean_constraint(&spaces.pressure, &spaces.rule).unwrap();
            let mean = m.iter().zip(&pi).map(|(a, b)| a * b).sum::<f64>() / area;
            max_mean = max_mean.max(mean.abs());
            checked += 1;
            let next = carreau_core::CoupledState { u, pi, theta };
            let (du, dp, dt) = problem.increments(&state, &next);
            state = next;
            if du + dp + dt < cfg.tol {
                break;
            }
        }
    }
    for reps in studies {
        for rep in reps.iter() {
            for (row, d) in rep.rows.iter().zip(&rep.diagnostics) {
                if row.is_ok() {
                    max_bu = max_bu.max(d.max_div_residual);
                    max_mean = max_mean.max(d.max_pressure_mean);
                    checked += row.iters;
                }
            }
        }
    }
    let spec = StudySpec {
        p: vec![1.6],
        levels: vec![8, 16],
        ..Default::default()
    };
    let a: Vec<String> = run_study(&spec).unwrap().iter().map(csv_string).collect();
    let b: Vec<String> = run_study(&StudySpec { jobs: 2, ..spec }).unwrap().iter().map(csv_string).collect();
    let deterministic = a == b;
    Outcome {
        pass: max_bu <= 1e-9 && max_skew <= 1e-13 && max_mean <= 1e-10 && deterministic,
        detail: format!(
            "{checked} iterates: max ||Bu||_inf={max_bu:.2e}, max ||C+C^T||/||C||={max_skew:.2e}, max |mean pi|={max_mean:.2e}, byte-identical CSV={deterministic}"
        ),
    }
}

fn criterion7() -> Outcome {
    let case = ManufacturedCase::new(
        CaseKind::Rigid,
        CarreauParams::new(0.5, 2.0, 1.0, 2.0).unwrap(),
        ViscosityModel::Constant(1.0),
        1.0,
    )
    .unwrap();
    let mut pass = true;
    let mut detail = Vec::new();
    for degree in [2, 3] {
        let spaces = MixedSpaces::new(Arc::new(Mesh::unit_square(8).unwrap()), degree - 1, None).unwrap();
        match carreau_core::solver::picard_solve(&spaces, &case, &SolverConfig::default()) {
            Ok((state, log)) => {
                let e = error_norms(&state, &spaces, &case, 4).unwrap();
                let worst = [e.err_u_l2, e.err_u_w1s, e.err_u_grad_ls, e.err_pi, e.err_theta_h1, e.err_theta_l2]
                    .into_iter()
                    .fold(0.0, f64::max);
                pass &= worst <= 1e-10 && log.len() <= 2;
                detail.push(format!("P{degree}: max error {worst:.2e} in {} iterations", log.len()));
            }
            Err(e) => {
                pass = false;
                detail.push(format!("P{degree}: {e}"));
            }
        }
    }
    Outcome {
        pass,
        detail: detail.join("; "),
    }
}

fn criterion8() -> Outcome {
    let mut worst = 0.0f64;
    let mut n = 0;
    for kind in CaseKind::all() {
        for p in [2.0, 1.6, 1.2] {
            let (params, visc) = match kind {
                CaseKind::Rigid => (CarreauParams::new(0.5, 2.0, 1.0, p).unwrap(), ViscosityModel::Constant(1.0)),
                _ => (CarreauParams::new(kind.default_eta_inf(), 2.0, 1.0, p).unwrap(), ViscosityModel::ExpDecay),
            };
            let case = ManufacturedCase::new(kind, params, visc, 1.0).unwrap();
            worst = worst.max(validate_forcing(&case, 1000, 8).max_rel());
            n += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-5,
        detail: format!("{n} case/p combinations x 1000 points, max relative deviation {worst:.2e}"),
    }
}

fn main() {
    // libtest-style flags (e.g. --list, filters) are ignored; listing prints nothing
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut failed = 0;
    let mut run = |id: usize, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        report(id, name, t, &o);
        failed += usize::from(!o.pass);
        o.pass
    };

    let gate = run(8, "forcing validation gate", &mut criterion8);
    run(5, "constitutive property suite", &mut criterion5);
    run(7, "exact-representation oracle", &mut criterion7);

    let mut studies: Vec<Vec<ConvergenceReport>> = Vec::new();
    if gate {
        let mut r1 = Vec::new();
        run(1, "Test-1 rates P2/P1/P2", &mut || {
            let (o, reps) = test1_rates(2, (1.7, 2.4), (2.7, 3.4), 1.7);
            r1 = reps;
            o
        });
        let mut r2 = Vec::new();
        run(2, "Test-1 rates P3/P2/P3", &mut || {
            let (o, reps) = test1_rates(3, (2.7, 3.4), (3.6, 4.4), 2.7);
            r2 = reps;
            o
        });
        let t = Instant::now();
        let spec = StudySpec {
            case: CaseKind::Test2,
            p: vec![1.6, 1.2],
            sigma: vec![0.0, 1e-4, 1e-3, 1e-2],
            levels: LEVELS.to_vec(),
            ..Default::default()
        };
        let r3 = run_study(&spec).unwrap_or_default();
        println!("(test-2 sigma study: {:.1} s)", t.elapsed().as_secs_f64());
        run(3, "Test-2 degraded rates", &mut || criterion3(&r3));
        run(4, "Test-2 plateau ordering", &mut || criterion4(&r3));
        studies = vec![r1, r2, r3];
    } else {
        for (id, name) in [(1, "Test-1 rates P2/P1/P2"), (2, "Test-1 rates P3/P2/P3"), (3, "Test-2 degraded rates"), (4, "Test-2 plateau ordering")] {
            run(id, name, &mut || Outcome {
                pass: false,
                detail: "not attempted, forcing gate failed".into(),
            });
        }
    }
    let refs: Vec<&[ConvergenceReport]> = studies.iter().map(Vec::as_slice).collect();
    run(6, "discrete structure invariants", &mut || criterion6(&refs));

    drop(run);
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
