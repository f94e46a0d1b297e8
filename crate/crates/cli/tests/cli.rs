use std::path::Path;
use std::process::{Command, Output};

fn carreau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carreau")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_lists_every_flag_with_defaults() {
    let mut all = String::new();
    for sub in ["solve", "study", "check-constitutive", "validate-forcing"] {
        let o = carreau(&[sub, "--help"]);
        assert!(o.status.success());
        all.push_str(&stdout(&o));
    }
    for flag in [
        "--case", "--p", "--eta-inf", "--eta0", "--lambda", "--kappa", "--sigma", "--r-reg", "--degree", "--levels", "--n",
        "--tol", "--max-iter", "--quad-boost", "--out", "--config", "--jobs", "--seed",
    ] {
        assert!(all.contains(&format!("{flag} ")) || all.contains(&format!("{flag}\n")), "missing {flag}");
    }
    let study = stdout(&carreau(&["study", "--help"]));
    assert!(study.contains("default: 1e-10"));
    assert!(study.contains("Pa s"));
    assert!(stdout(&carreau(&["--help"])).contains("Exit codes"));
}

#[test]
fn solve_prints_a_row() {
    let o = carreau(&["solve", "--case", "test1", "--p", "2", "--n", "4", "--tol", "1e-10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("case,p,sigma,n,h,iters,err_u_l2"));
    assert!(lines[1].starts_with("test1,2,0,4,"));
}

#[test]
fn study_writes_csv_and_svg_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &Path| {
        let o = carreau(&[
            "study", "--case", "test1", "--p", "1.6", "--degree", "2", "--levels", "2,4", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read(out.join("test1_r1_p1.6_sigma0.csv")).unwrap()
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = run(&a);
    assert_eq!(first, run(&b));
    assert!(a.join("test1_r1_p1.6_sigma0.svg").exists());
    assert!(a.join("test1_r1_p1.6_sigma0.meta.txt").exists());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("level,h,ndof_u,ndof_p,ndof_t,iters,err_u_l2,err_u_w1s,err_pi,err_t_h1"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn validate_forcing_gate() {
    let o = carreau(&["validate-forcing", "--case", "test1", "--p", "1.6", "--samples", "1000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains(",pass"));
}

#[test]
fn check_constitutive_passes() {
    let o = carreau(&["check-constitutive", "--samples", "2000", "--seed", "3"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.ini");
    std::fs::write(&cfg, "[solver]\ntol = -1\n").unwrap();
    let o = carreau(&["study", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(":2:"), "{}", stderr(&o));
    let o = carreau(&["solve", "--p", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_exits_3() {
    let o = carreau(&["study", "--config", "/nonexistent/study.ini"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn nonconvergence_exits_1() {
    let o = carreau(&["solve", "--p", "1.6", "--n", "4", "--max-iter", "1"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.ini");
    std::fs::write(&cfg, "[case]\np = 1.2\n[mesh]\nlevels = 2, 4\n").unwrap();
    let o = carreau(&["solve", "--config", cfg.to_str().unwrap(), "--p", "2", "--n", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("test1,2,0,3,"));
    let o = carreau(&["solve", "--config", cfg.to_str().unwrap(), "--n", "3"]);
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("test1,1.2,0,3,"));
}
