//! Study configuration files.
//!
//! ```text
//! # comment
//! [case]
//! case = test2
//! p = 1.2, 1.6
//!
//! [solver]
//! sigma = 0, 1e-2
//!
//! [mesh]
//! degree = 2
//! levels = 8, 16, 32
//!
//! [output]
//! dir = results
//! ```
//!
//! Absent keys keep their defaults; unknown sections or keys are errors.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

use super::StudySpec;

fn list<T: FromStr>(v: &str) -> std::result::Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|e| format!("{:?}: {e}", s.trim())))
        .collect()
}

fn one<T: FromStr>(v: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("{v:?}: {e}"))
}

fn apply(spec: &mut StudySpec, section: &str, key: &str, v: &str) -> std::result::Result<(), String> {
    match (section, key) {
        ("case", "case" | "id") => spec.case = v.parse().map_err(|e: Error| e.to_string())?,
        ("case", "p") => spec.p = list(v)?,
        ("case", "eta_inf") => spec.eta_inf = Some(one(v)?),
        ("case", "eta0") => spec.eta0 = one(v)?,
        ("case", "lambda") => spec.lambda = one(v)?,
        ("case", "kappa") => spec.solver.kappa = one(v)?,
        ("case", "viscosity") => spec.viscosity = v.parse().map_err(|e: Error| e.to_string())?,
        ("solver", "tol") => {
            let tol: f64 = one(v)?;
            if !(tol > 0.0) {
                return Err(format!("tol must be positive (got {tol})"));
            }
            spec.solver.tol = tol;
        }
        ("solver", "max_iter") => spec.solver.max_iter = one(v)?,
        ("solver", "sigma") => spec.sigma = list(v)?,
        ("solver", "r_reg") => spec.solver.r_reg = one(v)?,
        ("solver", "quad_exactness") => spec.solver.quad_exactness = Some(one(v)?),
        ("solver", "quad_boost") => spec.quad_boost = one(v)?,
        ("solver", "warm_start") => spec.solver.warm_start = one(v)?,
        ("solver", "jobs") => spec.jobs = one(v)?,
        ("mesh", "degree") => spec.degree = one(v)?,
        ("mesh", "levels") => spec.levels = list(v)?,
        ("output", "dir" | "out") => spec.out_dir = PathBuf::from(v),
        ("output", "svg") => spec.svg = one(v)?,
        _ => return Err(format!("unknown key {key:?} in section [{section}]")),
    }
    Ok(())
}

/// Parses configuration text; `origin` names the source in error messages.
pub fn parse_config_str(text: &str, origin: &str) -> Result<StudySpec> {
    let mut spec = StudySpec::default();
    let mut section: Option<String> = None;
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split(['#', ';']).next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(i + 1, format!("malformed section header {line:?}")))?
                .trim();
            if !matches!(name, "case" | "solver" | "mesh" | "output") {
                return Err(err(i + 1, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(i + 1, format!("expected key = value, found {line:?}")))?;
        let sec = section
            .as_deref()
            .ok_or_else(|| err(i + 1, "key outside of any section".into()))?;
        apply(&mut spec, sec, key.trim(), value.trim()).map_err(|m| err(i + 1, m))?;
    }
    spec.validate()?;
    Ok(spec)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<StudySpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manufactured::CaseKind;

    #[test]
    fn empty_is_default() {
        let s = parse_config_str("", "x").unwrap();
        assert_eq!(s, StudySpec::default());
        assert_eq!(s.case, CaseKind::Test1);
        assert_eq!(s.p, vec![1.6]);
        assert_eq!(s.degree, 2);
        assert_eq!(s.levels, vec![8, 16, 32, 64]);
        assert_eq!(s.solver.tol, 1e-10);
    }

    #[test]
    fn full_file() {
        let text = "# study\n[case]\ncase = test2\np = 1.2, 1.6\nkappa = 1\n\n[solver]\nsigma = 0, 1e-2 ; two\nmax_iter = 50\n[mesh]\ndegree = 3\nlevels = 4, 8\n[output]\ndir = out/x\nsvg = false\n";
        let s = parse_config_str(text, "x").unwrap();
        assert_eq!(s.case, CaseKind::Test2);
        assert_eq!(s.p, vec![1.2, 1.6]);
        assert_eq!(s.sigma, vec![0.0, 1e-2]);
        assert_eq!(s.solver.max_iter, 50);
        assert_eq!(s.degree, 3);
        assert_eq!(s.levels, vec![4, 8]);
        assert_eq!(s.out_dir, PathBuf::from("out/x"));
        assert!(!s.svg);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("[solver]\ntol = -1\n", 2),
            ("[case]\nbogus = 1\n", 2),
            ("\n\n[nope]\n", 3),
            ("p = 1.6\n", 1),
            ("[mesh]\nlevels = 8, x\n", 2),
            ("[mesh]\nlevels\n", 2),
        ];
        for (text, line) in cases {
            match parse_config_str(text, "cfg.ini") {
                Err(Error::Parse { line: l, path, .. }) => {
                    assert_eq!(l, line, "{text:?}");
                    assert_eq!(path, "cfg.ini");
                }
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn semantic_errors_after_parse() {
        assert!(matches!(
            parse_config_str("[mesh]\nlevels = 16, 8\n", "x"),
            Err(Error::InvalidParameter(_))
        ));
    }
}
