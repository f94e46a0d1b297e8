//! Carreau viscosity law, temperature-dependent viscosity factor and the
//! inequalities the monotone-operator theory relies on.
//!
//! The stress is `tau(eps) = eta(|eps|^2) eps` with
//! `eta(z) = eta_inf + (eta0 - eta_inf) (1 + lambda z)^((p - 2) / 2)`,
//! and `|.|` the Frobenius norm.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarreauParams {
    pub eta_inf: f64,
    pub eta0: f64,
    pub lambda: f64,
    pub p: f64,
}

impl CarreauParams {
    pub fn new(eta_inf: f64, eta0: f64, lambda: f64, p: f64) -> Result<Self> {
        let params = Self {
            eta_inf,
            eta0,
            lambda,
            p,
        };
        params.validate()?;
        Ok(params)
    }

    /// Test-1 constants with the given power index.
    pub fn test1(p: f64) -> Result<Self> {
        Self::new(0.5, 2.0, 1.0, p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.eta_inf, self.eta0, self.lambda, self.p].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("Carreau parameters must be finite"));
        }
        if !(self.eta_inf >= 0.0 && self.eta0 > self.eta_inf) {
            return Err(Error::invalid(format!(
                "Carreau law needs eta0 > eta_inf >= 0 (got eta0 = {}, eta_inf = {})",
                self.eta0, self.eta_inf
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::invalid(format!("Carreau lambda must be positive (got {})", self.lambda)));
        }
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(Error::invalid(format!("Carreau p must lie in (1, 2] (got {})", self.p)));
        }
        Ok(())
    }

    /// Velocity integrability exponent: 2 when eta_inf > 0, p otherwise.
    pub fn velocity_exponent(&self) -> f64 {
        if self.eta_inf > 0.0 {
            2.0
        } else {
            self.p
        }
    }

    /// Viscosity at squared shear rate `z`.
    pub fn eta(&self, z: f64) -> Result<f64> {
        if !(z >= 0.0) {
            return Err(Error::invalid(format!("eta needs z >= 0 (got {z})")));
        }
        Ok(self.eval_eta(z))
    }

    #[inline]
    pub(crate) fn eval_eta(&self, z: f64) -> f64 {
        if self.p == 2.0 {
            return self.eta0;
        }
        self.eta_inf + (self.eta0 - self.eta_inf) * (1.0 + self.lambda * z).powf(0.5 * (self.p - 2.0))
    }

    /// d eta / d z.
    #[inline]
    pub fn eta_prime(&self, z: f64) -> f64 {
        if self.p == 2.0 {
            return 0.0;
        }
        let e = 0.5 * (self.p - 2.0);
        (self.eta0 - self.eta_inf) * e * self.lambda * (1.0 + self.lambda * z).powf(e - 1.0)
    }

    pub fn stress(&self, eps: SymTensor2) -> SymTensor2 {
        eps * self.eval_eta(eps.norm_sq())
    }
}

/// Symmetric 2x2 tensor stored as (xx, xy, yy).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymTensor2 {
    pub const ZERO: Self = Self { xx: 0.0, xy: 0.0, yy: 0.0 };

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Self { xx, xy, yy }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    /// Symmetric part of a velocity gradient `g[i][j] = d u_i / d x_j`.
    pub fn sym_grad(g: [[f64; 2]; 2]) -> Self {
        Self::new(g[0][0], 0.5 * (g[0][1] + g[1][0]), g[1][1])
    }

    /// Full contraction K : L.
    #[inline]
    pub fn ddot(&self, other: &Self) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

impl Add for SymTensor2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.xx + o.xx, self.xy + o.xy, self.yy + o.yy)
    }
}

impl Sub for SymTensor2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.xx - o.xx, self.xy - o.xy, self.yy - o.yy)
    }
}

impl Mul<f64> for SymTensor2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.xx * s, self.xy * s, self.yy * s)
    }
}

/// Temperature dependence of the viscosity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViscosityModel {
    /// nu(t) = exp(-t)
    ExpDecay,
    Constant(f64),
    /// nu(t) = clamp(a + b t, lo, hi)
    AffineClamped { a: f64, b: f64, lo: f64, hi: f64 },
}

/// Bounds 0 < nu1 <= nu <= nu2 and |nu'| <= nu3 on a temperature interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityBounds {
    pub interval: (f64, f64),
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
}

impl ViscosityModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ViscosityModel::ExpDecay => Ok(()),
            ViscosityModel::Constant(c) if c > 0.0 && c.is_finite() => Ok(()),
            ViscosityModel::Constant(c) => Err(Error::invalid(format!("constant viscosity must be positive (got {c})"))),
            ViscosityModel::AffineClamped { a, b, lo, hi } => {
                if [a, b, lo, hi].iter().all(|v| v.is_finite()) && lo > 0.0 && hi >= lo {
                    Ok(())
                } else {
                    Err(Error::invalid("affine viscosity needs finite coefficients and 0 < lo <= hi"))
                }
            }
        }
    }

    #[inline]
    pub fn nu(&self, theta: f64) -> f64 {
        match *self {
            ViscosityModel::ExpDecay => (-theta).exp(),
            ViscosityModel::Constant(c) => c,
            ViscosityModel::AffineClamped { a, b, lo, hi } => (a + b * theta).clamp(lo, hi),
        }
    }

    #[inline]
    pub fn nu_prime(&self, theta: f64) -> f64 {
        match *self {
            ViscosityModel::ExpDecay => -(-theta).exp(),
            ViscosityModel::Constant(_) => 0.0,
            ViscosityModel::AffineClamped { a, b, lo, hi } => {
                let v = a + b * theta;
                if v > lo && v < hi {
                    b
                } else {
                    0.0
                }
            }
        }
    }

    /// Bounds of nu and |nu'| over `[lo, hi]`.
    pub fn bounds(&self, lo: f64, hi: f64) -> ViscosityBounds {
        let (nu1, nu2, nu3) = match *self {
            ViscosityModel::ExpDecay => ((-hi).exp(), (-lo).exp(), (-lo).exp()),
            ViscosityModel::Constant(c) => (c, c, 0.0),
            ViscosityModel::AffineClamped { b, .. } => {
                let (x, y) = (self.nu(lo), self.nu(hi));
                (x.min(y), x.max(y), b.abs())
            }
        };
        ViscosityBounds {
            interval: (lo, hi),
            nu1,
            nu2,
            nu3,
        }
    }
}

impl FromStr for ViscosityModel {
    type Err = Error;

    /// Accepts `exp_decay`, `constant(c)` and `affine_clamped(a,b,lo,hi)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let args = |name: &str| -> Option<Result<Vec<f64>>> {
            let inner = s.strip_prefix(name)?.trim().strip_prefix('(')?.strip_suffix(')')?;
            Some(
                inner
                    .split(',')
                    .map(|t| t.trim().parse::<f64>().map_err(|_| Error::invalid(format!("bad number in {s:?}"))))
                    .collect(),
            )
        };
        let model = if s == "exp_decay" {
            ViscosityModel::ExpDecay
        } else if let Some(a) = args("constant") {
            match a?.as_slice() {
                &[c] => ViscosityModel::Constant(c),
                _ => return Err(Error::invalid("constant(c) takes one argument")),
            }
        } else if let Some(a) = args("affine_clamped") {
            match a?.as_slice() {
                &[a, b, lo, hi] => ViscosityModel::AffineClamped { a, b, lo, hi },
                _ => return Err(Error::invalid("affine_clamped(a,b,lo,hi) takes four arguments")),
            }
        } else {
            return Err(Error::invalid(format!("unknown viscosity model {s:?}")));
        };
        model.validate()?;
        Ok(model)
    }
}

impl fmt::Display for ViscosityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViscosityModel::ExpDecay => write!(f, "exp_decay"),
            ViscosityModel::Constant(c) => write!(f, "constant({c})"),
            ViscosityModel::AffineClamped { a, b, lo, hi } => write!(f, "affine_clamped({a},{b},{lo},{hi})"),
        }
    }
}

/// sum_ij (eta(|K|^2) K_ij - eta(|L|^2) L_ij)(K_ij - L_ij).
pub fn monotonicity_pairing(k: SymTensor2, l: SymTensor2, params: &CarreauParams) -> f64 {
    (params.stress(k) - params.stress(l)).ddot(&(k - l))
}

/// |tau(K) - tau(L)| / |K - L|, or / |K - L|^(p-1) when eta_inf = 0.
pub fn lipschitz_ratio(k: SymTensor2, l: SymTensor2, params: &CarreauParams) -> Result<f64> {
    let diff = (k - l).norm();
    if diff == 0.0 {
        return Err(Error::invalid("lipschitz ratio undefined for K = L"));
    }
    let num = (params.stress(k) - params.stress(l)).norm();
    let denom = if params.eta_inf != 0.0 { diff } else { diff.powf(params.p - 1.0) };
    Ok(num / denom)
}

/// Outcome of a randomized sweep over the constitutive inequalities.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertySweep {
    pub samples: usize,
    pub min_pairing: f64,
    /// min over samples of pairing / (eta_inf |K - L|^2); infinite when eta_inf = 0
    pub min_pairing_over_lower_bound: f64,
    pub min_lipschitz_ratio: f64,
    pub max_lipschitz_ratio: f64,
    /// sup |tau(eps)| / (1 + |eps|)^(p-1)
    pub growth_constant: f64,
}

pub fn random_sym(rng: &mut impl Rng, range: f64) -> SymTensor2 {
    SymTensor2::new(
        rng.gen_range(-range..=range),
        rng.gen_range(-range..=range),
        rng.gen_range(-range..=range),
    )
}

/// Samples `samples` seeded random pairs with entries in `[-range, range]`.
pub fn property_sweep(params: &CarreauParams, samples: usize, range: f64, seed: u64) -> PropertySweep {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PropertySweep {
        samples: 0,
        min_pairing: f64::INFINITY,
        min_pairing_over_lower_bound: f64::INFINITY,
        min_lipschitz_ratio: f64::INFINITY,
        max_lipschitz_ratio: 0.0,
        growth_constant: 0.0,
    };
    while out.samples < samples {
        let k = random_sym(&mut rng, range);
        let l = random_sym(&mut rng, range);
        if k == l {
            continue;
        }
        out.samples += 1;
        let pairing = monotonicity_pairing(k, l, params);
        out.min_pairing = out.min_pairing.min(pairing);
        if params.eta_inf > 0.0 {
            let bound = params.eta_inf * (k - l).norm_sq();
            out.min_pairing_over_lower_bound = out.min_pairing_over_lower_bound.min(pairing / bound);
        }
        if let Ok(r) = lipschitz_ratio(k, l, params) {
            out.min_lipschitz_ratio = out.min_lipschitz_ratio.min(r);
            out.max_lipschitz_ratio = out.max_lipschitz_ratio.max(r);
        }
        let growth = params.stress(k).norm() / (1.0 + k.norm()).powf(params.p - 1.0);
        out.growth_constant = out.growth_constant.max(growth);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn test1(p: f64) -> CarreauParams {
        CarreauParams::test1(p).unwrap()
    }

    #[test]
    fn eta_values() {
        assert_eq!(test1(1.6).eta(0.0).unwrap(), 2.0);
        let newtonian = test1(2.0);
        for z in [0.0, 0.5, 10.0, 1e6] {
            assert_eq!(newtonian.eta(z).unwrap(), 2.0);
        }
        // 0.5 + 1.5 * 4^(-0.2)
        assert!((test1(1.6).eta(3.0).unwrap() - 1.636_787_424_882_798_6).abs() < 1e-13);
    }

    #[test]
    fn eta_rejects_bad_input() {
        assert!(test1(1.6).eta(-1e-3).is_err());
        assert!(CarreauParams::new(2.0, 1.0, 1.0, 1.5).is_err());
        assert!(CarreauParams::new(-0.1, 1.0, 1.0, 1.5).is_err());
        assert!(CarreauParams::new(0.0, 1.0, 0.0, 1.5).is_err());
        assert!(CarreauParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(CarreauParams::new(0.0, 1.0, 1.0, 2.5).is_err());
    }

    #[test]
    fn eta_monotone_and_bounded_on_grid() {
        for p in [1.1, 1.2, 1.6, 1.9] {
            for eta_inf in [0.0, 0.5] {
                let params = CarreauParams::new(eta_inf, 2.0, 1.0, p).unwrap();
                let mut prev = f64::INFINITY;
                for i in 0..2000 {
                    let z = (i as f64 * 0.01).powi(3);
                    let e = params.eta(z).unwrap();
                    assert!(e >= eta_inf && e <= 2.0);
                    assert!(e <= prev);
                    prev = e;
                }
            }
        }
    }

    #[test]
    fn eta_prime_matches_difference_quotient() {
        let params = CarreauParams::new(0.3, 2.0, 1.7, 1.4).unwrap();
        for z in [0.0, 0.3, 2.0, 50.0] {
            let h = 1e-6 * (1.0 + z);
            let fd = (params.eval_eta(z + h) - params.eval_eta((z - h).max(0.0))) / (z + h - (z - h).max(0.0));
            assert!((params.eta_prime(z) - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn stress_values() {
        let params = test1(1.6);
        assert_eq!(params.stress(SymTensor2::ZERO), SymTensor2::ZERO);
        let eps = SymTensor2::new(0.3, -0.2, 1.1);
        assert_eq!(test1(2.0).stress(eps), eps * 2.0);
        // unit Frobenius norm: eta(1) = 0.5 + 1.5 * 2^(-0.2)
        let unit = SymTensor2::identity() * std::f64::consts::FRAC_1_SQRT_2;
        let s = params.stress(unit);
        let eta1 = 1.805_825_844_944_186_2;
        assert!((s.xx - eta1 * unit.xx).abs() < 1e-13);
        assert_eq!(s.xy, 0.0);
    }

    #[test]
    fn viscosity_models() {
        let m = ViscosityModel::ExpDecay;
        assert_eq!((m.nu(0.0), m.nu_prime(0.0)), (1.0, -1.0));
        assert!((m.nu(1.0) - 0.367_879_441_171_442_3).abs() < 1e-15);
        let c = ViscosityModel::Constant(3.0);
        assert_eq!((c.nu(-4.0), c.nu_prime(7.0)), (3.0, 0.0));
        let a = ViscosityModel::AffineClamped { a: 1.0, b: -0.5, lo: 0.2, hi: 2.0 };
        assert_eq!(a.nu(0.0), 1.0);
        assert_eq!(a.nu(10.0), 0.2);
        assert_eq!(a.nu_prime(0.0), -0.5);
        assert_eq!(a.nu_prime(10.0), 0.0);
        let b = m.bounds(0.5, 1.0);
        assert!(b.nu1 <= m.nu(0.75) && m.nu(0.75) <= b.nu2 && m.nu_prime(0.75).abs() <= b.nu3);
    }

    #[test]
    fn viscosity_parse() {
        assert_eq!("exp_decay".parse::<ViscosityModel>().unwrap(), ViscosityModel::ExpDecay);
        assert_eq!("constant(3)".parse::<ViscosityModel>().unwrap(), ViscosityModel::Constant(3.0));
        let a: ViscosityModel = "affine_clamped(1, -0.5, 0.2, 2)".parse().unwrap();
        assert_eq!(a.to_string().parse::<ViscosityModel>().unwrap(), a);
        assert!("power(2)".parse::<ViscosityModel>().is_err());
        assert!("constant(-1)".parse::<ViscosityModel>().is_err());
    }

    #[test]
    fn pairing_examples() {
        let params = test1(1.6);
        let k = SymTensor2::new(0.4, -1.2, 2.0);
        assert_eq!(monotonicity_pairing(k, k, &params), 0.0);
        // K = -L = I/sqrt(2): (eta(1)K + eta(1)K) : 2K = 4 eta(1) |K|^2 = 4 eta(1)
        let unit = SymTensor2::identity() * std::f64::consts::FRAC_1_SQRT_2;
        let v = monotonicity_pairing(unit, unit * -1.0, &params);
        assert!((v - 4.0 * 1.805_825_844_944_186_2).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_examples() {
        let newtonian = test1(2.0);
        let (k, l) = (SymTensor2::new(1.0, 2.0, 3.0), SymTensor2::new(-0.5, 0.1, 9.0));
        assert!((lipschitz_ratio(k, l, &newtonian).unwrap() - 2.0).abs() < 1e-14);
        assert!(lipschitz_ratio(k, k, &newtonian).is_err());
    }

    #[test]
    fn sweep_is_deterministic_and_bounded() {
        let params = test1(1.6);
        let a = property_sweep(&params, 1000, 10.0, 3);
        let b = property_sweep(&params, 1000, 10.0, 3);
        assert_eq!(a, b);
        assert!(a.min_pairing > 0.0);
        assert!(a.min_pairing_over_lower_bound >= 1.0 - 1e-12);
        assert!(a.max_lipschitz_ratio.is_finite() && a.max_lipschitz_ratio <= params.eta0 * 3.0);
        assert!(a.growth_constant.is_finite());
        let degenerate = CarreauParams::new(0.0, 2.0, 1.0, 1.6).unwrap();
        let c = property_sweep(&degenerate, 1000, 10.0, 3);
        assert!(c.min_pairing > 0.0 && c.max_lipschitz_ratio.is_finite());
    }

    fn sym() -> impl Strategy<Value = SymTensor2> {
        (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b, c)| SymTensor2::new(a, b, c))
    }

    proptest! {
        #[test]
        fn strict_monotonicity(k in sym(), l in sym(), p in 1.05f64..2.0, eta_inf in 0.0f64..1.0) {
            prop_assume!(k != l);
            let params = CarreauParams::new(eta_inf, 2.0, 1.0, p).unwrap();
            let v = monotonicity_pairing(k, l, &params);
            prop_assert!(v > 0.0);
            prop_assert!(v >= eta_inf * (k - l).norm_sq() * (1.0 - 1e-12));
        }

        #[test]
        fn growth_bound(k in sym(), p in 1.05f64..2.0) {
            let params = CarreauParams::new(0.5, 2.0, 1.0, p).unwrap();
            // |eta(|K|^2) K| <= eta0 |K| <= eta0 (1 + |K|) for p <= 2; shear-thinning keeps it below
            // eta0 (1+|K|) and with eta_inf > 0 the linear part dominates the (p-1) growth
            prop_assert!(params.stress(k).norm() <= params.eta0 * k.norm() + 1e-12);
        }
    }
}
