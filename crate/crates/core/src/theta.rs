//! The correspondence `Θ` between tropical superforms on `ℝ` and
//! `U(1)`-invariant forms on `ℂ*`, through `x = log|z|`.
//!
//! Only `(1,1)` forms are pushed forward. The annulus integral evaluates
//! the complex density of `Θ(f d'x∧d''x)` pointwise on a polar grid and
//! integrates it numerically, so agreement with the tropical integral
//! tests the normalisation constants.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::checks::CheckEntry;
use crate::curve::{samples, TropicalCurve};
use crate::function::EdgeFunction;
use crate::metric::{KahlerForm, MetricError, QuadratureError, QuadratureRule};
use crate::superform::{Bidegree, Superform};

pub const ANGULAR_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThetaError {
    #[error("annulus needs a <= b, got ({a}, {b})")]
    EmptyOrder { a: f64, b: f64 },
    #[error("integral diverges: {0}")]
    Divergent(#[from] QuadratureError),
    #[error("pushed-forward density is not real at z = {re} + {im}i")]
    NotReal { re: f64, im: f64 },
}

/// `{ e^a < |z| < e^b }`; `a = −inf` is the punctured disk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnulusDomain {
    pub a: f64,
    pub b: f64,
}

impl AnnulusDomain {
    pub fn new(a: f64, b: f64) -> Result<Self, ThetaError> {
        if a.is_nan() || b.is_nan() || a > b {
            return Err(ThetaError::EmptyOrder { a, b });
        }
        Ok(AnnulusDomain { a, b })
    }
}

/// `Θ(d'x) = c · dz/z`.
pub fn theta_dprime() -> Complex64 {
    Complex64::new(1.0 / (2.0 * PI.sqrt()), 0.0)
}

/// `Θ(d''x) = c · dz̄/z̄`.
pub fn theta_ddoubleprime() -> Complex64 {
    Complex64::new(0.0, 1.0 / (2.0 * PI.sqrt()))
}

/// Density of `Θ(f d'x∧d''x)` against Lebesgue measure `dA` at `z`.
pub fn pushforward_density(f: &EdgeFunction, z: Complex64) -> Complex64 {
    // Θ(d'x∧d''x) = c' c'' dz∧dz̄ / (z z̄), and dz∧dz̄ = −2i dA
    let coefficient = theta_dprime() * theta_ddoubleprime();
    let area = Complex64::new(0.0, -2.0);
    coefficient * area * f.eval(z.norm().ln()) / (z * z.conj())
}

/// `∫_U Θ(f d'x∧d''x)` by radial Gauss–Legendre panels in `s = log r`
/// (Jacobian `r²`) and a uniform angular trapezoid.
pub fn annulus_integral(f: &EdgeFunction, domain: AnnulusDomain, rule: &QuadratureRule) -> Result<f64, ThetaError> {
    if domain.a == domain.b || f.is_zero() {
        return Ok(0.0);
    }
    let dtheta = 2.0 * PI / ANGULAR_NODES as f64;
    let bad = std::cell::Cell::new(None);
    let radial = |s: f64| {
        let r = s.exp();
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..ANGULAR_NODES {
            let z = Complex64::from_polar(r, k as f64 * dtheta);
            acc += pushforward_density(f, z);
        }
        let v = acc * dtheta * r * r;
        if v.im.abs() > 1e-12 * v.re.abs().max(1e-300) && bad.get().is_none() {
            bad.set(Some((v.re, v.im)));
        }
        v.re
    };
    let value = rule.integrate(radial, domain.a, domain.b, &f.breakpoints())?;
    if let Some((re, im)) = bad.get() {
        return Err(ThetaError::NotReal { re, im });
    }
    Ok(value)
}

/// `|∫_a^b f dx − ∫_U Θ(f d'x∧d''x)|` as a report entry.
pub fn compare_tropical_complex(
    id: &str,
    f: &EdgeFunction,
    a: f64,
    b: f64,
    rule: &QuadratureRule,
    tol: f64,
) -> CheckEntry {
    const ANCHOR: &str = "tropical integral equals the integral of its image";
    let run = || -> Result<(f64, f64), ThetaError> {
        let domain = AnnulusDomain::new(a, b)?;
        let tropical = if a == b {
            0.0
        } else {
            rule.integrate(|x| f.eval(x), a, b, &f.breakpoints())?
        };
        Ok((tropical, annulus_integral(f, domain, rule)?))
    };
    match run() {
        Ok((t, c)) => CheckEntry::new(id, ANCHOR, (t - c).abs(), tol)
            .with_detail(format!("tropical {t:.12e}, annulus {c:.12e}")),
        Err(e) => CheckEntry::failed(id, ANCHOR, tol, e.to_string()),
    }
}

/// Normalised `TP¹` with the Fubini–Study `(1,1)` form on both legs.
/// The weight is even, so the chart change onto the second leg leaves the
/// coefficient unchanged.
pub fn fubini_study_form() -> (TropicalCurve, Superform) {
    let curve = samples::tp1();
    let form = Superform::uniform(&curve, Bidegree::B11, EdgeFunction::fubini_study());
    (curve, form)
}

pub fn fubini_study_kahler(rule: &QuadratureRule) -> Result<(TropicalCurve, KahlerForm), MetricError> {
    let (curve, form) = fubini_study_form();
    let weights: BTreeMap<String, EdgeFunction> = curve
        .edges()
        .iter()
        .map(|e| (e.id.clone(), form.coeff(&e.id)))
        .collect();
    let g = KahlerForm::new(&curve, weights, rule)?;
    Ok((curve, g))
}
