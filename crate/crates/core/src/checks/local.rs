//! The local right inverse `T_U` of `d''`: estimates, weak identity and
//! uniqueness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::{Side, TropicalCurve};
use crate::discrete::{leg_estimates, solve_dbar_local, DiscreteError, LocalDomain};
use crate::function::EdgeFunction;
use crate::metric::{integrate, KahlerForm, QuadratureRule};
use crate::superform::{d_second, wedge, Bidegree, Superform};

use super::forms::{bump, random_cubic};
use super::CheckEntry;

const ESTIMATE: &str = "pointwise estimates for the local inverse";
const OPERATOR: &str = "operator bound for the local inverse";
const WEAK: &str = "weak identity d''(T_U w) = w";
const UNIQUE: &str = "uniqueness of local solutions";
pub const RATIO_TOL: f64 = 1.0 + 1e-8;
pub const WEAK_TOL: f64 = 1e-8;
const DEPTH: f64 = 12.0;
const ANCHORS: [f64; 2] = [0.0, -0.5];

fn input_bidegree(p: u8) -> Bidegree {
    if p == 0 {
        Bidegree::B01
    } else {
        Bidegree::B11
    }
}

/// A random input on one leg: cubic times `2·FS` for `p = 0`, cubic times
/// `g` for `p = 1`, so both norms are finite.
fn leg_input(edge: &str, p: u8, g: &KahlerForm, rng: &mut ChaCha8Rng) -> Superform {
    let decay = if p == 0 { EdgeFunction::fubini_study().scale(2.0) } else { g.weight(edge) };
    Superform::zero(input_bidegree(p)).with(edge, random_cubic(rng) * decay)
}

/// `∫ ω∧φ − (−1)^{p+1} ∫ ψ∧d''φ`.
fn weak_defect(curve: &TropicalCurve, omega: &Superform, psi: &Superform, phi: &Superform, p: u8, rule: &QuadratureRule) -> Result<f64, DiscreteError> {
    let sign = if p == 1 { 1.0 } else { -1.0 };
    let err = |e: crate::metric::MetricError| DiscreteError::Domain(e.to_string());
    let wrap = |e: crate::superform::SuperformError| DiscreteError::Domain(e.to_string());
    let lhs = integrate(curve, &wedge(omega, phi).map_err(wrap)?, rule).map_err(err)?;
    let rhs = integrate(curve, &wedge(psi, &d_second(phi).form).map_err(wrap)?, rule).map_err(err)?;
    Ok(lhs - sign * rhs)
}

/// Test form of bidegree `(1−p, 0)` supported in `(a − 4, a)` on one leg.
fn leg_test_form(edge: &str, a: f64, p: u8, rng: &mut ChaCha8Rng) -> Superform {
    let lo = a - rng.random_range(1.0..4.0);
    let hi = a - rng.random_range(0.0..(a - lo) / 2.0);
    let b = if p == 0 { Bidegree::B10 } else { Bidegree::B00 };
    Superform::zero(b).with(edge, random_cubic(rng) * bump(lo, hi))
}

/// Test form of bidegree `(1−p, 0)` supported within `r` of `v`, satisfying
/// continuity or Kirchhoff's law at `v`.
fn star_test_form(curve: &TropicalCurve, v: &str, r: f64, p: u8, rng: &mut ChaCha8Rng) -> Superform {
    let ends = curve.ends_at(v);
    let mut c: Vec<f64> = ends.iter().map(|_| rng.random_range(-1.0..=1.0)).collect();
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    for x in c.iter_mut() {
        *x = if p == 0 { *x - mean } else { mean };
    }
    let b = if p == 0 { Bidegree::B10 } else { Bidegree::B00 };
    let mut form = Superform::zero(b);
    for (end, ci) in ends.iter().zip(c) {
        let e = &curve.edges()[end.edge];
        let x0 = match end.side {
            Side::Head => 0.0,
            Side::Tail => -e.length.as_f64(),
        };
        // vertex-chart value ci: the tail value of a (1,0) coefficient flips sign
        let value = if p == 0 && end.side == Side::Tail { -ci } else { ci };
        let slope = rng.random_range(-1.0..=1.0);
        let shape = bump(x0 - r, x0 + r).scale(value / r.powi(4)) * EdgeFunction::polynomial(&[1.0 - slope * x0, slope]);
        let f = form.coeff(&e.id) + shape;
        form = form.with(&e.id, f);
    }
    form
}

fn star_radius(curve: &TropicalCurve, v: &str) -> f64 {
    curve
        .ends_at(v)
        .iter()
        .filter_map(|end| curve.edges()[end.edge].length.finite())
        .fold(2.5, f64::min)
        * 0.4
}

struct Worst {
    value: f64,
    error: Option<String>,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, error: None }
    }
    fn push(&mut self, r: Result<f64, DiscreteError>) {
        match r {
            Ok(v) if v.is_nan() => self.value = f64::NAN,
            Ok(v) => self.value = self.value.max(v.abs()),
            Err(e) => {
                self.error.get_or_insert(e.to_string());
            }
        }
    }
    fn entry(self, id: &str, anchor: &str, tol: f64, n: usize) -> CheckEntry {
        match self.error {
            Some(e) => CheckEntry::failed(id, anchor, tol, e),
            None => CheckEntry::new(id, anchor, self.value, tol).with_detail(format!("{n} cases")),
        }
    }
}

/// Runs every `T_U` check on each leg and at each vertex of degree ≥ 2.
pub fn check_local_inverse(curve: &TropicalCurve, g: &KahlerForm, seed: u64, tests: usize, rule: &QuadratureRule) -> Vec<CheckEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let legs: Vec<String> = curve.edges().iter().filter(|e| e.is_infinite()).map(|e| e.id.clone()).collect();
    let mut out = Vec::new();
    if !legs.is_empty() {
        for p in [0u8, 1] {
            let (mut pointwise, mut operator, mut weak, mut unique) = (Worst::new(), Worst::new(), Worst::new(), Worst::new());
            let mut cases = 0;
            for leg in &legs {
                for &a in &ANCHORS {
                    let omega = leg_input(leg, p, g, &mut rng);
                    let domain = LocalDomain::Leg { edge: leg.clone(), a };
                    let psi = match solve_dbar_local(curve, &omega, &domain, rule) {
                        Ok(psi) => psi,
                        Err(e) => {
                            for w in [&mut pointwise, &mut operator, &mut weak, &mut unique] {
                                w.push(Err(e.clone()));
                            }
                            continue;
                        }
                    };
                    cases += 1;
                    match leg_estimates(&omega, &psi, leg, a, g, DEPTH, rule) {
                        Ok(est) => {
                            pointwise.push(Ok(est.pointwise_ratio));
                            operator.push(Ok(est.operator_ratio));
                        }
                        Err(e) => {
                            pointwise.push(Err(e.clone()));
                            operator.push(Err(e));
                        }
                    }
                    for _ in 0..tests {
                        let phi = leg_test_form(leg, a, p, &mut rng);
                        weak.push(weak_defect(curve, &omega, &psi, &phi, p, rule));
                    }
                    // a second solution from a lower base point
                    let lower = LocalDomain::Leg { edge: leg.clone(), a: a - 0.5 };
                    unique.push(solve_dbar_local(curve, &omega, &lower, rule).map(|other| {
                        let (f1, f2) = (psi.coeff(leg), other.coeff(leg));
                        let diffs: Vec<f64> = (0..=200).map(|k| a - 0.5 - DEPTH * k as f64 / 200.0).map(|x| f1.eval(x) - f2.eval(x)).collect();
                        if p == 0 {
                            let max = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                            let min = diffs.iter().cloned().fold(f64::INFINITY, f64::min);
                            max - min
                        } else {
                            diffs.iter().map(|d| d.abs()).fold(0.0, f64::max)
                        }
                    }));
                }
            }
            out.push(pointwise.entry(&format!("local.pointwise-p{p}"), ESTIMATE, RATIO_TOL, cases));
            out.push(operator.entry(&format!("local.operator-bound-p{p}"), OPERATOR, RATIO_TOL, cases));
            out.push(weak.entry(&format!("local.weak-identity-p{p}"), WEAK, WEAK_TOL, cases * tests));
            out.push(unique.entry(&format!("local.uniqueness-p{p}"), UNIQUE, WEAK_TOL, cases));
        }
    }
    let mut star = Worst::new();
    let mut cases = 0;
    for v in curve.vertices().iter().filter(|v| curve.degree(v) >= 2) {
        let r = star_radius(curve, v);
        for p in [0u8, 1] {
            let omega = Superform::from_fn(curve, input_bidegree(p), |_| random_cubic(&mut rng));
            let domain = LocalDomain::Star { vertex: v.clone(), radius: r };
            match solve_dbar_local(curve, &omega, &domain, rule) {
                Ok(psi) => {
                    for _ in 0..tests {
                        let phi = star_test_form(curve, v, r, p, &mut rng);
                        star.push(weak_defect(curve, &omega, &psi, &phi, p, rule));
                        cases += 1;
                    }
                }
                Err(e) => star.push(Err(e)),
            }
        }
    }
    if cases > 0 || star.error.is_some() {
        out.push(star.entry("local.weak-identity-star", WEAK, WEAK_TOL, cases));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::forms::vertex_defect;
    use crate::curve::samples::*;

    #[test]
    fn all_local_checks_pass() {
        let r = QuadratureRule::default();
        for c in [tp1(), star3(), triangle(), loop_curve()] {
            let g = KahlerForm::standard(&c, &r).unwrap();
            let entries = check_local_inverse(&c, &g, 5, 20, &r);
            assert!(!entries.is_empty());
            for e in entries {
                assert!(e.passed(), "{e:?}");
            }
        }
    }

    #[test]
    fn star_test_forms_satisfy_vertex_conditions() {
        let c = theta();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in [0, 1] {
            let v = &c.vertices()[0];
            let phi = star_test_form(&c, v, star_radius(&c, v), p, &mut rng);
            assert!(vertex_defect(&c, &phi) < 1e-12);
        }
    }
}
