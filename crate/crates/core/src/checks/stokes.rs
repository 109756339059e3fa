//! Stokes' theorem and integration by parts.

use crate::curve::TropicalCurve;
use crate::metric::{integrate, MetricError, QuadratureRule};
use crate::superform::{d_second, is_regular, wedge, Bidegree, Superform};

use super::forms::vertex_defect;
use super::{CheckEntry, ChecksError};

const STOKES: &str = "Stokes theorem for regular forms";
const BILINEAR: &str = "Stokes theorem, bilinear form";
const IBP: &str = "integration by parts";

fn require_regular(curve: &TropicalCurve, forms: &[Superform], bidegree: Bidegree) -> Result<(), ChecksError> {
    for (index, f) in forms.iter().enumerate() {
        if f.bidegree != bidegree {
            return Err(ChecksError::Bidegree { index, expected: bidegree, got: f.bidegree });
        }
        let rep = is_regular(f, curve, 1e-12)?;
        if !rep.pass {
            return Err(ChecksError::NotRegular { index, detail: serde_json::to_string(&rep).unwrap_or_default() });
        }
    }
    Ok(())
}

/// `∫ d''φ∧ψ − (−1)^{p+1} ∫ φ∧d''ψ`, with `p` the first degree of `φ`.
pub fn bilinear_defect(curve: &TropicalCurve, phi: &Superform, psi: &Superform, rule: &QuadratureRule) -> Result<f64, MetricError> {
    let sign = if phi.bidegree.p == 1 { 1.0 } else { -1.0 };
    let lhs = integrate(curve, &wedge(&d_second(phi).form, psi)?, rule)?;
    let rhs = integrate(curve, &wedge(phi, &d_second(psi).form)?, rule)?;
    Ok(lhs - sign * rhs)
}

fn worst(entries: impl Iterator<Item = Result<f64, MetricError>>) -> Result<f64, MetricError> {
    let mut w: f64 = 0.0;
    for r in entries {
        let r = r?.abs();
        w = if r.is_nan() { f64::NAN } else { w.max(r) };
    }
    Ok(w)
}

fn entry(id: &str, anchor: &str, value: Result<f64, MetricError>, tol: f64, n: usize) -> CheckEntry {
    match value {
        Ok(r) => CheckEntry::new(id, anchor, r, tol).with_detail(format!("{n} cases")),
        Err(e) => CheckEntry::failed(id, anchor, tol, e.to_string()),
    }
}

/// `∫ d''ω = 0` for every regular `(1,0)` form, and the bilinear identity
/// for each pair `(f_i, ω_i)` of a regular function and a regular form,
/// in both orders. Non-regular input is rejected.
pub fn check_stokes(
    curve: &TropicalCurve,
    forms: &[Superform],
    functions: &[Superform],
    rule: &QuadratureRule,
    tol: f64,
) -> Result<Vec<CheckEntry>, ChecksError> {
    require_regular(curve, forms, Bidegree::B10)?;
    require_regular(curve, functions, Bidegree::B00)?;
    let integral = worst(forms.iter().map(|w| integrate(curve, &d_second(w).form, rule)));
    let bilinear = worst(
        functions
            .iter()
            .zip(forms)
            .flat_map(|(f, w)| [bilinear_defect(curve, f, w, rule), bilinear_defect(curve, w, f, rule)]),
    );
    Ok(vec![
        entry("stokes.integral", STOKES, integral, tol, forms.len()),
        entry("stokes.bilinear", BILINEAR, bilinear, tol, 2 * functions.len().min(forms.len())),
    ])
}

/// `|∫ d''ψ∧φ + ∫ ψ∧d''φ|` over pairs of a continuous `(0,0)` form and a
/// Kirchhoff `(1,0)` form, which may be nonzero along infinite edges as
/// long as the integrals converge.
pub fn check_integration_by_parts(
    id: &str,
    curve: &TropicalCurve,
    pairs: &[(Superform, Superform)],
    rule: &QuadratureRule,
    tol: f64,
) -> Result<CheckEntry, ChecksError> {
    for (index, (psi, phi)) in pairs.iter().enumerate() {
        for (f, b) in [(psi, Bidegree::B00), (phi, Bidegree::B10)] {
            if f.bidegree != b {
                return Err(ChecksError::Bidegree { index, expected: b, got: f.bidegree });
            }
            let d = vertex_defect(curve, f);
            if !(d <= 1e-12) {
                return Err(ChecksError::NotRegular { index, detail: format!("vertex defect {d:e}") });
            }
        }
    }
    let value = worst(pairs.iter().map(|(psi, phi)| {
        let a = integrate(curve, &wedge(&d_second(psi).form, phi)?, rule)?;
        let b = integrate(curve, &wedge(psi, &d_second(phi).form)?, rule)?;
        Ok(a + b)
    }));
    Ok(entry(id, IBP, value, tol, pairs.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checks::forms::{random_00, random_10, LegProfile};
    use crate::curve::samples::*;
    use crate::curve::{Edge, Length};
    use crate::function::EdgeFunction;
    use crate::harmonic::harmonic_basis;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rule() -> QuadratureRule {
        QuadratureRule::default()
    }

    #[test]
    fn harmonic_forms_have_exact_zero() {
        let c = theta();
        let basis = harmonic_basis(&c, None, Bidegree::B10).unwrap().forms;
        let one = vec![Superform::uniform(&c, Bidegree::B00, EdgeFunction::one()); basis.len()];
        let e = check_stokes(&c, &basis, &one, &rule(), 0.0).unwrap();
        assert!(e.iter().all(|x| x.passed() && x.residual == Some(0.0)), "{e:?}");
    }

    #[test]
    fn random_regular_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for c in [triangle(), tp1(), star3(), loop_curve()] {
            let w: Vec<_> = (0..20).map(|_| random_10(&c, &mut rng, LegProfile::Cutoff)).collect();
            let f: Vec<_> = (0..20).map(|_| random_00(&c, &mut rng, LegProfile::Cutoff)).collect();
            for e in check_stokes(&c, &w, &f, &rule(), 1e-8).unwrap() {
                assert!(e.passed(), "{e:?}");
            }
        }
    }

    #[test]
    fn constant_form_on_leg_rejected() {
        let c = tp1();
        let w = Superform::uniform(&c, Bidegree::B10, EdgeFunction::one());
        assert!(matches!(check_stokes(&c, &[w], &[], &rule(), 1e-8), Err(ChecksError::NotRegular { .. })));
    }

    #[test]
    fn ibp_on_a_path_edge() {
        // a single finite edge between two degree-2 vertices formed with two legs
        let edge = |id: &str, t: &str, h: &str, l| Edge { id: id.into(), tail: t.into(), head: h.into(), length: l };
        let c = TropicalCurve::new(
            vec!["a".into(), "b".into(), "la".into(), "lb".into()],
            vec![
                edge("mid", "a", "b", Length::Finite(1.0)),
                edge("la", "la", "a", Length::Infinite),
                edge("lb", "lb", "b", Length::Infinite),
            ],
        )
        .unwrap();
        let psi = Superform::uniform(&c, Bidegree::B00, EdgeFunction::zero()).with("mid", EdgeFunction::x());
        let phi = Superform::zero(Bidegree::B10).with("mid", EdgeFunction::x());
        // give the legs matching end values
        let psi = crate::checks::forms::project_vertex_conditions(&c, &psi, LegProfile::Decay);
        let phi = crate::checks::forms::project_vertex_conditions(&c, &phi, LegProfile::Decay);
        let e = check_integration_by_parts("ibp", &c, &[(psi, phi)], &rule(), 1e-9).unwrap();
        assert!(e.passed(), "{e:?}");
    }

    #[test]
    fn decaying_pairs_on_legs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for c in [tp1(), star3()] {
            let pairs: Vec<_> = (0..20)
                .map(|_| (random_00(&c, &mut rng, LegProfile::Decay), random_10(&c, &mut rng, LegProfile::Decay)))
                .collect();
            let e = check_integration_by_parts("ibp.fs", &c, &pairs, &rule(), 1e-7).unwrap();
            assert!(e.passed(), "{e:?}");
        }
    }

    #[test]
    fn non_kirchhoff_pair_rejected() {
        let c = tp1();
        let psi = Superform::uniform(&c, Bidegree::B00, EdgeFunction::zero());
        let phi = Superform::uniform(&c, Bidegree::B10, EdgeFunction::one());
        assert!(check_integration_by_parts("ibp", &c, &[(psi, phi)], &rule(), 1e-7).is_err());
    }

    #[test]
    fn divergent_pair_fails_without_error() {
        let c = tp1();
        let (a, b) = (c.edges()[0].id.clone(), c.edges()[1].id.clone());
        let psi = Superform::uniform(&c, Bidegree::B00, EdgeFunction::x());
        let phi = Superform::zero(Bidegree::B10).with(&a, EdgeFunction::one()).with(&b, -EdgeFunction::one());
        let e = check_integration_by_parts("ibp", &c, &[(psi, phi)], &rule(), 1e-7).unwrap();
        assert!(!e.passed() && e.residual.is_none(), "{e:?}");
    }
}
