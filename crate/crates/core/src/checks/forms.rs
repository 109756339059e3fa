//! Seeded families of test forms.
//!
//! Coefficients are cubics with entries drawn uniformly from `[-1, 1]`.
//! On infinite edges the cubic is multiplied by a profile equal to 1 at
//! the vertex: a C¹ cutoff (giving regular forms) or `2·FS` (giving the
//! decaying family). Vertex defects are then removed by the least-squares
//! end correction, spread linearly along finite edges and by the profile
//! along legs.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::curve::{Side, TropicalCurve};
use crate::function::EdgeFunction;
use crate::superform::{Bidegree, Superform};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegProfile {
    /// `0` below `-2`, `1` on `[-1, 0]`.
    Cutoff,
    /// `2 · FS`, decaying like `e^{2x}`.
    Decay,
}

impl LegProfile {
    pub fn function(self) -> EdgeFunction {
        match self {
            LegProfile::Cutoff => cutoff(),
            LegProfile::Decay => EdgeFunction::fubini_study().scale(2.0),
        }
    }
}

/// C¹ smoothstep from 0 at `-2` to 1 at `-1`.
pub fn cutoff() -> EdgeFunction {
    EdgeFunction::parse("3*(x+2)^2 - 2*(x+2)^3")
        .expect("static formula")
        .clamp_below(-2.0, 0.0)
        .clamp_above(-1.0, 1.0)
}

/// `((x - lo)(x - hi))²` on `[lo, hi]`, zero elsewhere.
pub fn bump(lo: f64, hi: f64) -> EdgeFunction {
    let q = EdgeFunction::polynomial(&[lo * hi, -(lo + hi), 1.0]);
    (q.clone() * q).clamp_below(lo, 0.0).clamp_above(hi, 0.0)
}

pub fn random_cubic(rng: &mut ChaCha8Rng) -> EdgeFunction {
    let c: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect();
    EdgeFunction::polynomial(&c)
}

/// End values in vertex charts: `f(0)` at heads, `s·f(-l)` at tails.
fn end_values(curve: &TropicalCurve, form: &Superform, v: &str) -> Vec<(usize, Side, f64)> {
    let s = form.bidegree.reversal_sign();
    curve
        .ends_at(v)
        .iter()
        .map(|end| {
            let e = &curve.edges()[end.edge];
            let f = form.coeff(&e.id);
            let val = match end.side {
                Side::Head => f.eval(0.0),
                Side::Tail => s * f.eval(-e.length.as_f64()),
            };
            (end.edge, end.side, val)
        })
        .collect()
}

/// Largest continuity spread (`(0,0)`) or Kirchhoff sum (`(1,0)`) over
/// vertices of degree at least 2; zero for other bidegrees.
pub fn vertex_defect(curve: &TropicalCurve, form: &Superform) -> f64 {
    let mut worst: f64 = 0.0;
    for v in curve.vertices() {
        if curve.degree(v) < 2 {
            continue;
        }
        let vals: Vec<f64> = end_values(curve, form, v).into_iter().map(|t| t.2).collect();
        let d = if form.bidegree == Bidegree::B00 {
            let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            max - min
        } else if form.bidegree == Bidegree::B10 {
            vals.iter().sum::<f64>().abs()
        } else {
            0.0
        };
        worst = worst.max(d);
    }
    worst
}

/// Removes continuity (`(0,0)`) or Kirchhoff (`(1,0)`) defects with the
/// minimal-norm change of end values.
pub fn project_vertex_conditions(curve: &TropicalCurve, form: &Superform, profile: LegProfile) -> Superform {
    let n = curve.edges().len();
    // per edge: (head correction, tail correction) in the edge chart
    let mut delta = vec![(0.0, 0.0); n];
    let b = form.bidegree;
    for v in curve.vertices() {
        let deg = curve.degree(v);
        if deg < 2 {
            continue;
        }
        let vals = end_values(curve, form, v);
        if b == Bidegree::B00 {
            let mean = vals.iter().map(|t| t.2).sum::<f64>() / deg as f64;
            for (e, side, val) in vals {
                match side {
                    Side::Head => delta[e].0 = mean - val,
                    Side::Tail => delta[e].1 = mean - val,
                }
            }
        } else if b == Bidegree::B10 {
            let r = vals.iter().map(|t| t.2).sum::<f64>() / deg as f64;
            for (e, side, _) in vals {
                match side {
                    Side::Head => delta[e].0 = -r,
                    Side::Tail => delta[e].1 = r,
                }
            }
        }
    }
    let leg = profile.function();
    let mut out = form.clone();
    for (e, (dh, dt)) in curve.edges().iter().zip(delta) {
        if dh == 0.0 && dt == 0.0 {
            continue;
        }
        let fix = match e.length.finite() {
            Some(l) => EdgeFunction::polynomial(&[dh, (dh - dt) / l]),
            None => leg.scale(dh),
        };
        out = out.with(&e.id, form.coeff(&e.id) + fix);
    }
    out
}

fn raw_form(curve: &TropicalCurve, bidegree: Bidegree, rng: &mut ChaCha8Rng, profile: LegProfile) -> Superform {
    let leg = profile.function();
    Superform::from_fn(curve, bidegree, |e| {
        let cubic = random_cubic(rng);
        if !e.is_infinite() {
            cubic
        } else if bidegree == Bidegree::B00 {
            let c = rng.random_range(-1.0..=1.0);
            EdgeFunction::constant(c) + cubic * leg.clone()
        } else {
            cubic * leg.clone()
        }
    })
}

/// A `(1,0)` form satisfying Kirchhoff's law. With [`LegProfile::Cutoff`]
/// it is regular.
pub fn random_10(curve: &TropicalCurve, rng: &mut ChaCha8Rng, profile: LegProfile) -> Superform {
    project_vertex_conditions(curve, &raw_form(curve, Bidegree::B10, rng, profile), profile)
}

/// A continuous `(0,0)` form. With [`LegProfile::Cutoff`] it is regular.
pub fn random_00(curve: &TropicalCurve, rng: &mut ChaCha8Rng, profile: LegProfile) -> Superform {
    project_vertex_conditions(curve, &raw_form(curve, Bidegree::B00, rng, profile), profile)
}

/// Forms of any bidegree without vertex conditions; on legs the
/// coefficient decays (times `g` for `(1,1)` so that norms stay finite).
pub fn random_decaying(
    curve: &TropicalCurve,
    bidegree: Bidegree,
    weights: &dyn Fn(&str) -> EdgeFunction,
    rng: &mut ChaCha8Rng,
) -> Superform {
    let fs = EdgeFunction::fubini_study().scale(2.0);
    Superform::from_fn(curve, bidegree, |e| {
        let cubic = random_cubic(rng);
        if !e.is_infinite() {
            return cubic;
        }
        match (bidegree.p, bidegree.q) {
            (0, 0) => EdgeFunction::constant(rng.random_range(-1.0..=1.0)) + cubic * fs.clone(),
            (1, 1) => cubic * weights(&e.id),
            _ => cubic * fs.clone(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::samples::*;
    use crate::superform::is_regular;
    use rand::SeedableRng;

    fn curves() -> Vec<TropicalCurve> {
        vec![triangle(), theta(), tp1(), star3(), loop_curve()]
    }

    #[test]
    fn cutoff_values() {
        let c = cutoff();
        assert_eq!(c.eval(-3.0), 0.0);
        assert_eq!(c.eval(-0.5), 1.0);
        assert!((c.eval(-1.5) - 0.5).abs() < 1e-15);
        assert!(c.derivative().eval(-1.0).abs() < 1e-14);
        assert!(c.derivative().eval(-2.0).abs() < 1e-14);
    }

    #[test]
    fn bump_support() {
        let b = bump(-3.0, -1.0);
        assert_eq!(b.eval(-3.5), 0.0);
        assert_eq!(b.eval(-0.5), 0.0);
        assert!((b.eval(-2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn generated_forms_are_regular() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for c in curves() {
            for _ in 0..5 {
                for f in [random_10(&c, &mut rng, LegProfile::Cutoff), random_00(&c, &mut rng, LegProfile::Cutoff)] {
                    let rep = is_regular(&f, &c, 1e-12).unwrap();
                    assert!(rep.pass, "{rep:?}");
                    assert!(vertex_defect(&c, &f) < 1e-12);
                }
                let d = random_10(&c, &mut rng, LegProfile::Decay);
                assert!(vertex_defect(&c, &d) < 1e-12);
            }
        }
    }

    #[test]
    fn projection_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = theta();
        let f = random_10(&c, &mut rng, LegProfile::Cutoff);
        let g = project_vertex_conditions(&c, &f, LegProfile::Cutoff);
        for e in c.edges() {
            for x in [-0.7, -0.3, 0.0] {
                assert!((f.coeff(&e.id).eval(x) - g.coeff(&e.id).eval(x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn same_seed_same_forms() {
        let c = triangle();
        let a = random_00(&c, &mut ChaCha8Rng::seed_from_u64(5), LegProfile::Cutoff);
        let b = random_00(&c, &mut ChaCha8Rng::seed_from_u64(5), LegProfile::Cutoff);
        for e in c.edges() {
            assert_eq!(a.coeff(&e.id).eval(-0.4), b.coeff(&e.id).eval(-0.4));
        }
    }
}
