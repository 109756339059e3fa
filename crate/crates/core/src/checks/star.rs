//! Hodge star identities on a generated form family.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::curve::TropicalCurve;
use crate::function::EdgeFunction;
use crate::metric::{hodge_star, inner_product, laplacian, KahlerForm, MetricError, QuadratureRule};
use crate::superform::{Bidegree, Superform};

use super::forms::random_decaying;
use super::CheckEntry;

const DOUBLE: &str = "double Hodge star sign";
const ISOMETRY: &str = "Hodge star is an isometry";
const COMMUTE: &str = "Hodge star commutes with the Laplace-Beltrami operator";
/// Sampled depth along infinite edges.
const LEG_DEPTH: f64 = 6.0;

fn sample_points(curve: &TropicalCurve) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    for e in curve.edges() {
        let lo = e.length.finite().map_or(-LEG_DEPTH, |l| -l);
        let n = 24;
        out.extend((0..=n).map(|k| (e.id.clone(), lo + (-lo) * (k as f64 + 0.5) / (n as f64 + 1.0))));
    }
    out
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

pub fn star_family(curve: &TropicalCurve, g: &KahlerForm, seed: u64, per_bidegree: usize) -> Vec<Superform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = |e: &str| g.weight(e);
    Bidegree::ALL
        .iter()
        .flat_map(|b| (0..per_bidegree).map(|_| random_decaying(curve, *b, &weights, &mut rng)).collect::<Vec<_>>())
        .collect()
}

/// `** = (−1)^{p+q}`, `(*a, *b) = (a, b)` and `*Δ = Δ*` on `family`.
pub fn check_star_identities(curve: &TropicalCurve, g: &KahlerForm, family: &[Superform], rule: &QuadratureRule, tol: f64) -> Vec<CheckEntry> {
    let points = sample_points(curve);
    let mut sign_errors = 0usize;
    let mut double: f64 = 0.0;
    let mut commute: f64 = 0.0;
    for f in family {
        let b = f.bidegree;
        let sign = if (b.p + b.q) % 2 == 0 { 1.0 } else { -1.0 };
        let ss = hodge_star(&hodge_star(f, g), g);
        let lap_star = laplacian(&hodge_star(f, g), g);
        let star_lap = hodge_star(&laplacian(f, g), g);
        for (e, x) in &points {
            let v = f.coeff(e).eval(*x);
            let w = ss.coeff(e).eval(*x);
            if v != 0.0 && w.signum() != sign * v.signum() {
                sign_errors += 1;
            }
            double = double.max(relative(w, sign * v));
            commute = commute.max(relative(lap_star.coeff(e).eval(*x), star_lap.coeff(e).eval(*x)));
        }
    }
    let isometry = (|| -> Result<f64, MetricError> {
        let mut worst: f64 = 0.0;
        for pair in family.chunks(2) {
            if let [a, b] = pair {
                if a.bidegree != b.bidegree {
                    continue;
                }
                let direct = inner_product(curve, a, b, g, rule)?;
                let starred = inner_product(curve, &hodge_star(a, g), &hodge_star(b, g), g, rule)?;
                worst = worst.max(relative(direct, starred));
            }
        }
        Ok(worst)
    })();
    vec![
        CheckEntry::new("star.double-sign", DOUBLE, sign_errors as f64, 0.0)
            .with_detail(format!("max relative deviation {double:.3e} over {} forms", family.len())),
        CheckEntry::new("star.double-magnitude", DOUBLE, double, 1e-14),
        match isometry {
            Ok(r) => CheckEntry::new("star.isometry", ISOMETRY, r, tol),
            Err(e) => CheckEntry::failed("star.isometry", ISOMETRY, tol, e.to_string()),
        },
        CheckEntry::new("star.laplacian-commutation", COMMUTE, commute, tol),
    ]
}

/// Compares the composed `(1,1)` Laplacian `-(f/g)''` with its expansion
/// `-f''/g + 2f'g'/g² + f g''/g² - 2f g'²/g³` on a Fubini–Study leg, and
/// reports how far the variant with coefficient 2 on `f g''/g²` is off.
pub fn check_top_degree_laplacian(rule: &QuadratureRule, tol: f64) -> CheckEntry {
    const ANCHOR: &str = "Laplace-Beltrami operator on (1,1) forms";
    let (curve, fs) = crate::theta::fubini_study_form();
    let g = match KahlerForm::new(&curve, fs.coefficients().clone(), rule) {
        Ok(g) => g,
        Err(e) => return CheckEntry::failed("laplacian.top-degree", ANCHOR, tol, e.to_string()),
    };
    let leg = curve.edges()[0].id.clone();
    let w = g.weight(&leg);
    let (w1, w2) = (w.derivative(), w.derivative().derivative());
    let mut residual: f64 = 0.0;
    let mut variant: f64 = 0.0;
    for c in [[1.0, 0.0, 0.0], [0.5, -1.0, 0.25], [-1.0, 0.3, 1.0]] {
        let f = EdgeFunction::polynomial(&c);
        let (f1, f2) = (f.derivative(), f.derivative().derivative());
        let lap = laplacian(&Superform::zero(Bidegree::B11).with(&leg, f.clone()), &g).coeff(&leg);
        for k in 0..=60 {
            let x = -LEG_DEPTH * k as f64 / 60.0;
            let (gv, d1, d2) = (w.eval(x), w1.eval(x), w2.eval(x));
            let (fv, e1, e2) = (f.eval(x), f1.eval(x), f2.eval(x));
            let expanded = -e2 / gv + 2.0 * e1 * d1 / (gv * gv) + fv * d2 / (gv * gv) - 2.0 * fv * d1 * d1 / gv.powi(3);
            let got = lap.eval(x);
            residual = residual.max(relative(got, expanded));
            variant = variant.max(relative(got, expanded + fv * d2 / (gv * gv)));
        }
    }
    CheckEntry::new("laplacian.top-degree", ANCHOR, residual, tol)
        .with_detail(format!("coefficient 2 on f g''/g^2 would deviate by {variant:.3e}"))
}
