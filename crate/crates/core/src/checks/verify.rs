//! The full verification run behind `verify`.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::curve::TropicalCurve;
use crate::function::EdgeFunction;
use crate::harmonic::harmonic_basis;
use crate::metric::{integrate, validate_kahler, KahlerForm, QuadratureRule};
use crate::superform::{is_regular, Bidegree, Superform};
use crate::theta::{compare_tropical_complex, fubini_study_form};

use super::forms::{random_00, random_10, random_cubic, LegProfile};
use super::{
    check_hodge_theorem, check_integration_by_parts, check_local_inverse, check_star_identities, check_stokes,
    check_top_degree_laplacian,
    star_family, CheckEntry, CheckReport,
};

pub const FINITE_TOL: f64 = 1e-8;
pub const INFINITE_TOL: f64 = 1e-7;
pub const THETA_TOL: f64 = 1e-6;
pub const MASS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub h_list: Vec<f64>,
    pub seed: u64,
    /// Fill in `seconds`; off by default so reports are reproducible byte for byte.
    pub timings: bool,
    /// Random forms per family.
    pub forms: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            h_list: vec![1.0 / 32.0, 1.0 / 64.0],
            seed: 0,
            timings: false,
            forms: 20,
        }
    }
}

fn stokes_suite(curve: &TropicalCurve, seed: u64, n: usize, rule: &QuadratureRule) -> Vec<CheckEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let forms: Vec<_> = (0..n).map(|_| random_10(curve, &mut rng, LegProfile::Cutoff)).collect();
    let functions: Vec<_> = (0..n).map(|_| random_00(curve, &mut rng, LegProfile::Cutoff)).collect();
    check_stokes(curve, &forms, &functions, rule, FINITE_TOL)
        .unwrap_or_else(|e| vec![CheckEntry::failed("stokes.integral", "Stokes theorem for regular forms", FINITE_TOL, e.to_string())])
}

fn ibp_suite(curve: &TropicalCurve, g: &KahlerForm, seed: u64, n: usize, rule: &QuadratureRule) -> Vec<CheckEntry> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one = Superform::uniform(curve, Bidegree::B00, EdgeFunction::one());
    let mut runs: Vec<(&str, Vec<(Superform, Superform)>, f64)> = Vec::new();
    let harmonic = harmonic_basis(curve, Some(g), Bidegree::B10).map(|b| b.forms).unwrap_or_default();
    runs.push(("ibp.harmonic", harmonic.into_iter().map(|w| (one.clone(), w)).collect(), FINITE_TOL));
    let regular = (0..n).map(|_| (random_00(curve, &mut rng, LegProfile::Cutoff), random_10(curve, &mut rng, LegProfile::Cutoff)));
    runs.push(("ibp.regular", regular.collect(), FINITE_TOL));
    if curve.has_infinite_edges() {
        let decay = (0..n).map(|_| (random_00(curve, &mut rng, LegProfile::Decay), random_10(curve, &mut rng, LegProfile::Decay)));
        runs.push(("ibp.fs-decay", decay.collect(), INFINITE_TOL));
    }
    runs.into_iter()
        .map(|(id, pairs, tol)| {
            check_integration_by_parts(id, curve, &pairs, rule, tol)
                .unwrap_or_else(|e| CheckEntry::failed(id, "integration by parts", tol, e.to_string()))
        })
        .collect()
}

/// Θ comparisons: the Fubini–Study facts, a seeded family of polynomials
/// times FS-type decay, and the Kähler weight of every edge of `curve`.
pub fn theta_checks(curve: &TropicalCurve, g: &KahlerForm, seed: u64, rule: &QuadratureRule) -> Vec<CheckEntry> {
    const KAHLER: &str = "the Fubini-Study form is a Kahler form";
    const IRREGULAR: &str = "the Fubini-Study form is not regular";
    let (line, fs) = fubini_study_form();
    let mut out = Vec::new();
    out.push(match integrate(&line, &fs, rule) {
        Ok(m) => CheckEntry::new("theta.fs-mass", KAHLER, (m - 1.0).abs(), MASS_TOL).with_detail(format!("mass {m:.15}")),
        Err(e) => CheckEntry::failed("theta.fs-mass", KAHLER, MASS_TOL, e.to_string()),
    });
    out.push(match validate_kahler(&line, fs.coefficients(), rule) {
        Ok(_) => CheckEntry::new("theta.fs-kahler", KAHLER, 0.0, 0.0),
        Err(e) => CheckEntry::failed("theta.fs-kahler", KAHLER, 0.0, e.to_string()),
    });
    out.push(match is_regular(&fs, &line, 1e-12) {
        Ok(rep) => CheckEntry::new("theta.fs-not-regular", IRREGULAR, if rep.pass { 1.0 } else { 0.0 }, 0.0),
        Err(e) => CheckEntry::failed("theta.fs-not-regular", IRREGULAR, 0.0, e.to_string()),
    });
    out.push(compare_tropical_complex("theta.fs-line", &EdgeFunction::fubini_study(), f64::NEG_INFINITY, f64::INFINITY, rule, THETA_TOL));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let intervals = [(f64::NEG_INFINITY, 0.0), (-1.5, 2.0), (0.0, f64::INFINITY), (f64::NEG_INFINITY, f64::INFINITY)];
    let mut family = Vec::new();
    for _ in 0..8 {
        let f = random_cubic(&mut rng) * EdgeFunction::fubini_study();
        for (a, b) in intervals {
            family.push(compare_tropical_complex("theta.family", &f, a, b, rule, THETA_TOL));
        }
    }
    let failure = family.iter().find(|e| e.residual.is_none()).cloned();
    out.push(failure.unwrap_or_else(|| {
        let worst = family.iter().filter_map(|e| e.residual).fold(0.0, f64::max);
        CheckEntry::new("theta.family", "tropical integral equals the integral of its image", worst, THETA_TOL)
            .with_detail(format!("{} cases", family.len()))
    }));

    for e in curve.edges() {
        let (lo, hi) = e.chart();
        out.push(compare_tropical_complex(&format!("theta.edge.{}", e.id), &g.weight(&e.id), lo, hi, rule, THETA_TOL));
    }
    out
}

/// Every suite on one curve. Suites run concurrently; entries come back in
/// a fixed order.
pub fn verify(curve: &TropicalCurve, g: &KahlerForm, options: &VerifyOptions, rule: &QuadratureRule) -> CheckReport {
    let s = options.seed;
    let n = options.forms;
    type Suite<'a> = Box<dyn Fn() -> Vec<CheckEntry> + Send + Sync + 'a>;
    let suites: Vec<Suite> = vec![
        Box::new(|| stokes_suite(curve, s, n, rule)),
        Box::new(|| ibp_suite(curve, g, s.wrapping_add(1), n, rule)),
        Box::new(|| check_hodge_theorem(curve, g, &options.h_list, rule)),
        Box::new(|| {
            let mut e = check_star_identities(curve, g, &star_family(curve, g, s.wrapping_add(2), 6), rule, INFINITE_TOL);
            e.push(check_top_degree_laplacian(rule, INFINITE_TOL));
            e
        }),
        Box::new(|| check_local_inverse(curve, g, s.wrapping_add(3), n, rule)),
        Box::new(|| theta_checks(curve, g, s.wrapping_add(4), rule)),
    ];
    let checks = suites
        .par_iter()
        .map(|suite| {
            let start = Instant::now();
            let mut entries = suite();
            if options.timings {
                let seconds = start.elapsed().as_secs_f64();
                entries.iter_mut().for_each(|e| e.seconds = seconds);
            }
            entries
        })
        .collect::<Vec<_>>()
        .concat();
    CheckReport { seed: s, checks }
}
