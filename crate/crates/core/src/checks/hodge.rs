//! Cross-oracle agreement of harmonic dimensions.

use nalgebra::DVector;

use crate::curve::{genus, TropicalCurve};
use crate::discrete::{assemble, build_mesh, kernel, principal_angles, DiscreteError, GAP_RATIO};
use crate::harmonic::{betti, cech_cohomology, harmonic_basis, Sheaf};
use crate::metric::{KahlerForm, QuadratureRule};
use crate::superform::Bidegree;

use super::CheckEntry;

const THEOREM: &str = "dimension of harmonic forms equals the genus";
const CLASS: &str = "harmonic forms represent cohomology classes";
const DUALITY: &str = "Hodge star duality of harmonic spaces";
const ANGLE_TOL: f64 = 1e-6;
pub const TRUNCATION_EPS: f64 = 1e-6;

fn count(id: impl Into<String>, anchor: &str, got: usize, expected: usize, what: &str) -> CheckEntry {
    CheckEntry::new(id, anchor, got.abs_diff(expected) as f64, 0.0).with_detail(format!("{what} = {got}, expected {expected}"))
}

fn h_label(h: f64) -> String {
    format!("h={h}")
}

/// Dimensions from the genus formula, the exact bases, Čech cohomology,
/// betti numbers and the discrete kernels at every mesh size, plus
/// principal angles between the discrete and exact `(1,0)` kernels.
pub fn check_hodge_theorem(curve: &TropicalCurve, g: &KahlerForm, h_list: &[f64], rule: &QuadratureRule) -> Vec<CheckEntry> {
    let n = genus(curve);
    let mut out = vec![count("hodge.betti1", THEOREM, betti(curve, 1), n, "betti1")];
    let cech = cech_cohomology(curve, Sheaf::Omega1);
    out.push(count("hodge.cech-h0-omega1", CLASS, cech.0, n, "dim H0(Omega1)"));
    out.push(count("hodge.cech-h1-omega1", CLASS, cech.1, 1, "dim H1(Omega1)"));
    let consts = cech_cohomology(curve, Sheaf::Constants);
    out.push(count("hodge.cech-constants", CLASS, consts.0 + consts.1, 1 + n, "dim H0 + dim H1 of constants"));

    let mut dims = [0usize; 4];
    for (k, b) in Bidegree::ALL.iter().enumerate() {
        match harmonic_basis(curve, Some(g), *b) {
            Ok(basis) => dims[k] = basis.dim(),
            Err(e) => {
                out.push(CheckEntry::failed(format!("hodge.basis-{}{}", b.p, b.q), THEOREM, 0.0, e.to_string()));
                dims[k] = usize::MAX;
            }
        }
    }
    let dim = |b: Bidegree| dims[Bidegree::ALL.iter().position(|x| *x == b).unwrap()];
    out.push(count("hodge.exact-nullspace", THEOREM, dim(Bidegree::B10), n, "dim H(1,0)"));
    out.push(count("hodge.basis-00", THEOREM, dim(Bidegree::B00), 1, "dim H(0,0)"));
    out.push(count("hodge.basis-11", THEOREM, dim(Bidegree::B11), 1, "dim H(1,1)"));
    let duality = Bidegree::ALL.iter().map(|b| dim(*b).abs_diff(dim(b.dual()))).max().unwrap_or(0);
    out.push(CheckEntry::new("hodge.star-duality", DUALITY, duality as f64, 0.0));

    let exact10 = harmonic_basis(curve, Some(g), Bidegree::B10).ok();
    for &h in h_list {
        let label = h_label(h);
        let mesh = match build_mesh(curve, g, h, TRUNCATION_EPS, rule) {
            Ok(m) => m,
            Err(e) => {
                out.push(CheckEntry::failed(format!("hodge.discrete-10.{label}"), THEOREM, 0.0, e.to_string()));
                continue;
            }
        };
        for (b, expected) in [(Bidegree::B10, n), (Bidegree::B00, 1)] {
            let id = format!("hodge.discrete-{}{}.{label}", b.p, b.q);
            let result = assemble(&mesh, curve, g, b).and_then(|s| kernel(&s, GAP_RATIO).map(|k| (s, k)));
            match result {
                Ok((system, k)) => {
                    let dim = k.kernel_dim.unwrap_or(k.vectors.len());
                    let gap = k.gap_ratio.unwrap_or(f64::INFINITY);
                    out.push(
                        count(id, THEOREM, dim, expected, "discrete kernel dim")
                            .with_detail(format!("kernel dim {dim}, gap ratio {gap:.3e}")),
                    );
                    if b == Bidegree::B10 {
                        let id = format!("hodge.principal-angle.{label}");
                        match &exact10 {
                            Some(basis) => {
                                let exact: Vec<DVector<f64>> = basis.forms.iter().map(|f| system.interpolate(f)).collect();
                                let angles = principal_angles(&system, &k.vectors, &exact);
                                let worst = angles.iter().cloned().fold(0.0, f64::max);
                                out.push(CheckEntry::new(id, CLASS, worst, ANGLE_TOL));
                            }
                            None => out.push(CheckEntry::failed(id, CLASS, ANGLE_TOL, "no exact basis")),
                        }
                    }
                }
                Err(DiscreteError::AmbiguousKernel { eigenvalues, candidates }) => {
                    let detail = format!("candidate kernel dims {candidates:?}, eigenvalues {eigenvalues:?}");
                    out.push(CheckEntry::ambiguous(id, THEOREM, 0.0, detail));
                }
                Err(e) => out.push(CheckEntry::failed(id, THEOREM, 0.0, e.to_string())),
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::samples::*;

    #[test]
    fn sample_curves_agree() {
        let r = QuadratureRule::default();
        for c in [triangle(), theta(), tp1(), star3(), loop_curve()] {
            let g = KahlerForm::standard(&c, &r).unwrap();
            let entries = check_hodge_theorem(&c, &g, &[1.0 / 16.0], &r);
            for e in &entries {
                assert!(e.passed(), "{e:?}");
            }
            assert!(entries.iter().any(|e| e.id == "hodge.discrete-10.h=0.0625"));
        }
    }
}
