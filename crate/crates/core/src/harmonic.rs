//! Exact harmonic superform bases and cohomology dimensions.
//!
//! Harmonic `(1,0)` forms are edge-constant, vanish on infinite edges and
//! satisfy Kirchhoff's law, so they are the rational nullspace of the
//! incidence matrix restricted to finite edges. The other bidegrees follow
//! by the Hodge star. Independently, Čech cohomology of the constant sheaf
//! and of `Ω¹` is computed on a cover by vertex stars and open edges.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::curve::{incidence_matrix, Side, TropicalCurve};
use crate::function::EdgeFunction;
use crate::metric::KahlerForm;
use crate::rational::RationalMatrix;
use crate::superform::{Bidegree, Superform};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarmonicError {
    #[error("a Kähler form is required for bidegree (1,1)")]
    MissingKahler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    IncidenceNullspace,
    Constants,
    StarDual,
}

#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    pub bidegree: Bidegree,
    pub provenance: Provenance,
    /// Column order of `coefficients`.
    pub edges: Vec<String>,
    /// Exact edge constants per basis element; `None` for the `(1,1)` space,
    /// whose element is the Kähler weight itself.
    pub coefficients: Option<Vec<Vec<BigInt>>>,
    pub forms: Vec<Superform>,
}

impl HarmonicBasis {
    pub fn dim(&self) -> usize {
        self.forms.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let coeffs = self.coefficients.as_ref().map(|vs| {
            vs.iter()
                .map(|v| v.iter().map(|x| x.to_i64().expect("small integer")).collect::<Vec<_>>())
                .collect::<Vec<_>>()
        });
        serde_json::json!({
            "bidegree": format!("{}{}", self.bidegree.p, self.bidegree.q),
            "provenance": self.provenance,
            "dim": self.dim(),
            "edges": self.edges,
            "basis": coeffs,
        })
    }
}

fn cycle_space(curve: &TropicalCurve) -> Vec<Vec<BigInt>> {
    let inc = incidence_matrix(curve);
    let finite: Vec<usize> = curve
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.is_infinite())
        .map(|(i, _)| i)
        .collect();
    let rows: Vec<Vec<i64>> = inc
        .entries
        .iter()
        .map(|r| finite.iter().map(|&j| r[j]).collect())
        .collect();
    let m = RationalMatrix::from_i64(&rows, finite.len());
    m.nullspace()
        .into_iter()
        .map(|v| {
            let mut full = vec![BigInt::zero(); curve.edges().len()];
            for (k, &j) in finite.iter().enumerate() {
                full[j] = v[k].clone();
            }
            full
        })
        .collect()
}

fn constant_form(curve: &TropicalCurve, b: Bidegree, coeffs: &[BigInt]) -> Superform {
    Superform::from_fn(curve, b, |e| {
        let i = curve.edge_index(&e.id).unwrap();
        EdgeFunction::constant(coeffs[i].to_f64().unwrap())
    })
}

pub fn harmonic_basis(
    curve: &TropicalCurve,
    g: Option<&KahlerForm>,
    bidegree: Bidegree,
) -> Result<HarmonicBasis, HarmonicError> {
    let edges: Vec<String> = curve.edges().iter().map(|e| e.id.clone()).collect();
    let basis = match (bidegree.p, bidegree.q) {
        (0, 0) => {
            let ones = vec![BigInt::one(); edges.len()];
            HarmonicBasis {
                bidegree,
                provenance: Provenance::Constants,
                edges,
                forms: vec![constant_form(curve, bidegree, &ones)],
                coefficients: Some(vec![ones]),
            }
        }
        (1, 1) => {
            let g = g.ok_or(HarmonicError::MissingKahler)?;
            HarmonicBasis {
                bidegree,
                provenance: Provenance::StarDual,
                edges,
                forms: vec![g.as_form()],
                coefficients: None,
            }
        }
        _ => {
            let vs = cycle_space(curve);
            HarmonicBasis {
                bidegree,
                provenance: if bidegree == Bidegree::B10 {
                    Provenance::IncidenceNullspace
                } else {
                    Provenance::StarDual
                },
                edges,
                forms: vs.iter().map(|v| constant_form(curve, bidegree, v)).collect(),
                coefficients: Some(vs),
            }
        }
    };
    Ok(basis)
}

pub fn betti(curve: &TropicalCurve, q: u8) -> usize {
    let c = curve.components();
    match q {
        0 => c,
        1 => (curve.edges().len() + c).saturating_sub(curve.vertices().len()),
        _ => 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sheaf {
    Constants,
    Omega1,
}

/// Local section basis over a vertex star, as coefficients on the
/// incident edge-ends (canonical charts).
fn star_sections(curve: &TropicalCurve, v: &str, sheaf: Sheaf) -> Vec<Vec<(usize, i64)>> {
    let ends = curve.ends_at(v);
    match sheaf {
        Sheaf::Constants => vec![(0..ends.len()).map(|k| (k, 1)).collect()],
        Sheaf::Omega1 => {
            if ends.len() < 2 {
                return Vec::new();
            }
            let sigma = |k: usize| if ends[k].side == Side::Head { 1 } else { -1 };
            let last = ends.len() - 1;
            (0..last)
                .map(|j| vec![(j, sigma(j)), (last, -sigma(last))])
                .collect()
        }
    }
}

/// `(dim H⁰, dim H¹)` of the Čech complex on the cover by small vertex
/// stars and open edge interiors.
pub fn cech_cohomology(curve: &TropicalCurve, sheaf: Sheaf) -> (usize, usize) {
    // C¹: one germ per edge-end, indexed by its position in the global end list
    let mut germ_index = std::collections::BTreeMap::new();
    for v in curve.vertices() {
        for (k, end) in curve.ends_at(v).iter().enumerate() {
            let idx = germ_index.len();
            germ_index.insert((v.clone(), k), (idx, *end));
        }
    }
    let n1 = germ_index.len();

    let mut columns: Vec<Vec<(usize, i64)>> = Vec::new();
    for v in curve.vertices() {
        for section in star_sections(curve, v, sheaf) {
            let col = section
                .into_iter()
                .map(|(k, c)| (germ_index[&(v.clone(), k)].0, -c))
                .collect();
            columns.push(col);
        }
    }
    for (i, _) in curve.edges().iter().enumerate() {
        let col = germ_index
            .values()
            .filter(|(_, end)| end.edge == i)
            .map(|(idx, _)| (*idx, 1))
            .collect();
        columns.push(col);
    }
    let n0 = columns.len();
    let mut delta = RationalMatrix::zeros(n1, n0);
    for (j, col) in columns.iter().enumerate() {
        for &(i, c) in col {
            let v = delta.get(i, j) + BigRational::from_integer(BigInt::from(c));
            delta.set(i, j, v);
        }
    }
    let rank = delta.rank();
    (n0 - rank, n1 - rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::samples::*;
    use crate::curve::{genus, Edge, Length};
    use crate::metric::{codifferential, laplacian, QuadratureRule};
    use crate::superform::{d_second, is_regular};
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn triangle_basis() {
        let b = harmonic_basis(&triangle(), None, Bidegree::B10).unwrap();
        assert_eq!(b.coefficients.unwrap(), vec![ints(&[1, 1, 1])]);
        assert_eq!(b.provenance, Provenance::IncidenceNullspace);
    }

    #[test]
    fn dimensions() {
        assert_eq!(harmonic_basis(&star3(), None, Bidegree::B10).unwrap().dim(), 0);
        assert_eq!(harmonic_basis(&theta(), None, Bidegree::B10).unwrap().dim(), 2);
        assert_eq!(harmonic_basis(&theta(), None, Bidegree::B01).unwrap().dim(), 2);
        assert_eq!(harmonic_basis(&tp1(), None, Bidegree::B00).unwrap().dim(), 1);
        assert_eq!(
            harmonic_basis(&tp1(), None, Bidegree::B11).unwrap_err(),
            HarmonicError::MissingKahler
        );
        let r = QuadratureRule::default();
        let g = KahlerForm::standard(&tp1(), &r).unwrap();
        assert_eq!(harmonic_basis(&tp1(), Some(&g), Bidegree::B11).unwrap().dim(), 1);
    }

    #[test]
    fn betti_examples() {
        assert_eq!(betti(&triangle(), 1), 1);
        assert_eq!(betti(&theta(), 1), 2);
        assert_eq!(betti(&tp1(), 1), 0);
        assert_eq!(betti(&triangle(), 0), 1);
    }

    #[test]
    fn cech_examples() {
        assert_eq!(cech_cohomology(&triangle(), Sheaf::Constants), (1, 1));
        assert_eq!(cech_cohomology(&triangle(), Sheaf::Omega1), (1, 1));
        assert_eq!(cech_cohomology(&tp1(), Sheaf::Constants), (1, 0));
        assert_eq!(cech_cohomology(&tp1(), Sheaf::Omega1), (0, 1));
        assert_eq!(cech_cohomology(&theta(), Sheaf::Omega1), (2, 1));
        assert_eq!(cech_cohomology(&star3(), Sheaf::Omega1), (0, 1));
        assert_eq!(cech_cohomology(&loop_curve(), Sheaf::Omega1), (1, 1));
        assert_eq!(cech_cohomology(&loop_curve(), Sheaf::Constants), (1, 1));
    }

    #[test]
    fn basis_is_harmonic() {
        let r = QuadratureRule::default();
        for c in [triangle(), theta(), loop_curve()] {
            let g = KahlerForm::new(
                &c,
                c.edges()
                    .iter()
                    .map(|e| (e.id.clone(), EdgeFunction::parse("2 + x^2").unwrap()))
                    .collect(),
                &r,
            )
            .unwrap();
            for w in harmonic_basis(&c, Some(&g), Bidegree::B10).unwrap().forms {
                let rep = is_regular(&w, &c, 1e-300).unwrap();
                assert!(rep.pass);
                assert!(d_second(&w).form.is_zero());
                assert!(codifferential(&w, &g).form.is_zero());
                assert!(laplacian(&w, &g).is_zero());
            }
        }
    }

    fn arb_curve() -> impl Strategy<Value = TropicalCurve> {
        (
            2usize..6,
            proptest::collection::vec((0usize..6, 0usize..6), 0..7),
            proptest::collection::vec(0usize..6, 0..4),
        )
            .prop_map(|(n, chords, legs)| {
                let mut vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
                let mut edges = Vec::new();
                for i in 0..n {
                    edges.push(Edge {
                        id: format!("c{i}"),
                        tail: format!("v{i}"),
                        head: format!("v{}", (i + 1) % n),
                        length: Length::Finite(1.0),
                    });
                }
                for (k, (a, b)) in chords.into_iter().enumerate() {
                    edges.push(Edge {
                        id: format!("d{k}"),
                        tail: format!("v{}", a % n),
                        head: format!("v{}", b % n),
                        length: Length::Finite(0.5 + k as f64),
                    });
                }
                for (k, a) in legs.into_iter().enumerate() {
                    vertices.push(format!("leaf{k}"));
                    edges.push(Edge {
                        id: format!("l{k}"),
                        tail: format!("leaf{k}"),
                        head: format!("v{}", a % n),
                        length: Length::Infinite,
                    });
                }
                TropicalCurve::new(vertices, edges).unwrap()
            })
    }

    proptest! {
        #[test]
        fn four_computations_of_genus_agree(c in arb_curve()) {
            let n = genus(&c);
            prop_assert_eq!(harmonic_basis(&c, None, Bidegree::B10).unwrap().dim(), n);
            prop_assert_eq!(betti(&c, 1), n);
            prop_assert_eq!(cech_cohomology(&c, Sheaf::Omega1), (n, 1));
            prop_assert_eq!(cech_cohomology(&c, Sheaf::Constants), (1, n));
        }

        #[test]
        fn dimensions_invariant_under_flips_and_relabeling(c in arb_curve(), k in 0usize..4) {
            let n = harmonic_basis(&c, None, Bidegree::B10).unwrap().dim();
            let id = c.edges()[k % c.edges().len()].id.clone();
            if let Some(r) = c.reversed_edge(&id) {
                prop_assert_eq!(harmonic_basis(&r, None, Bidegree::B10).unwrap().dim(), n);
            }
            let relabeled = c.relabeled(|v| format!("w-{}", v.chars().rev().collect::<String>())).unwrap();
            prop_assert_eq!(harmonic_basis(&relabeled, None, Bidegree::B10).unwrap().dim(), n);
            prop_assert_eq!(cech_cohomology(&relabeled, Sheaf::Omega1).0, n);
        }

        #[test]
        fn star_maps_basis_to_basis(c in arb_curve()) {
            let r = QuadratureRule::default();
            let g = KahlerForm::standard(&c, &r).unwrap();
            for b in Bidegree::ALL {
                let basis = harmonic_basis(&c, Some(&g), b).unwrap();
                let dual = harmonic_basis(&c, Some(&g), b.dual()).unwrap();
                prop_assert_eq!(basis.dim(), dual.dim());
                for (w, d) in basis.forms.iter().zip(&dual.forms) {
                    let s = crate::metric::hodge_star(w, &g);
                    prop_assert_eq!(s.bidegree, b.dual());
                    for e in c.edges() {
                        for x in [-0.5, 0.0] {
                            let sign = if b == Bidegree::B01 { -1.0 } else { 1.0 };
                            let want = if b == Bidegree::B11 { 1.0 } else if b == Bidegree::B00 { g.weight(&e.id).eval(x) } else { sign * d.coeff(&e.id).eval(x) };
                            prop_assert!((s.coeff(&e.id).eval(x) - want).abs() < 1e-14);
                        }
                    }
                }
            }
        }
    }
}
