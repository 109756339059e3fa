//! Compact connected tropical curves: metric graphs whose infinite edges
//! end at leaves.
//!
//! Every edge carries a canonical chart. A finite edge of length `l` is
//! `[-l, 0]` with its head at `0`; an infinite edge is `[-inf, 0]` with the
//! leaf at `-inf`. Construction canonicalises orientation and splits a
//! bare doubly-infinite edge into two legs joined at a fresh vertex.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("edge `{edge}` references unknown vertex `{vertex}`")]
    UnknownVertex { edge: String, vertex: String },
    #[error("edge `{edge}` has nonpositive length {length}")]
    NonpositiveLength { edge: String, length: f64 },
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("invalid length for edge `{edge}`: {message}")]
    BadLength { edge: String, message: String },
    #[error("curve fails validation: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Length {
    Finite(f64),
    Infinite,
}

impl Length {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Length::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Length::Finite(l) => Some(*l),
            Length::Infinite => None,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Length::Finite(l) => *l,
            Length::Infinite => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: String,
    pub tail: String,
    pub head: String,
    pub length: Length,
}

impl Edge {
    /// Chart interval `(lo, 0)`, `lo` possibly `-inf`.
    pub fn chart(&self) -> (f64, f64) {
        (-self.length.as_f64(), 0.0)
    }

    pub fn is_infinite(&self) -> bool {
        self.length.is_infinite()
    }

    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Side {
    Tail,
    Head,
}

/// One end of an edge at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct EdgeEnd {
    pub edge: usize,
    pub side: Side,
}

/// Record of a rewrite applied while canonicalising the input.
#[derive(Debug, Clone, PartialEq)]
pub enum Normalization {
    /// A doubly-infinite edge split into two legs at `vertex`; the second
    /// leg's coordinate is the negated original coordinate.
    SplitLine {
        original: String,
        vertex: String,
        legs: [String; 2],
    },
    /// An infinite edge with its leaf at the head, flipped.
    Reoriented { edge: String },
}

#[derive(Debug, Clone)]
pub struct TropicalCurve {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    ends: BTreeMap<String, Vec<EdgeEnd>>,
    normalizations: Vec<Normalization>,
}

impl PartialEq for TropicalCurve {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl TropicalCurve {
    /// Structural checks plus canonicalisation; see [`validate`] for the
    /// definition-level conditions.
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>) -> Result<Self, CurveError> {
        let mut vset = BTreeSet::new();
        for v in &vertices {
            if !vset.insert(v.clone()) {
                return Err(CurveError::DuplicateId {
                    kind: "vertex",
                    id: v.clone(),
                });
            }
        }
        let mut eset = BTreeSet::new();
        for e in &edges {
            if !eset.insert(e.id.clone()) {
                return Err(CurveError::DuplicateId {
                    kind: "edge",
                    id: e.id.clone(),
                });
            }
            for v in [&e.tail, &e.head] {
                if !vset.contains(v) {
                    return Err(CurveError::UnknownVertex {
                        edge: e.id.clone(),
                        vertex: v.clone(),
                    });
                }
            }
            if let Length::Finite(l) = e.length {
                if !(l > 0.0) || !l.is_finite() {
                    return Err(CurveError::NonpositiveLength {
                        edge: e.id.clone(),
                        length: l,
                    });
                }
            }
        }
        let mut curve = Self::assemble(vset.into_iter().collect(), edges, Vec::new());
        curve.canonicalize();
        Ok(curve)
    }

    fn assemble(vertices: Vec<String>, mut edges: Vec<Edge>, normalizations: Vec<Normalization>) -> Self {
        edges.sort_by(|a, b| a.id.cmp(&b.id));
        let mut ends: BTreeMap<String, Vec<EdgeEnd>> =
            vertices.iter().map(|v| (v.clone(), Vec::new())).collect();
        for (i, e) in edges.iter().enumerate() {
            ends.get_mut(&e.tail).unwrap().push(EdgeEnd {
                edge: i,
                side: Side::Tail,
            });
            ends.get_mut(&e.head).unwrap().push(EdgeEnd {
                edge: i,
                side: Side::Head,
            });
        }
        TropicalCurve {
            vertices,
            edges,
            ends,
            normalizations,
        }
    }

    fn canonicalize(&mut self) {
        let mut edges = self.edges.clone();
        let mut vertices: BTreeSet<String> = self.vertices.iter().cloned().collect();
        let mut notes = std::mem::take(&mut self.normalizations);
        let degree = |v: &str| self.degree(v);
        let mut out = Vec::new();
        let mut taken: BTreeSet<String> = edges.iter().map(|e| e.id.clone()).collect();
        for e in edges.drain(..) {
            if !e.is_infinite() || e.is_loop() {
                out.push(e);
                continue;
            }
            let (dt, dh) = (degree(&e.tail), degree(&e.head));
            if dt == 1 && dh == 1 {
                let vertex = fresh(&format!("{}.mid", e.id), &vertices);
                vertices.insert(vertex.clone());
                let a = fresh(&format!("{}.0", e.id), &taken);
                taken.insert(a.clone());
                let b = fresh(&format!("{}.1", e.id), &taken);
                taken.insert(b.clone());
                out.push(Edge {
                    id: a.clone(),
                    tail: e.tail.clone(),
                    head: vertex.clone(),
                    length: Length::Infinite,
                });
                out.push(Edge {
                    id: b.clone(),
                    tail: e.head.clone(),
                    head: vertex.clone(),
                    length: Length::Infinite,
                });
                notes.push(Normalization::SplitLine {
                    original: e.id.clone(),
                    vertex,
                    legs: [a, b],
                });
            } else if dh == 1 && dt != 1 {
                notes.push(Normalization::Reoriented { edge: e.id.clone() });
                out.push(Edge {
                    id: e.id,
                    tail: e.head,
                    head: e.tail,
                    length: e.length,
                });
            } else {
                out.push(e);
            }
        }
        *self = Self::assemble(vertices.into_iter().collect(), out, notes);
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    /// Edges in sorted id order; this order indexes every matrix column.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn normalizations(&self) -> &[Normalization] {
        &self.normalizations
    }

    pub fn edge(&self, id: &str) -> Option<&Edge> {
        self.edge_index(id).map(|i| &self.edges[i])
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.binary_search_by(|e| e.id.as_str().cmp(id)).ok()
    }

    pub fn ends_at(&self, v: &str) -> &[EdgeEnd] {
        self.ends.get(v).map(|x| x.as_slice()).unwrap_or(&[])
    }

    pub fn degree(&self, v: &str) -> usize {
        self.ends_at(v).len()
    }

    pub fn has_infinite_edges(&self) -> bool {
        self.edges.iter().any(|e| e.is_infinite())
    }

    pub fn components(&self) -> usize {
        let mut seen = BTreeSet::new();
        let mut count = 0;
        for v in &self.vertices {
            if seen.contains(v) {
                continue;
            }
            count += 1;
            let mut queue = VecDeque::from([v.clone()]);
            seen.insert(v.clone());
            while let Some(u) = queue.pop_front() {
                for end in self.ends_at(&u) {
                    let e = &self.edges[end.edge];
                    let w = if end.side == Side::Tail { &e.head } else { &e.tail };
                    if seen.insert(w.clone()) {
                        queue.push_back(w.clone());
                    }
                }
            }
        }
        count
    }

    /// Copy with one edge's orientation reversed (chart `x -> -l - x`).
    /// Infinite edges are not reversible, their chart is fixed.
    pub fn reversed_edge(&self, id: &str) -> Option<TropicalCurve> {
        let i = self.edge_index(id)?;
        if self.edges[i].is_infinite() {
            return None;
        }
        let mut edges = self.edges.clone();
        let e = &mut edges[i];
        std::mem::swap(&mut e.tail, &mut e.head);
        Some(Self::assemble(
            self.vertices.clone(),
            edges,
            self.normalizations.clone(),
        ))
    }

    /// Copy with vertices renamed through `f`, which must be injective.
    pub fn relabeled(&self, f: impl Fn(&str) -> String) -> Result<TropicalCurve, CurveError> {
        let vertices = self.vertices.iter().map(|v| f(v)).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                id: e.id.clone(),
                tail: f(&e.tail),
                head: f(&e.head),
                length: e.length,
            })
            .collect();
        TropicalCurve::new(vertices, edges)
    }
}

fn fresh(base: &str, taken: &BTreeSet<String>) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (1..)
        .map(|k| format!("{base}{k}"))
        .find(|c| !taken.contains(c))
        .unwrap()
}

pub fn genus(curve: &TropicalCurve) -> usize {
    let e = curve.edges().len() as i64;
    let v = curve.vertices().len() as i64;
    (e - v + 1).max(0) as usize
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IncidenceMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub entries: Vec<Vec<i64>>,
}

pub fn incidence_matrix(curve: &TropicalCurve) -> IncidenceMatrix {
    let rows: Vec<String> = curve
        .vertices()
        .iter()
        .filter(|v| curve.degree(v) >= 2)
        .cloned()
        .collect();
    let cols = curve.edges().iter().map(|e| e.id.clone()).collect();
    let entries = rows
        .iter()
        .map(|v| {
            let mut row = vec![0i64; curve.edges().len()];
            for end in curve.ends_at(v) {
                row[end.edge] += match end.side {
                    Side::Head => 1,
                    Side::Tail => -1,
                };
            }
            row
        })
        .collect();
    IncidenceMatrix { rows, cols, entries }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionEntry {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub conditions: Vec<ConditionEntry>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn failures(&self) -> Vec<&ConditionEntry> {
        self.conditions.iter().filter(|c| !c.pass).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            writeln!(
                f,
                "[{}] {} {}: {}",
                if c.pass { "pass" } else { "FAIL" },
                c.id,
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// Checks connectedness (entry 0) and the six defining conditions.
pub fn validate(curve: &TropicalCurve) -> ValidationReport {
    let mut conditions = Vec::new();
    let mut push = |id, name, failures: Vec<String>, ok_detail: String| {
        let pass = failures.is_empty();
        conditions.push(ConditionEntry {
            id,
            name,
            pass,
            detail: if pass { ok_detail } else { failures.join("; ") },
        });
    };

    let comps = curve.components();
    push(
        0,
        "connected",
        if comps == 1 || curve.vertices().is_empty() {
            vec![]
        } else {
            vec![format!("{comps} connected components")]
        },
        "single connected component".into(),
    );

    let mut f1 = Vec::new();
    if curve.vertices().is_empty() {
        f1.push("vertex set is empty".to_string());
    }
    if curve.edges().is_empty() {
        f1.push("edge set is empty".to_string());
    }
    push(
        1,
        "finite-nonempty",
        f1,
        format!("|V| = {}, |E| = {}", curve.vertices().len(), curve.edges().len()),
    );

    let f2: Vec<String> = curve
        .edges()
        .iter()
        .filter_map(|e| match e.length {
            Length::Finite(l) if !(l > 0.0 && l.is_finite()) => {
                Some(format!("edge `{}` has length {l}", e.id))
            }
            _ => None,
        })
        .collect();
    push(2, "lengths", f2, "every length is positive or infinite".into());

    let mut f3 = Vec::new();
    for e in curve.edges() {
        let leafy = curve.degree(&e.tail) == 1 || curve.degree(&e.head) == 1;
        match (e.is_infinite(), leafy) {
            (true, false) => f3.push(format!(
                "infinite edge `{}` is not incident to a degree-1 vertex",
                e.id
            )),
            (false, true) => f3.push(format!(
                "finite edge `{}` is incident to a degree-1 vertex",
                e.id
            )),
            _ => {}
        }
    }
    push(
        3,
        "infinite-iff-leaf",
        f3,
        "infinite edges are exactly the leaf edges".into(),
    );

    let f4: Vec<String> = curve
        .edges()
        .iter()
        .filter(|e| !e.is_infinite())
        .filter(|e| curve.degree(&e.tail) < 2 || curve.degree(&e.head) < 2)
        .map(|e| format!("finite edge `{}` cannot carry the chart [-l, 0]", e.id))
        .collect();
    push(4, "finite-chart", f4, "finite edges charted on [-l, 0]".into());

    let f5: Vec<String> = curve
        .edges()
        .iter()
        .filter(|e| e.is_infinite())
        .filter(|e| curve.degree(&e.tail) != 1 || e.is_loop())
        .map(|e| format!("infinite edge `{}` has no leaf at its tail", e.id))
        .collect();
    push(5, "infinite-chart", f5, "infinite edges charted on [-inf, 0]".into());

    let f6: Vec<String> = curve
        .edges()
        .iter()
        .filter(|e| e.is_infinite() && curve.degree(&e.tail) == 1 && curve.degree(&e.head) == 1)
        .map(|e| format!("doubly-infinite edge `{}` was not split", e.id))
        .collect();
    let split = curve
        .normalizations()
        .iter()
        .filter(|n| matches!(n, Normalization::SplitLine { .. }))
        .count();
    push(
        6,
        "line-chart",
        f6,
        if split > 0 {
            format!("{split} doubly-infinite edge(s) split into two legs")
        } else {
            "no doubly-infinite edge".into()
        },
    );

    let mut notes = Vec::new();
    for e in curve.edges() {
        if e.is_loop() {
            notes.push(format!("edge `{}` is a self-loop at `{}`", e.id, e.tail));
        }
    }
    for n in curve.normalizations() {
        notes.push(match n {
            Normalization::SplitLine {
                original,
                vertex,
                legs,
            } => format!(
                "edge `{original}` split at fresh vertex `{vertex}` into `{}` and `{}`",
                legs[0], legs[1]
            ),
            Normalization::Reoriented { edge } => {
                format!("infinite edge `{edge}` reoriented so its leaf is the tail")
            }
        });
    }

    let pass = conditions.iter().all(|c| c.pass);
    ValidationReport {
        pass,
        conditions,
        notes,
    }
}

/// Per-edge weight description, as found under the curve document's
/// `"kahler"` key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WeightSpec {
    Constant { value: f64 },
    FubiniStudy,
    Expr { formula: String },
}

#[derive(Debug, Clone)]
pub struct CurveDocument {
    pub curve: TropicalCurve,
    /// Weights keyed by canonical edge id.
    pub kahler: BTreeMap<String, WeightSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    vertices: Vec<String>,
    edges: Vec<RawEdge>,
    #[serde(default)]
    kahler: BTreeMap<String, WeightSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdge {
    id: String,
    tail: String,
    head: String,
    length: Value,
}

fn syntax(e: serde_json::Error) -> CurveError {
    CurveError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Parses, canonicalises and validates a curve document.
pub fn parse_document(text: &str) -> Result<CurveDocument, CurveError> {
    let raw: RawDoc = serde_json::from_str(text).map_err(syntax)?;
    let mut edges = Vec::with_capacity(raw.edges.len());
    for e in raw.edges {
        let length = match &e.length {
            Value::String(s) if s == "inf" => Length::Infinite,
            Value::Number(n) => {
                let l = n.as_f64().ok_or_else(|| CurveError::BadLength {
                    edge: e.id.clone(),
                    message: "not representable".into(),
                })?;
                Length::Finite(l)
            }
            other => {
                return Err(CurveError::BadLength {
                    edge: e.id.clone(),
                    message: format!("expected a positive number or \"inf\", got {other}"),
                })
            }
        };
        edges.push(Edge {
            id: e.id,
            tail: e.tail,
            head: e.head,
            length,
        });
    }
    let curve = TropicalCurve::new(raw.vertices, edges)?;
    let report = validate(&curve);
    if !report.pass {
        let msg = report
            .failures()
            .iter()
            .map(|c| format!("condition {} ({}): {}", c.id, c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(CurveError::Invalid(msg));
    }
    let mut kahler = BTreeMap::new();
    for (id, spec) in raw.kahler {
        let split = curve.normalizations().iter().find_map(|n| match n {
            Normalization::SplitLine { original, legs, .. } if *original == id => Some(legs.clone()),
            _ => None,
        });
        match split {
            Some(legs) => {
                for leg in legs {
                    kahler.insert(leg, spec.clone());
                }
            }
            None => {
                if curve.edge(&id).is_none() {
                    return Err(CurveError::Invalid(format!(
                        "kahler weight given for unknown edge `{id}`"
                    )));
                }
                kahler.insert(id, spec);
            }
        }
    }
    Ok(CurveDocument { curve, kahler })
}

pub fn parse_curve(text: &str) -> Result<TropicalCurve, CurveError> {
    parse_document(text).map(|d| d.curve)
}

fn curve_value(curve: &TropicalCurve) -> Value {
    let edges: Vec<Value> = curve
        .edges()
        .iter()
        .map(|e| {
            json!({
                "id": e.id,
                "tail": e.tail,
                "head": e.head,
                "length": match e.length {
                    Length::Finite(l) => json!(l),
                    Length::Infinite => json!("inf"),
                },
            })
        })
        .collect();
    json!({ "vertices": curve.vertices(), "edges": edges })
}

pub fn serialize_curve(curve: &TropicalCurve) -> String {
    serde_json::to_string_pretty(&curve_value(curve)).expect("curve serialises")
}

pub fn serialize_document(doc: &CurveDocument) -> String {
    let mut v = curve_value(&doc.curve);
    if !doc.kahler.is_empty() {
        v["kahler"] = serde_json::to_value(&doc.kahler).expect("weights serialise");
    }
    serde_json::to_string_pretty(&v).expect("document serialises")
}

/// Small curves used as examples and fixtures.
pub mod samples {
    use super::*;

    fn e(id: &str, t: &str, h: &str, l: Length) -> Edge {
        Edge {
            id: id.into(),
            tail: t.into(),
            head: h.into(),
            length: l,
        }
    }

    fn vs(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    pub fn triangle() -> TropicalCurve {
        TropicalCurve::new(
            vs(&["a", "b", "c"]),
            vec![
                e("e1", "a", "b", Length::Finite(1.0)),
                e("e2", "b", "c", Length::Finite(1.0)),
                e("e3", "c", "a", Length::Finite(1.0)),
            ],
        )
        .unwrap()
    }

    pub fn theta() -> TropicalCurve {
        TropicalCurve::new(
            vs(&["u", "v"]),
            vec![
                e("e1", "u", "v", Length::Finite(1.0)),
                e("e2", "u", "v", Length::Finite(2.0)),
                e("e3", "u", "v", Length::Finite(0.5)),
            ],
        )
        .unwrap()
    }

    pub fn tp1() -> TropicalCurve {
        TropicalCurve::new(vs(&["p", "q"]), vec![e("e", "p", "q", Length::Infinite)]).unwrap()
    }

    pub fn star3() -> TropicalCurve {
        TropicalCurve::new(
            vs(&["o", "l1", "l2", "l3"]),
            vec![
                e("a", "l1", "o", Length::Infinite),
                e("b", "l2", "o", Length::Infinite),
                e("c", "o", "l3", Length::Infinite),
            ],
        )
        .unwrap()
    }

    pub fn loop_curve() -> TropicalCurve {
        TropicalCurve::new(vs(&["v"]), vec![e("l", "v", "v", Length::Finite(2.0))]).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::samples::*;
    use super::*;
    use proptest::prelude::*;

    const TRIANGLE: &str = r#"{"vertices":["a","b","c"],"edges":[
        {"id":"e1","tail":"a","head":"b","length":1},
        {"id":"e2","tail":"b","head":"c","length":1},
        {"id":"e3","tail":"c","head":"a","length":1}]}"#;

    #[test]
    fn parse_triangle() {
        let c = parse_curve(TRIANGLE).unwrap();
        assert_eq!(c.vertices().len(), 3);
        assert_eq!(c.edges().len(), 3);
        assert_eq!(genus(&c), 1);
        assert!(validate(&c).pass);
    }

    #[test]
    fn tp1_is_split() {
        let c = parse_curve(
            r#"{"vertices":["p","q"],"edges":[{"id":"e","tail":"p","head":"q","length":"inf"}]}"#,
        )
        .unwrap();
        assert_eq!(c.vertices().len(), 3);
        assert_eq!(c.edges().len(), 2);
        assert!(c.edges().iter().all(|e| e.is_infinite()));
        assert_eq!(genus(&c), 0);
        assert_eq!(c.normalizations().len(), 1);
        let mid = &c.edges()[0].head;
        assert_eq!(c.degree(mid), 2);
        assert!(validate(&c).pass);
    }

    #[test]
    fn finite_edge_at_leaf_rejected() {
        let r = parse_curve(
            r#"{"vertices":["a","b"],"edges":[{"id":"e","tail":"a","head":"b","length":1}]}"#,
        );
        assert!(matches!(r, Err(CurveError::Invalid(_))));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_curve(r#"{"vertices":["a"],"edges":[{"id":"e","tail":"a","head":"z","length":1}]}"#),
            Err(CurveError::UnknownVertex { .. })
        ));
        assert!(matches!(
            parse_curve(r#"{"vertices":["a"],"edges":[{"id":"e","tail":"a","head":"a","length":-1}]}"#),
            Err(CurveError::NonpositiveLength { .. })
        ));
        assert!(matches!(
            parse_curve(r#"{"vertices":["a"],"edges":[{"id":"e","tail":"a","head":"a","length":0}]}"#),
            Err(CurveError::NonpositiveLength { .. })
        ));
        match parse_curve("{\"vertices\": [\"a\",\n  ]}") {
            Err(CurveError::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn disconnected_fails_connected() {
        let mut t = TRIANGLE.replace("\"a\",\"b\",\"c\"]", "\"a\",\"b\",\"c\",\"x\",\"y\",\"z\"]");
        t = t.replace(
            "]}",
            r#",{"id":"f1","tail":"x","head":"y","length":1},
               {"id":"f2","tail":"y","head":"z","length":1},
               {"id":"f3","tail":"z","head":"x","length":1}]}"#,
        );
        let doc: RawDoc = serde_json::from_str(&t).unwrap();
        let edges = doc
            .edges
            .into_iter()
            .map(|e| Edge {
                id: e.id,
                tail: e.tail,
                head: e.head,
                length: Length::Finite(1.0),
            })
            .collect();
        let c = TropicalCurve::new(doc.vertices, edges).unwrap();
        let r = validate(&c);
        assert!(!r.pass);
        assert_eq!(r.failures().len(), 1);
        assert_eq!(r.failures()[0].name, "connected");
    }

    #[test]
    fn star_is_valid_and_canonical() {
        let c = star3();
        assert!(validate(&c).pass);
        for e in c.edges() {
            assert_eq!(c.degree(&e.tail), 1);
            assert_eq!(e.head, "o");
        }
        assert_eq!(genus(&c), 0);
    }

    #[test]
    fn genus_examples() {
        assert_eq!(genus(&triangle()), 1);
        assert_eq!(genus(&theta()), 2);
        assert_eq!(genus(&tp1()), 0);
        assert_eq!(genus(&loop_curve()), 1);
    }

    #[test]
    fn incidence_examples() {
        let m = incidence_matrix(&theta());
        assert_eq!(m.entries, vec![vec![-1, -1, -1], vec![1, 1, 1]]);
        assert_eq!(m.rows, vec!["u", "v"]);
        let l = incidence_matrix(&loop_curve());
        assert_eq!(l.entries, vec![vec![0]]);
        let p = TropicalCurve::new(
            vec!["a".into(), "b".into()],
            vec![
                Edge {
                    id: "e".into(),
                    tail: "a".into(),
                    head: "b".into(),
                    length: Length::Finite(1.0),
                },
                Edge {
                    id: "f".into(),
                    tail: "b".into(),
                    head: "a".into(),
                    length: Length::Finite(1.0),
                },
            ],
        )
        .unwrap();
        let m = incidence_matrix(&p);
        assert_eq!(m.entries, vec![vec![-1, 1], vec![1, -1]]);
    }

    #[test]
    fn self_loop_flagged() {
        let r = validate(&loop_curve());
        assert!(r.pass);
        assert!(r.notes.iter().any(|n| n.contains("self-loop")));
    }

    #[test]
    fn round_trip_serialization() {
        for c in [triangle(), theta(), tp1(), star3(), loop_curve()] {
            let text = serialize_curve(&c);
            assert_eq!(parse_curve(&text).unwrap(), c);
        }
    }

    #[test]
    fn kahler_key_follows_split() {
        let d = parse_document(
            r#"{"vertices":["p","q"],"edges":[{"id":"e","tail":"p","head":"q","length":"inf"}],
                "kahler":{"e":{"kind":"fubini-study"}}}"#,
        )
        .unwrap();
        assert_eq!(d.kahler.len(), 2);
        let again = parse_document(&serialize_document(&d)).unwrap();
        assert_eq!(again.curve, d.curve);
        assert_eq!(again.kahler, d.kahler);
    }

    fn arb_graph() -> impl Strategy<Value = TropicalCurve> {
        (2usize..6, proptest::collection::vec((0usize..6, 0usize..6, 1u32..5), 1..9)).prop_filter_map(
            "needs connected, leafless",
            |(n, raw)| {
                let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
                let mut edges: Vec<Edge> = raw
                    .iter()
                    .enumerate()
                    .map(|(k, &(a, b, l))| Edge {
                        id: format!("e{k}"),
                        tail: format!("v{}", a % n),
                        head: format!("v{}", b % n),
                        length: Length::Finite(l as f64 / 2.0),
                    })
                    .collect();
                // a spanning cycle keeps every vertex of degree >= 2
                for i in 0..n {
                    edges.push(Edge {
                        id: format!("c{i}"),
                        tail: format!("v{i}"),
                        head: format!("v{}", (i + 1) % n),
                        length: Length::Finite(1.0),
                    });
                }
                let c = TropicalCurve::new(vertices, edges).ok()?;
                validate(&c).pass.then_some(c)
            },
        )
    }

    proptest! {
        #[test]
        fn genus_invariant_under_reversal(c in arb_graph(), k in 0usize..16) {
            let id = c.edges()[k % c.edges().len()].id.clone();
            let r = c.reversed_edge(&id).unwrap();
            prop_assert!(validate(&r).pass);
            prop_assert_eq!(genus(&r), genus(&c));
            prop_assert_eq!(
                crate::rational::nullity_i64(&incidence_matrix(&r).entries, c.edges().len()),
                crate::rational::nullity_i64(&incidence_matrix(&c).entries, c.edges().len())
            );
        }

        #[test]
        fn genus_is_incidence_nullity(c in arb_graph()) {
            let m = incidence_matrix(&c);
            prop_assert_eq!(crate::rational::nullity_i64(&m.entries, c.edges().len()), genus(&c));
        }

        #[test]
        fn serialization_round_trip(c in arb_graph()) {
            prop_assert_eq!(parse_curve(&serialize_curve(&c)).unwrap(), c);
        }
    }
}
