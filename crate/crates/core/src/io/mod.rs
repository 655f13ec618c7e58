//! The JSON system document and CSV outputs.

mod csv;
mod json;

pub use csv::{read_points_csv, write_gaps_csv, write_points_csv, write_pressure_csv};
pub use json::{verdict_json, witness_json};

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::code_tree::{
    build_code_tree, deterministic_tree, sample_graph_sequence, AffineMap, CodeTreeRealization, Edge, GraphLabel,
    GraphSystem, IfsFamily, TreeError,
};
use crate::exterior::MAX_DIM;
use crate::fs::LinearFamily;
use crate::sampling::stream_rng;
use crate::singular::SingularSpectrum;

/// Serialize a matrix as a list of rows.
pub fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, serializer: S) -> Result<S::Ok, S::Error> {
    let mut seq = serializer.serialize_seq(Some(m.nrows()))?;
    for r in 0..m.nrows() {
        let row: Vec<f64> = m.row(r).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("JSON error at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SpecError {
    SpecError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

/// One map of a family: row-major linear part and its translation class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
    pub translation_class: usize,
}

impl MapSpec {
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.t.len();
        DMatrix::from_fn(d, d, |i, j| self.t[i][j])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub label: String,
    pub maps: Vec<MapSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: usize,
    pub to: usize,
    pub map_index_into_family: usize,
}

/// One labelled graph. Its edges draw their maps from `family` (a family
/// label), or from the family at the same position when `family` is absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    pub prob: f64,
    pub edges: Vec<EdgeSpec>,
}

/// Vertices are numbered `0..V`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    #[serde(rename = "V")]
    pub v: usize,
    pub v0: usize,
    pub labels: Vec<LabelSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    /// Largest allowed Euclidean norm of a translation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation_bound: Option<f64>,
}

/// The system document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub d: usize,
    pub families: Vec<FamilySpec>,
    /// Translation vector per class; drawn uniformly from `[0, 1]^d` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translations: Option<BTreeMap<usize, Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    pub bounds: Bounds,
}

/// Parse and validate a system document.
pub fn parse_system(text: &str) -> Result<SystemSpec, SpecError> {
    let spec: SystemSpec = serde_json::from_str(text).map_err(|e| SpecError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    spec.validate()?;
    Ok(spec)
}

pub fn parse_system_file(path: &Path) -> Result<SystemSpec, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|e| SpecError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_system(&text)
}

/// Pretty JSON; `parse_system(&serialize_system(s)) == s`.
pub fn serialize_system(spec: &SystemSpec) -> String {
    serde_json::to_string_pretty(spec).expect("system documents always serialize")
}

const BOUND_SLACK: f64 = 1e-12;

impl SystemSpec {
    pub fn validate(&self) -> Result<(), SpecError> {
        let d = self.d;
        if d == 0 || d > MAX_DIM {
            return Err(invalid("d", format!("must be in 1..={MAX_DIM}, got {d}")));
        }
        let b = &self.bounds;
        if !(b.sigma_lo > 0.0 && b.sigma_lo <= b.sigma_hi && b.sigma_hi < 1.0) {
            return Err(invalid(
                "bounds",
                format!(
                    "need 0 < sigma_lo <= sigma_hi < 1, got sigma_lo = {}, sigma_hi = {}",
                    b.sigma_lo, b.sigma_hi
                ),
            ));
        }
        if let Some(tb) = b.translation_bound {
            if !(tb > 0.0) {
                return Err(invalid("bounds.translation_bound", "must be positive"));
            }
        }
        if self.families.is_empty() {
            return Err(invalid("families", "at least one family is required"));
        }
        let mut labels = Vec::new();
        for (fi, fam) in self.families.iter().enumerate() {
            let base = format!("families[{fi}]");
            if labels.contains(&fam.label) {
                return Err(invalid(format!("{base}.label"), format!("duplicate label '{}'", fam.label)));
            }
            labels.push(fam.label.clone());
            if fam.maps.is_empty() {
                return Err(invalid(format!("{base}.maps"), "a family needs at least one map"));
            }
            let mut classes = Vec::new();
            for (mi, map) in fam.maps.iter().enumerate() {
                let field = format!("{base}.maps[{mi}]");
                self.validate_map(&field, map)?;
                if classes.contains(&map.translation_class) {
                    return Err(invalid(
                        format!("{field}.translation_class"),
                        format!("class {} repeats within the family", map.translation_class),
                    ));
                }
                classes.push(map.translation_class);
            }
        }
        if let Some(tr) = &self.translations {
            for class in self.classes() {
                if !tr.contains_key(&class) {
                    return Err(invalid("translations", format!("no vector for class {class}")));
                }
            }
            for (class, a) in tr {
                self.validate_translation(&format!("translations.{class}"), a)?;
            }
        }
        if let Some(g) = &self.graph {
            self.validate_graph(g)?;
        }
        Ok(())
    }

    fn validate_map(&self, field: &str, map: &MapSpec) -> Result<(), SpecError> {
        let d = self.d;
        if map.t.len() != d || map.t.iter().any(|row| row.len() != d) {
            return Err(invalid(format!("{field}.T"), format!("must be a {d}x{d} array of rows")));
        }
        if map.t.iter().flatten().any(|x| !x.is_finite()) {
            return Err(invalid(format!("{field}.T"), "entries must be finite"));
        }
        let spec = SingularSpectrum::of_unchecked(&map.matrix());
        let (lo, hi) = (spec.smallest(), spec.largest());
        let b = &self.bounds;
        if lo < b.sigma_lo * (1.0 - BOUND_SLACK) || hi > b.sigma_hi * (1.0 + BOUND_SLACK) {
            return Err(invalid(
                format!("{field}.T"),
                format!(
                    "singular values [{lo}, {hi}] outside the declared bounds [{}, {}]",
                    b.sigma_lo, b.sigma_hi
                ),
            ));
        }
        Ok(())
    }

    fn validate_translation(&self, field: &str, a: &[f64]) -> Result<(), SpecError> {
        if a.len() != self.d {
            return Err(invalid(field, format!("expected {} entries, got {}", self.d, a.len())));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(invalid(field, "entries must be finite"));
        }
        if let Some(tb) = self.bounds.translation_bound {
            let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > tb {
                return Err(invalid(field, format!("norm {norm} exceeds translation_bound {tb}")));
            }
        }
        Ok(())
    }

    fn validate_graph(&self, g: &GraphSpec) -> Result<(), SpecError> {
        if g.v == 0 {
            return Err(invalid("graph.V", "need at least one vertex"));
        }
        if g.v0 >= g.v {
            return Err(invalid("graph.v0", format!("{} is not a vertex (V = {})", g.v0, g.v)));
        }
        if g.labels.is_empty() {
            return Err(invalid("graph.labels", "need at least one graph"));
        }
        let mut sum = 0.0;
        for (li, label) in g.labels.iter().enumerate() {
            let base = format!("graph.labels[{li}]");
            if !(label.prob >= 0.0 && label.prob <= 1.0) {
                return Err(invalid(format!("{base}.prob"), format!("{} is not a probability", label.prob)));
            }
            sum += label.prob;
            let fam = self.label_family(li).map_err(|m| invalid(format!("{base}.family"), m))?;
            for (ei, e) in label.edges.iter().enumerate() {
                let field = format!("{base}.edges[{ei}]");
                if e.from >= g.v || e.to >= g.v {
                    return Err(invalid(field, format!("vertex out of range 0..{}", g.v)));
                }
                if e.map_index_into_family >= fam.maps.len() {
                    return Err(invalid(
                        format!("{field}.map_index_into_family"),
                        format!("family '{}' has {} maps", fam.label, fam.maps.len()),
                    ));
                }
            }
            if label.prob > 0.0 {
                for v in 0..g.v {
                    if !label.edges.iter().any(|e| e.from == v) {
                        return Err(invalid(
                            format!("{base}.edges"),
                            format!("vertex {v} has no outgoing edge in a positive-probability graph"),
                        ));
                    }
                }
            }
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(
                "graph.labels",
                format!("probabilities sum to {sum}, they must sum to 1 within 1e-9"),
            ));
        }
        let neck: f64 = g
            .labels
            .iter()
            .filter(|l| l.edges.iter().all(|e| e.to == g.v0))
            .map(|l| l.prob)
            .sum();
        if !(neck > 0.0) {
            return Err(invalid(
                "graph.labels",
                format!("no positive-probability graph sends every edge to v0 = {}", g.v0),
            ));
        }
        Ok(())
    }

    fn label_family(&self, label: usize) -> Result<&FamilySpec, String> {
        let g = self.graph.as_ref().ok_or("no graph")?;
        match &g.labels[label].family {
            Some(name) => self
                .families
                .iter()
                .find(|f| &f.label == name)
                .ok_or_else(|| format!("unknown family '{name}'")),
            None => self
                .families
                .get(label)
                .ok_or_else(|| format!("no family at position {label}; name one with \"family\"")),
        }
    }

    /// All translation classes, ascending.
    pub fn classes(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self
            .families
            .iter()
            .flat_map(|f| f.maps.iter().map(|m| m.translation_class))
            .collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Index of a family by label or by position.
    pub fn family_index(&self, key: &str) -> Option<usize> {
        self.families
            .iter()
            .position(|f| f.label == key)
            .or_else(|| key.parse::<usize>().ok().filter(|&i| i < self.families.len()))
    }

    /// Declared translations, or for each class ascending a uniform draw from
    /// `[0, 1]^d` on stream `class` of `seed`.
    pub fn translation_assignment(&self, seed: u64) -> BTreeMap<usize, DVector<f64>> {
        match &self.translations {
            Some(tr) => tr.iter().map(|(c, a)| (*c, DVector::from_vec(a.clone()))).collect(),
            None => self
                .classes()
                .into_iter()
                .map(|c| {
                    let mut rng = stream_rng(seed, c as u64);
                    (c, DVector::from_fn(self.d, |_, _| rng.random::<f64>()))
                })
                .collect(),
        }
    }

    pub fn linear_family(&self, family: usize) -> Result<LinearFamily, SpecError> {
        let fam = self
            .families
            .get(family)
            .ok_or_else(|| invalid("families", format!("no family {family}")))?;
        LinearFamily::new(fam.maps.iter().map(MapSpec::matrix).collect())
            .map_err(|e| invalid(format!("families[{family}]"), e.to_string()))
    }

    fn affine(&self, map: &MapSpec, assignment: &BTreeMap<usize, DVector<f64>>) -> Result<AffineMap, SpecError> {
        let a = assignment
            .get(&map.translation_class)
            .ok_or_else(|| invalid("translations", format!("no vector for class {}", map.translation_class)))?;
        Ok(AffineMap::new(map.matrix(), map.translation_class, a.clone())?)
    }

    pub fn ifs_family(&self, family: usize, assignment: &BTreeMap<usize, DVector<f64>>) -> Result<IfsFamily, SpecError> {
        let fam = &self.families[family];
        let maps = fam
            .maps
            .iter()
            .map(|m| self.affine(m, assignment))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IfsFamily::new(fam.label.clone(), maps)?)
    }

    pub fn graph_system(&self, assignment: &BTreeMap<usize, DVector<f64>>) -> Result<Option<GraphSystem>, SpecError> {
        let Some(g) = &self.graph else { return Ok(None) };
        let mut labels = Vec::with_capacity(g.labels.len());
        for (li, l) in g.labels.iter().enumerate() {
            let fam = self.label_family(li).map_err(|m| invalid(format!("graph.labels[{li}].family"), m))?;
            let edges = l
                .edges
                .iter()
                .map(|e| {
                    Ok(Edge {
                        from: e.from,
                        to: e.to,
                        map: self.affine(&fam.maps[e.map_index_into_family], assignment)?,
                    })
                })
                .collect::<Result<Vec<_>, SpecError>>()?;
            labels.push(GraphLabel {
                name: l.name.clone().unwrap_or_else(|| format!("g{li}")),
                edges,
            });
        }
        let probs = g.labels.iter().map(|l| l.prob).collect();
        Ok(Some(GraphSystem::new(g.v, g.v0, labels, probs)?))
    }

    /// The code tree of the document to depth `depth`: the graph-directed
    /// tree from `v0` driven by a label sequence drawn with `seed`, or the
    /// constant tree of the first family when there is no graph.
    pub fn build_tree(&self, depth: usize, seed: u64, thinning: usize) -> Result<CodeTreeRealization, SpecError> {
        let assignment = self.translation_assignment(seed);
        match self.graph_system(&assignment)? {
            Some(gs) => {
                let g = sample_graph_sequence(&gs, seed, depth);
                Ok(build_code_tree(&gs, &g, gs.v0(), depth, thinning)?)
            }
            None => Ok(deterministic_tree(self.ifs_family(0, &assignment)?, depth)?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "d": 2,
        "families": [{"label": "F", "maps": [
            {"T": [[0.4, 0.0], [0.0, 0.2]], "translation_class": 1},
            {"T": [[0.3, 0.1], [0.0, 0.3]], "translation_class": 2}
        ]}],
        "bounds": {"sigma_lo": 0.1, "sigma_hi": 0.45}
    }"#;

    fn graph_doc(p0: f64, p1: f64) -> String {
        format!(
            r#"{{
            "d": 1,
            "families": [
                {{"label": "N", "maps": [{{"T": [[0.3]], "translation_class": 1}}, {{"T": [[0.2]], "translation_class": 2}}]}},
                {{"label": "S", "maps": [{{"T": [[0.25]], "translation_class": 3}}, {{"T": [[0.4]], "translation_class": 4}}]}}
            ],
            "translations": {{"1": [0.0], "2": [0.5], "3": [0.1], "4": [0.6]}},
            "graph": {{"V": 2, "v0": 0, "labels": [
                {{"prob": {p0}, "edges": [{{"from": 0, "to": 0, "map_index_into_family": 0}}, {{"from": 1, "to": 0, "map_index_into_family": 1}}]}},
                {{"prob": {p1}, "edges": [{{"from": 0, "to": 1, "map_index_into_family": 0}}, {{"from": 1, "to": 0, "map_index_into_family": 1}}]}}
            ]}},
            "bounds": {{"sigma_lo": 0.1, "sigma_hi": 0.45}}
        }}"#
        )
    }

    #[test]
    fn minimal_document() {
        let spec = parse_system(MINIMAL).unwrap();
        assert_eq!(spec.d, 2);
        assert_eq!(spec.families[0].maps.len(), 2);
        assert_eq!(spec.classes(), vec![1, 2]);
        assert_eq!(spec.family_index("F"), Some(0));
        assert_eq!(spec.family_index("0"), Some(0));
        assert_eq!(spec.family_index("G"), None);
        let tree = spec.build_tree(3, 1, 1).unwrap();
        assert_eq!(tree.necks(), &[1, 2, 3]);
        assert_eq!(parse_system(&serialize_system(&spec)).unwrap(), spec);
    }

    #[test]
    fn probability_sum_is_checked() {
        parse_system(&graph_doc(0.5, 0.5)).unwrap();
        let err = parse_system(&graph_doc(0.5, 0.6)).unwrap_err();
        assert!(err.to_string().contains("sum to 1"), "{err}");
        assert!(matches!(err, SpecError::Invalid { ref field, .. } if field == "graph.labels"));
    }

    #[test]
    fn graph_document_builds_random_tree() {
        let spec = parse_system(&graph_doc(0.3, 0.7)).unwrap();
        let a = spec.build_tree(20, 5, 1).unwrap();
        let b = spec.build_tree(20, 5, 1).unwrap();
        assert_eq!(a.necks(), b.necks());
        assert_eq!(a.level_widths(), b.level_widths());
        assert!(a.verify_necks());
        assert_eq!(parse_system(&serialize_system(&spec)).unwrap(), spec);
    }

    #[test]
    fn field_precise_errors() {
        let bad_shape = MINIMAL.replace("[[0.3, 0.1], [0.0, 0.3]]", "[[0.3, 0.1]]");
        let err = parse_system(&bad_shape).unwrap_err();
        assert_eq!(
            err,
            invalid("families[0].maps[1].T", "must be a 2x2 array of rows")
        );

        let too_big = MINIMAL.replace("0.4, 0.0", "0.6, 0.0");
        assert!(matches!(
            parse_system(&too_big).unwrap_err(),
            SpecError::Invalid { field, .. } if field == "families[0].maps[0].T"
        ));

        let dup = MINIMAL.replace("\"translation_class\": 2", "\"translation_class\": 1");
        assert!(parse_system(&dup).unwrap_err().to_string().contains("repeats"));

        let syntax = parse_system("{\n  \"d\": 2,\n  oops }").unwrap_err();
        assert!(matches!(syntax, SpecError::Json { line: 3, .. }), "{syntax:?}");

        let unknown = MINIMAL.replace("\"d\": 2,", "\"d\": 2, \"extra\": 1,");
        assert!(matches!(parse_system(&unknown).unwrap_err(), SpecError::Json { .. }));

        let missing = MINIMAL.replace(
            "\"bounds\"",
            "\"translations\": {\"1\": [0.0, 0.0]}, \"bounds\"",
        );
        assert!(parse_system(&missing).unwrap_err().to_string().contains("class 2"));
    }

    #[test]
    fn missing_neck_graph_is_rejected() {
        let doc = graph_doc(0.5, 0.5).replace(
            r#"{"from": 0, "to": 0, "map_index_into_family": 0}"#,
            r#"{"from": 0, "to": 1, "map_index_into_family": 0}"#,
        );
        let err = parse_system(&doc).unwrap_err();
        assert!(err.to_string().contains("v0"), "{err}");
    }

    #[test]
    fn random_translations_are_seeded() {
        let spec = parse_system(MINIMAL).unwrap();
        let a = spec.translation_assignment(9);
        assert_eq!(a, spec.translation_assignment(9));
        assert_ne!(a, spec.translation_assignment(10));
        assert!(a.values().all(|v| v.iter().all(|x| (0.0..1.0).contains(x))));
    }
}
