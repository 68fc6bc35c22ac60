//! The JSON model file: chart, structure, map, declared frames and expected
//! facts, all as expression strings.
//!
//! ```json
//! {
//!   "name": "example",
//!   "coords": ["x1", "y1", "z"],
//!   "metric": [["1/4 - y1*y1/4", "0", "y1/4"], ...],
//!   "structure": {"epsilon": -1, "phi": [[...]], "xi": [...], "eta": [...]},
//!   "map": {"target": {"coords": ["u"], "metric": [["1"]]}, "components": ["x1 + y1"]},
//!   "declared_frames": {"vertical": [{"name": "V1", "components": [...]}], "horizontal": []},
//!   "expected_facts": {"xi_position": "vertical"}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::antiinv::XiPosition;
use crate::contact::{ContactError, ContactStructure};
use crate::geometry::{Chart, GeometryError, OneForm, Tensor11Field, VectorField};
use crate::linalg::Signature;
use crate::submersion::{DeclaredFrames, SmoothMap, SubmersionError};

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("{path}: line {line}, column {column}: {msg}")]
    Json {
        path: String,
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{what}: expected {expected} rows of {expected} entries")]
    Shape { what: String, expected: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Submersion(#[from] SubmersionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub coords: Vec<String>,
    pub metric: Vec<Vec<String>>,
    pub structure: StructureDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map: Option<MapDoc>,
    #[serde(default)]
    pub declared_frames: FramesDoc,
    #[serde(default)]
    pub expected_facts: ExpectedFacts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDoc {
    pub epsilon: f64,
    /// Row-major, output index first.
    pub phi: Vec<Vec<String>>,
    pub xi: Vec<String>,
    pub eta: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetDoc {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub name: String,
    pub coords: Vec<String>,
    pub metric: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapDoc {
    pub target: TargetDoc,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedField {
    pub name: String,
    pub components: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesDoc {
    #[serde(default)]
    pub vertical: Vec<NamedField>,
    #[serde(default)]
    pub horizontal: Vec<NamedField>,
}

/// `φ(source) = coefficient · target`, both named declared fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiImage {
    pub source: String,
    pub target: String,
    pub coefficient: f64,
}

/// Facts the model is expected to satisfy; every field is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedFacts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sasakian: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_submersion: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_position: Option<XiPosition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_signature: Option<Signature>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anti_invariant: Option<bool>,
    /// `φ(ker F_*) = (ker F_*)^⊥`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_ker_is_horizontal: Option<bool>,
    /// `(ker F_*)^⊥ = φ(ker F_*) ⊕ span{ξ}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizontal_is_phi_ker_plus_xi: Option<bool>,
    /// Names of declared horizontal fields spanning μ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub phi_images: Vec<PhiImage>,
}

/// A document with every expression parsed and every shape checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub description: String,
    pub structure: ContactStructure,
    pub map: Option<SmoothMap>,
    pub declared: DeclaredFrames,
    pub vertical_names: Vec<String>,
    pub horizontal_names: Vec<String>,
    pub expected: ExpectedFacts,
}

impl Model {
    pub fn chart(&self) -> &Chart {
        &self.structure.chart
    }

    /// Declared field by name, vertical first.
    pub fn field(&self, name: &str) -> Option<&VectorField> {
        let v = self.vertical_names.iter().position(|n| n == name);
        let h = self.horizontal_names.iter().position(|n| n == name);
        match (v, h) {
            (Some(i), _) => Some(&self.declared.vertical[i]),
            (None, Some(i)) => Some(&self.declared.horizontal[i]),
            _ => None,
        }
    }
}

fn flatten(rows: &[Vec<String>], n: usize, what: &str) -> Result<Vec<String>, DocumentError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(DocumentError::Shape {
            what: what.into(),
            expected: n,
        });
    }
    Ok(rows.concat())
}

impl Document {
    pub fn from_json(text: &str, path: &str) -> Result<Document, DocumentError> {
        serde_json::from_str(text).map_err(|e| {
            let full = e.to_string();
            let suffix = format!(" at line {} column {}", e.line(), e.column());
            DocumentError::Json {
                path: path.into(),
                line: e.line(),
                column: e.column(),
                msg: full.strip_suffix(&suffix).unwrap_or(&full).to_string(),
            }
        })
    }

    pub fn read(path: &Path) -> Result<Document, DocumentError> {
        let p = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| DocumentError::Io {
            path: p.clone(),
            source,
        })?;
        Document::from_json(&text, &p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    pub fn build(&self) -> Result<Model, DocumentError> {
        let n = self.coords.len();
        let chart = Chart::new(&self.name, &self.coords, &flatten(&self.metric, n, "metric")?)?;
        let coords = chart.coords().clone();
        let s = &self.structure;
        let phi = Tensor11Field::parse(&flatten(&s.phi, n, "structure.phi")?, &coords)?;
        let xi = VectorField::parse(&s.xi, &coords)?;
        let eta = OneForm::parse(&s.eta, &coords)?;
        let structure = ContactStructure::new(chart.clone(), s.epsilon, phi, xi, eta)?;
        let map = match &self.map {
            None => None,
            Some(m) => {
                let k = m.target.coords.len();
                let name = if m.target.name.is_empty() {
                    format!("{}-target", self.name)
                } else {
                    m.target.name.clone()
                };
                let target = Chart::new(
                    name,
                    &m.target.coords,
                    &flatten(&m.target.metric, k, "map.target.metric")?,
                )?;
                Some(SmoothMap::new(chart.clone(), target, &m.components)?)
            }
        };
        let parse_fields = |fs: &[NamedField]| -> Result<Vec<VectorField>, DocumentError> {
            fs.iter()
                .map(|f| VectorField::parse(&f.components, &coords).map_err(DocumentError::from))
                .collect()
        };
        let declared = DeclaredFrames {
            vertical: parse_fields(&self.declared_frames.vertical)?,
            horizontal: parse_fields(&self.declared_frames.horizontal)?,
        };
        Ok(Model {
            name: self.name.clone(),
            description: self.description.clone(),
            structure,
            map,
            declared,
            vertical_names: self.declared_frames.vertical.iter().map(|f| f.name.clone()).collect(),
            horizontal_names: self.declared_frames.horizontal.iter().map(|f| f.name.clone()).collect(),
            expected: self.expected_facts.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
  "name": "flat",
  "coords": ["x", "y", "z"],
  "metric": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "-1"]],
  "structure": {
    "epsilon": -1,
    "phi": [["0", "-1", "0"], ["1", "0", "0"], ["0", "0", "0"]],
    "xi": ["0", "0", "1"],
    "eta": ["0", "0", "1"]
  },
  "map": {"target": {"coords": ["u", "v"], "metric": [["1", "0"], ["0", "1"]]}, "components": ["x", "y"]},
  "declared_frames": {"vertical": [{"name": "xi", "components": ["0", "0", "1"]}]},
  "expected_facts": {"xi_position": "vertical"}
}"#;

    #[test]
    fn builds_and_round_trips() {
        let d = Document::from_json(SMALL, "small.json").unwrap();
        let m = d.build().unwrap();
        assert_eq!(m.chart().dim(), 3);
        assert_eq!(m.expected.xi_position, Some(XiPosition::Vertical));
        assert!(m.field("xi").is_some());
        let again = Document::from_json(&d.to_json(), "again").unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn json_errors_carry_line_and_column() {
        let broken = SMALL.replace("\"coords\": [\"x\"", "\"coords\": [x\"");
        match Document::from_json(&broken, "b.json") {
            Err(DocumentError::Json { line, column, .. }) => {
                assert_eq!(line, 3);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn expression_errors_name_the_entry() {
        let broken = SMALL.replace("\"xi\": [\"0\", \"0\", \"1\"]", "\"xi\": [\"0\", \"0\", \"1 +\"]");
        let err = Document::from_json(&broken, "b").unwrap().build().unwrap_err();
        assert!(err.to_string().contains("vector field[2]"), "{err}");
    }

    #[test]
    fn bad_metric_shape() {
        let broken = SMALL.replace("[\"0\", \"0\", \"-1\"]]", "[\"0\", \"-1\"]]");
        let err = Document::from_json(&broken, "b").unwrap().build().unwrap_err();
        assert!(matches!(err, DocumentError::Shape { .. }));
    }
}
