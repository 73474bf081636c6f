//! Ordered element sequences with loss bookkeeping and a JSON form.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::elements::ElementOp;
use crate::error::{Error, Result};
use crate::fock::PhotonState;

pub const SCHEMA_VERSION: u32 = 1;

/// Norm changes smaller than this are treated as round-off.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Circuit {
    name: String,
    elements: Vec<ElementOp>,
    loss_points: BTreeSet<usize>,
}

/// Result of running a circuit.
#[derive(Clone, Debug)]
pub struct Evolution {
    pub state: PhotonState,
    /// Initial minus final squared norm.
    pub discarded: f64,
}

impl Circuit {
    pub fn new(name: impl Into<String>) -> Self {
        Circuit {
            name: name.into(),
            ..Circuit::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Appends an element. Elements that can change the norm are recorded
    /// as loss points automatically.
    pub fn push(&mut self, op: ElementOp) -> &mut Self {
        if op.may_lose_norm() {
            self.loss_points.insert(self.elements.len());
        }
        self.elements.push(op);
        self
    }

    pub fn extend<I: IntoIterator<Item = ElementOp>>(&mut self, ops: I) -> &mut Self {
        for op in ops {
            self.push(op);
        }
        self
    }

    /// Appends an element and marks it as a loss point regardless of kind.
    pub fn push_loss(&mut self, op: ElementOp) -> &mut Self {
        self.loss_points.insert(self.elements.len());
        self.elements.push(op);
        self
    }

    pub fn elements(&self) -> &[ElementOp] {
        &self.elements
    }

    pub fn loss_points(&self) -> impl Iterator<Item = usize> + '_ {
        self.loss_points.iter().copied()
    }

    pub fn is_loss_point(&self, index: usize) -> bool {
        self.loss_points.contains(&index)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Runs the elements in order.
    pub fn apply(&self, s: &PhotonState) -> Result<Evolution> {
        self.apply_traced(s).map(|(evo, _)| evo)
    }

    /// Like [`Circuit::apply`] but also returns the squared norm after each
    /// element. A norm change at an undeclared element is a contract error.
    pub fn apply_traced(&self, s: &PhotonState) -> Result<(Evolution, Vec<f64>)> {
        s.check_mode_capacity()?;
        let initial = s.squared_norm();
        let mut state = s.clone();
        let mut norm = initial;
        let mut trace = Vec::with_capacity(self.elements.len());
        for (index, op) in self.elements.iter().enumerate() {
            let wrap = |e: Error| Error::Element {
                index,
                source: Box::new(e),
            };
            state = op.apply(&state).map_err(wrap)?;
            state.check_mode_capacity().map_err(wrap)?;
            let next = state.squared_norm();
            if !self.is_loss_point(index) && (next - norm).abs() > NORM_TOL * norm.max(1.0) {
                return Err(wrap(Error::Contract(format!(
                    "{} changed the squared norm from {norm} to {next} without a declared loss",
                    op.kind_name()
                ))));
            }
            norm = next;
            trace.push(norm);
        }
        Ok((
            Evolution {
                discarded: initial - norm,
                state,
            },
            trace,
        ))
    }

    pub fn to_json(&self) -> String {
        let doc = CircuitDoc {
            schema_version: SCHEMA_VERSION,
            name: self.name.clone(),
            elements: self.elements.clone(),
            loss_points: self.loss_points.iter().copied().collect(),
        };
        serde_json::to_string_pretty(&doc).expect("circuit documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let doc: CircuitDoc = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse {
                path: "schema_version".into(),
                message: format!(
                    "unsupported schema version {} (expected {SCHEMA_VERSION})",
                    doc.schema_version
                ),
            });
        }
        let mut circuit = Circuit::new(doc.name);
        for (i, op) in doc.elements.into_iter().enumerate() {
            op.validate().map_err(|e| Error::Parse {
                path: format!("elements[{i}]"),
                message: e.to_string(),
            })?;
            circuit.push(op);
        }
        for (k, &i) in doc.loss_points.iter().enumerate() {
            if i >= circuit.len() {
                return Err(Error::Parse {
                    path: format!("loss_points[{k}]"),
                    message: format!("index {i} is past the last element"),
                });
            }
            circuit.loss_points.insert(i);
        }
        Ok(circuit)
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitDoc {
    #[serde(default = "default_schema")]
    schema_version: u32,
    #[serde(default)]
    name: String,
    elements: Vec<ElementOp>,
    #[serde(default)]
    loss_points: Vec<usize>,
}
