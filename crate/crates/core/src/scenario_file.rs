//! JSON scenario documents.
//!
//! ```json
//! {
//!   "name": "stern-gerlach",
//!   "alphabet": { "positions": [["+", "-"], ["B", "G", "R"]], "tail": null },
//!   "initial_state": { "+,B": [1.0, 0.0] },
//!   "qualia_subspaces": [ { "qualia": "Blue", "labels": ["+,B", "-,B"] } ],
//!   "extra_vectors": [ { "qualia": "Phi", "amplitudes": { "-,B": [1.0, 0.0] } } ],
//!   "schedule": [
//!     { "op": "unitary", "domain": ["+,B", "-,B"], "matrix": [[[1,0],[0,0]], [[0,0],[1,0]]] },
//!     { "op": "record", "position": 0, "rules": { "U": "I", "D": "A" } },
//!     { "op": "enforce" },
//!     { "op": "observe", "tag": "lamp" }
//!   ],
//!   "tolerances": { "norm": 1e-10, "unitary": 1e-10, "class": 1e-9, "null": 1e-24 },
//!   "metadata": { "source": "hand-written" }
//! }
//! ```
//!
//! Amplitudes are `[re, im]` pairs; labels use the comma-separated token form.
//! Unknown keys are rejected everywhere.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::consciousness::{AdmissibleSpec, QualiaLabel};
use crate::dynamics::{Scenario, Step};
use crate::error::SimError;
use crate::statespace::{Alphabet, BasisLabel, RecordCoupling, StateVector, UnitaryStep};
use crate::tolerances::Tolerances;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },

    #[error("line {line}, column {column}, field `{field}`: {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },

    #[error("{field}: {source}")]
    Invalid {
        field: String,
        #[source]
        source: SimError,
    },
}

type Amplitude = [f64; 2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphabetDoc {
    pub positions: Vec<Vec<String>>,
    #[serde(default)]
    pub tail: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceDoc {
    pub qualia: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraVectorDoc {
    pub qualia: String,
    pub amplitudes: BTreeMap<String, Amplitude>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum StepDoc {
    Unitary {
        domain: Vec<String>,
        matrix: Vec<Vec<Amplitude>>,
    },
    Record {
        position: usize,
        rules: BTreeMap<String, String>,
    },
    Enforce {},
    Observe {
        #[serde(default)]
        tag: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    pub alphabet: AlphabetDoc,
    pub initial_state: BTreeMap<String, Amplitude>,
    #[serde(default)]
    pub qualia_subspaces: Vec<SubspaceDoc>,
    #[serde(default)]
    pub extra_vectors: Vec<ExtraVectorDoc>,
    #[serde(default)]
    pub schedule: Vec<StepDoc>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

fn invalid(field: impl Into<String>) -> impl FnOnce(SimError) -> FileError {
    let field = field.into();
    move |source| FileError::Invalid { field, source }
}

fn to_complex([re, im]: Amplitude) -> Complex64 {
    Complex64::new(re, im)
}

fn from_complex(z: Complex64) -> Amplitude {
    [z.re, z.im]
}

fn build_state(
    alphabet: &Arc<Alphabet>,
    amplitudes: &BTreeMap<String, Amplitude>,
    field: &str,
) -> Result<StateVector, FileError> {
    let mut parsed = Vec::with_capacity(amplitudes.len());
    for (text, amp) in amplitudes {
        let label = BasisLabel::parse(text).map_err(invalid(format!("{field}.{text}")))?;
        parsed.push((label, to_complex(*amp)));
    }
    StateVector::new(alphabet.clone(), parsed).map_err(invalid(field))
}

fn state_doc(s: &StateVector) -> BTreeMap<String, Amplitude> {
    s.iter().map(|(k, a)| (k.to_string(), from_complex(*a))).collect()
}

impl ScenarioFile {
    /// Parses a document. Errors carry the line, column and field path.
    pub fn from_json(text: &str) -> Result<Self, FileError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|err| {
            let field = err.path().to_string();
            let inner = err.into_inner();
            FileError::Parse {
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })
    }

    pub fn read(path: &std::path::Path) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path).map_err(|e| FileError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario documents always serialize")
    }

    /// SHA-256 over the canonical JSON of the semantic content. Key order,
    /// whitespace, `name` and `metadata` do not affect it.
    pub fn digest(&self) -> String {
        let mut value = serde_json::to_value(self).expect("scenario documents always serialize");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("name");
            obj.remove("metadata");
        }
        // serde_json's default map is a BTreeMap, so keys come out sorted.
        let canonical = serde_json::to_string(&value).expect("values always serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Validates every invariant and builds the scenario.
    pub fn to_scenario(&self) -> Result<Scenario, FileError> {
        let tol = self.tolerances;
        let alphabet = Arc::new(
            Alphabet::new(
                self.alphabet
                    .positions
                    .iter()
                    .map(|p| p.iter().cloned().collect())
                    .collect(),
                self.alphabet.tail.as_ref().map(|t| t.iter().cloned().collect()),
            )
            .map_err(invalid("alphabet"))?,
        );
        let initial = build_state(&alphabet, &self.initial_state, "initial_state")?;

        let mut subspaces = Vec::with_capacity(self.qualia_subspaces.len());
        for (i, doc) in self.qualia_subspaces.iter().enumerate() {
            let field = format!("qualia_subspaces[{i}]");
            let mut labels = Vec::with_capacity(doc.labels.len());
            for text in &doc.labels {
                let label = BasisLabel::parse(text).map_err(invalid(field.clone()))?;
                alphabet.check(&label).map_err(invalid(field.clone()))?;
                labels.push(label);
            }
            subspaces.push((QualiaLabel::new(&doc.qualia), labels));
        }
        let mut extras = Vec::with_capacity(self.extra_vectors.len());
        for (i, doc) in self.extra_vectors.iter().enumerate() {
            let state = build_state(&alphabet, &doc.amplitudes, &format!("extra_vectors[{i}]"))?;
            extras.push((state, QualiaLabel::new(&doc.qualia)));
        }
        let spec = AdmissibleSpec::new(subspaces, extras, tol.norm).map_err(invalid("qualia_subspaces"))?;

        let mut schedule = Vec::with_capacity(self.schedule.len());
        for (i, doc) in self.schedule.iter().enumerate() {
            let field = format!("schedule[{i}]");
            schedule.push(match doc {
                StepDoc::Unitary { domain, matrix } => {
                    let domain = domain
                        .iter()
                        .map(|t| BasisLabel::parse(t))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(invalid(field.clone()))?;
                    let rows = matrix
                        .iter()
                        .map(|row| row.iter().copied().map(to_complex).collect())
                        .collect();
                    Step::Unitary(UnitaryStep::new(domain, rows, tol.unitary).map_err(invalid(field))?)
                }
                StepDoc::Record { position, rules } => Step::Record(RecordCoupling::new(*position, rules)),
                StepDoc::Enforce {} => Step::Enforce,
                StepDoc::Observe { tag } => Step::Observe(tag.clone()),
            });
        }

        let mut sc = Scenario::new(self.name.clone(), initial, spec, schedule, tol).map_err(invalid("scenario"))?;
        for (k, v) in &self.metadata {
            sc = sc.with_metadata(k, v);
        }
        Ok(sc)
    }

    pub fn from_scenario(sc: &Scenario) -> Self {
        let alphabet = sc.alphabet();
        Self {
            name: sc.name().to_string(),
            alphabet: AlphabetDoc {
                positions: alphabet.positions().iter().map(|p| p.iter().cloned().collect()).collect(),
                tail: alphabet.tail().map(|t| t.iter().cloned().collect()),
            },
            initial_state: state_doc(sc.initial_state()),
            qualia_subspaces: sc
                .spec()
                .subspaces()
                .iter()
                .map(|s| SubspaceDoc {
                    qualia: s.qualia.to_string(),
                    labels: s.labels.iter().map(ToString::to_string).collect(),
                })
                .collect(),
            extra_vectors: sc
                .spec()
                .extras()
                .iter()
                .map(|e| ExtraVectorDoc {
                    qualia: e.qualia.to_string(),
                    amplitudes: state_doc(&e.state),
                })
                .collect(),
            schedule: sc
                .schedule()
                .iter()
                .map(|step| match step {
                    Step::Unitary(u) => StepDoc::Unitary {
                        domain: u.domain().iter().map(ToString::to_string).collect(),
                        matrix: u
                            .rows()
                            .into_iter()
                            .map(|r| r.into_iter().map(from_complex).collect())
                            .collect(),
                    },
                    Step::Record(c) => StepDoc::Record {
                        position: c.position(),
                        rules: c.rules().iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
                    },
                    Step::Enforce => StepDoc::Enforce {},
                    Step::Observe(tag) => StepDoc::Observe { tag: tag.clone() },
                })
                .collect(),
            tolerances: *sc.tolerances(),
            metadata: sc.metadata().clone(),
        }
    }
}
