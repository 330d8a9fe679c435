use thiserror::Error;

use crate::consciousness::QualiaLabel;
use crate::statespace::BasisLabel;

pub type Result<T, E = SimError> = std::result::Result<T, E>;

/// Everything that can go wrong while building or running a scenario.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SimError {
    #[error("basis label must contain at least one token")]
    EmptyLabel,

    #[error("token `{token}` at position {position} is not in the declared alphabet")]
    UnknownToken { token: String, position: usize },

    #[error("state vectors are declared over different alphabets")]
    AlphabetMismatch,

    #[error("non-finite amplitude on {0}")]
    NonFinite(BasisLabel),

    #[error("cannot normalize a null vector (squared norm {0:e})")]
    NullVector(f64),

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("matrix is not unitary (max |U†U - I| = {0:e})")]
    NotUnitary(f64),

    #[error("matrix shape does not match a domain of {0} labels")]
    DimensionMismatch(usize),

    #[error("duplicate basis label {0} in unitary domain")]
    DuplicateLabel(BasisLabel),

    #[error("record coupling has no rule for {label} at position {position}")]
    IncompleteCoupling { label: BasisLabel, position: usize },

    #[error("invalid admissible spec: {0}")]
    InvalidSpec(String),

    #[error("qualia label {0} is not declared by the admissible spec")]
    UnknownQualia(QualiaLabel),

    #[error("hung universe: no admissible candidate has non-zero overlap with the state")]
    HungUniverse,

    #[error("observe step `{tag}` (schedule index {step}) met a mixed state")]
    ObservedMixed { step: usize, tag: String },

    #[error("schedule index {0} enforces before unitary evolution has finished")]
    NotDeferred(usize),

    #[error("branch enumeration exceeded {0} branches")]
    BranchLimit(usize),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("only one branch exists at p_up = {0}")]
    DegenerateBranching(f64),

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: u64,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    /// Strips any trajectory context and returns the underlying error.
    pub fn root(&self) -> &SimError {
        match self {
            SimError::Trajectory { source, .. } => source.root(),
            other => other,
        }
    }
}
