//! Stochastic state-vector simulation with admissibility-constrained collapse.
//!
//! The world's state evolves unitarily over a finite labeled basis. A
//! declared classifier sorts states into definite states of consciousness
//! (each carrying an opaque qualia label) and mixed states. Whenever the
//! state is mixed at an enforcement point it is projected onto an admissible
//! candidate, chosen at random with relative Born weights. Admissible
//! candidates need not be orthogonal, so the weights are normalized by their
//! sum rather than assumed to add to one.
//!
//! Modules, bottom up:
//! - [`statespace`]: labels, sparse states, unitary steps and record tapes
//! - [`consciousness`]: the classifier and the candidate overlap table
//! - [`selector`]: the enforcement operator and its random stream
//! - [`dynamics`]: schedules, trajectories, ensembles, exact evaluators
//! - [`experiments`]: prebuilt scenarios
//! - [`scenario_file`]: the JSON scenario format

pub mod consciousness;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod scenario_file;
pub mod selector;
pub mod statespace;
pub mod tolerances;

pub use consciousness::{classify, overlap_table, AdmissibleSpec, CandidateRef, Classification, OverlapRow, QualiaLabel};
pub use dynamics::{
    collapse_probability, deferred_probability, run_ensemble, run_trajectory, EnsembleStats, Scenario, Step,
    TrajectoryResult,
};
pub use error::{Result, SimError};
pub use selector::{enforce, relative_probabilities, sample_candidate, ProjectionRecord, RngStream};
pub use statespace::{
    append_record, apply_unitary, inner_product, normalize, Alphabet, BasisLabel, RecordCoupling, StateVector,
    UnitaryStep,
};
pub use tolerances::Tolerances;
