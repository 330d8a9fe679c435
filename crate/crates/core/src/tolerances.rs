use serde::{Deserialize, Serialize};

/// Squared amplitudes below this are dropped from sparse states.
pub const PRUNE_EPS: f64 = 1e-15;

/// Numerical thresholds used across a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed deviation of the squared norm from 1.
    pub norm: f64,
    /// Allowed entry-wise deviation of U†U from the identity.
    pub unitary: f64,
    /// A state is definite when its squared overlap exceeds `1 - class`.
    pub class: f64,
    /// Candidate weights below this are treated as zero.
    pub null: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            norm: 1e-10,
            unitary: 1e-10,
            class: 1e-9,
            null: 1e-24,
        }
    }
}
