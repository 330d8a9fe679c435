//! The enforcement operator: a no-op on admissible states, a Born-weighted
//! random projection onto an admissible candidate otherwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::consciousness::{classify_rows, overlap_table, AdmissibleSpec, CandidateRef, Classification, QualiaLabel};
use crate::error::{Result, SimError};
use crate::statespace::StateVector;
use crate::tolerances::Tolerances;

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trajectory `index` in an ensemble: the `index`-th output of a
/// SplitMix64 generator seeded with `base_seed`, i.e.
/// `mix(base_seed + (index + 1) * 0x9E3779B97F4A7C15)`.
pub fn derive_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64_mix(base_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(SPLITMIX_GAMMA)))
}

/// Per-trajectory random stream. ChaCha8 keyed by `seed`; `counter` is the
/// number of uniforms drawn so far.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    counter: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            counter: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Uniform draw in [0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        self.counter += 1;
        self.rng.gen::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChosenCandidate {
    pub candidate: CandidateRef,
    pub qualia: QualiaLabel,
}

/// What one enforcement did.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionRecord {
    pub occurred: bool,
    pub chosen: Option<ChosenCandidate>,
    /// Candidates that entered the draw, aligned with `weights`.
    pub candidates: Vec<CandidateRef>,
    /// The distribution sampled from.
    pub weights: Vec<f64>,
    pub rng_draw: Option<f64>,
}

impl ProjectionRecord {
    fn noop() -> Self {
        Self {
            occurred: false,
            chosen: None,
            candidates: Vec::new(),
            weights: Vec::new(),
            rng_draw: None,
        }
    }
}

/// Normalizes non-negative weights to a distribution. Weights below `eps_null`
/// count as zero.
pub fn relative_probabilities_with(weights: &[f64], eps_null: f64) -> Result<Vec<f64>> {
    if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
        return Err(SimError::InvalidParameter(format!("weight {w} is not a finite non-negative number")));
    }
    let kept: Vec<f64> = weights
        .iter()
        .map(|&w| if w < eps_null { 0.0 } else { w })
        .collect();
    let total: f64 = kept.iter().sum();
    if total <= 0.0 {
        return Err(SimError::HungUniverse);
    }
    Ok(kept.into_iter().map(|w| w / total).collect())
}

pub fn relative_probabilities(weights: &[f64]) -> Result<Vec<f64>> {
    relative_probabilities_with(weights, Tolerances::default().null)
}

/// Inverse-CDF lookup: the first index whose cumulative probability exceeds `u`.
pub fn inverse_cdf(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left the total a hair below 1: fall back to the last live entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Draws one index from `probs` using exactly one uniform from `rng`.
pub fn sample_candidate(probs: &[f64], rng: &mut RngStream) -> (usize, f64) {
    let u = rng.next_uniform();
    (inverse_cdf(probs, u), u)
}

/// Applies the enforcement operator to `s`.
///
/// Definite states come back unchanged with `occurred = false` and no draw.
/// Mixed states are replaced by a candidate sampled with probability
/// proportional to its squared overlap.
pub fn enforce(
    spec: &AdmissibleSpec,
    s: &StateVector,
    tol: &Tolerances,
    rng: &mut RngStream,
) -> Result<(StateVector, ProjectionRecord)> {
    let rows = overlap_table(spec, s, tol)?;
    if let Classification::Definite(_) = classify_rows(&rows, tol.class) {
        return Ok((s.clone(), ProjectionRecord::noop()));
    }
    let live: Vec<_> = rows.into_iter().filter(|r| r.weight >= tol.null).collect();
    if live.is_empty() {
        return Err(SimError::HungUniverse);
    }
    let weights: Vec<f64> = live.iter().map(|r| r.weight).collect();
    let probs = relative_probabilities_with(&weights, tol.null)?;
    let (idx, draw) = sample_candidate(&probs, rng);
    let row = &live[idx];
    let state = spec.candidate_state(row.candidate, s)?;
    Ok((
        state,
        ProjectionRecord {
            occurred: true,
            chosen: Some(ChosenCandidate {
                candidate: row.candidate,
                qualia: row.qualia.clone(),
            }),
            candidates: live.iter().map(|r| r.candidate).collect(),
            weights: probs,
            rng_draw: Some(draw),
        },
    ))
}
