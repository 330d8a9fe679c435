//! Scenario schedules, sampled trajectories, ensembles and the two exact
//! (sampling-free) outcome evaluators.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::thread;

use serde::Serialize;

use crate::consciousness::{classify, classify_rows, overlap_table, AdmissibleSpec, Classification, QualiaLabel};
use crate::error::{Result, SimError};
use crate::selector::{derive_seed, enforce, relative_probabilities_with, ProjectionRecord, RngStream};
use crate::statespace::{append_record, apply_unitary, Alphabet, RecordCoupling, StateVector, UnitaryStep};
use crate::tolerances::Tolerances;

/// Upper bound on live branches in [`collapse_probability`].
pub const MAX_BRANCHES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Unitary(UnitaryStep),
    Record(RecordCoupling),
    Enforce,
    Observe(String),
}

impl Step {
    fn evolves(&self) -> bool {
        matches!(self, Step::Unitary(_) | Step::Record(_))
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    name: String,
    initial_state: StateVector,
    spec: AdmissibleSpec,
    schedule: Vec<Step>,
    tolerances: Tolerances,
    metadata: BTreeMap<String, String>,
}

impl Scenario {
    /// Validates and builds a scenario. The initial state must be unit norm
    /// and classify as definite.
    pub fn new(
        name: impl Into<String>,
        initial_state: StateVector,
        spec: AdmissibleSpec,
        schedule: Vec<Step>,
        tolerances: Tolerances,
    ) -> Result<Self> {
        let sc = Self {
            name: name.into(),
            initial_state,
            spec,
            schedule,
            tolerances,
            metadata: BTreeMap::new(),
        };
        sc.validate()?;
        Ok(sc)
    }

    fn validate(&self) -> Result<()> {
        let alphabet = self.alphabet();
        for extra in self.spec.extras() {
            if !extra.state.same_alphabet(&self.initial_state) {
                return Err(SimError::InvalidScenario(format!(
                    "admissible vector for {} uses a different alphabet",
                    extra.qualia
                )));
            }
        }
        for step in &self.schedule {
            match step {
                Step::Unitary(u) => {
                    for label in u.domain() {
                        alphabet.check(label)?;
                    }
                    let defect = u.unitarity_defect();
                    if defect > self.tolerances.unitary {
                        return Err(SimError::NotUnitary(defect));
                    }
                }
                Step::Record(c) => {
                    for from in c.rules().keys() {
                        if !alphabet.allows(c.position(), from) {
                            return Err(SimError::InvalidScenario(format!(
                                "record rule reads `{from}`, not a token at position {}",
                                c.position()
                            )));
                        }
                    }
                }
                Step::Enforce | Step::Observe(_) => {}
            }
        }
        if !self.initial_state.is_normalized(self.tolerances.norm) {
            return Err(SimError::InvalidScenario(format!(
                "initial state not normalized (squared norm {})",
                self.initial_state.norm_sqr()
            )));
        }
        match classify(&self.spec, &self.initial_state, &self.tolerances)? {
            Classification::Definite(_) => Ok(()),
            Classification::Mixed => Err(SimError::InvalidScenario("initial state not definite".into())),
        }
    }

    /// Non-fatal findings about the schedule.
    pub fn lints(&self) -> Vec<String> {
        let mut out = Vec::new();
        let has_unitary = self.schedule.iter().any(|s| matches!(s, Step::Unitary(_)));
        let has_check = self
            .schedule
            .iter()
            .any(|s| matches!(s, Step::Enforce | Step::Observe(_)));
        if has_unitary && !has_check {
            out.push("schedule evolves the state but never enforces or observes it".to_string());
        }
        out
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    /// Same scenario with one more explicitly admissible vector.
    pub fn with_extra_admissible(&self, state: StateVector, qualia: QualiaLabel) -> Result<Self> {
        let spec = self.spec.with_extra(state, qualia, self.tolerances.norm)?;
        let mut sc = self.clone();
        sc.spec = spec;
        sc.validate()?;
        Ok(sc)
    }

    /// Same scenario with every `Enforce` step removed.
    pub fn without_enforcement(&self) -> Self {
        let mut sc = self.clone();
        sc.schedule.retain(|s| !matches!(s, Step::Enforce));
        sc
    }

    /// Same scenario with every `Record` step removed.
    pub fn without_records(&self) -> Self {
        let mut sc = self.clone();
        sc.schedule.retain(|s| !matches!(s, Step::Record(_)));
        sc
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        self.initial_state.alphabet()
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial_state
    }

    pub fn spec(&self) -> &AdmissibleSpec {
        &self.spec
    }

    pub fn schedule(&self) -> &[Step] {
        &self.schedule
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }
}

/// One point of the qualia history. `step` is `None` for the initial state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QualiaEntry {
    pub step: Option<usize>,
    pub qualia: QualiaLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionEvent {
    pub step: usize,
    pub record: ProjectionRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    /// Initial classification followed by one entry per `Observe` step.
    pub qualia_history: Vec<QualiaEntry>,
    /// One entry per `Enforce` step.
    pub projections: Vec<ProjectionEvent>,
    pub final_state: StateVector,
    pub seed: u64,
}

impl TrajectoryResult {
    pub fn terminal_qualia(&self) -> &QualiaLabel {
        &self
            .qualia_history
            .last()
            .expect("history always holds the initial entry")
            .qualia
    }

    /// Number of enforcements that actually projected.
    pub fn projection_count(&self) -> usize {
        self.projections.iter().filter(|p| p.record.occurred).count()
    }
}

fn evolve(step: &Step, state: &StateVector) -> Result<Option<StateVector>> {
    Ok(match step {
        Step::Unitary(u) => Some(apply_unitary(u, state)?),
        Step::Record(c) => Some(append_record(c, state)?),
        Step::Enforce | Step::Observe(_) => None,
    })
}

pub fn run_trajectory(sc: &Scenario, seed: u64) -> Result<TrajectoryResult> {
    let tol = &sc.tolerances;
    let mut rng = RngStream::new(seed);
    let mut state = sc.initial_state.clone();
    let initial = classify(&sc.spec, &state, tol)?
        .qualia()
        .cloned()
        .ok_or_else(|| SimError::InvalidScenario("initial state not definite".into()))?;
    let mut qualia_history = vec![QualiaEntry {
        step: None,
        qualia: initial,
    }];
    let mut projections = Vec::new();

    for (i, step) in sc.schedule.iter().enumerate() {
        match step {
            Step::Enforce => {
                let (next, record) = enforce(&sc.spec, &state, tol, &mut rng)?;
                state = next;
                projections.push(ProjectionEvent { step: i, record });
            }
            Step::Observe(tag) => match classify(&sc.spec, &state, tol)? {
                Classification::Definite(qualia) => qualia_history.push(QualiaEntry { step: Some(i), qualia }),
                Classification::Mixed => {
                    return Err(SimError::ObservedMixed {
                        step: i,
                        tag: tag.clone(),
                    })
                }
            },
            evolving => {
                if let Some(next) = evolve(evolving, &state)? {
                    state = next;
                }
            }
        }
    }
    Ok(TrajectoryResult {
        qualia_history,
        projections,
        final_state: state,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeRow {
    pub qualia: QualiaLabel,
    pub count: u64,
    pub frequency: f64,
    /// Binomial standard error √(p(1−p)/n) at the observed frequency.
    pub sigma: f64,
}

/// Terminal-qualia counts over an ensemble. Merging is commutative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnsembleStats {
    pub n: u64,
    pub counts: BTreeMap<QualiaLabel, u64>,
    pub projection_events: u64,
}

impl EnsembleStats {
    fn record(&mut self, traj: &TrajectoryResult) {
        self.n += 1;
        *self.counts.entry(traj.terminal_qualia().clone()).or_default() += 1;
        self.projection_events += traj.projection_count() as u64;
    }

    pub fn merge(&mut self, other: &EnsembleStats) {
        self.n += other.n;
        self.projection_events += other.projection_events;
        for (q, c) in &other.counts {
            *self.counts.entry(q.clone()).or_default() += c;
        }
    }

    pub fn count(&self, qualia: &QualiaLabel) -> u64 {
        self.counts.get(qualia).copied().unwrap_or(0)
    }

    pub fn frequency(&self, qualia: &QualiaLabel) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.count(qualia) as f64 / self.n as f64
        }
    }

    pub fn sigma(&self, qualia: &QualiaLabel) -> f64 {
        let p = self.frequency(qualia);
        if self.n == 0 {
            0.0
        } else {
            (p * (1.0 - p) / self.n as f64).sqrt()
        }
    }

    pub fn rows(&self) -> Vec<OutcomeRow> {
        self.counts
            .keys()
            .map(|q| OutcomeRow {
                qualia: q.clone(),
                count: self.count(q),
                frequency: self.frequency(q),
                sigma: self.sigma(q),
            })
            .collect()
    }
}

fn run_range(sc: &Scenario, base_seed: u64, range: std::ops::Range<u64>) -> Result<EnsembleStats> {
    let mut stats = EnsembleStats::default();
    for index in range {
        let traj = run_trajectory(sc, derive_seed(base_seed, index)).map_err(|e| SimError::Trajectory {
            index,
            source: Box::new(e),
        })?;
        stats.record(&traj);
    }
    Ok(stats)
}

/// Runs `n` trajectories seeded by [`derive_seed`]`(base_seed, index)`.
///
/// The result does not depend on `workers`. On failure the error of the
/// lowest failing trajectory index is returned.
pub fn run_ensemble(sc: &Scenario, n: u64, base_seed: u64, workers: usize) -> Result<EnsembleStats> {
    if n == 0 {
        return Err(SimError::InvalidParameter("ensemble size must be at least 1".into()));
    }
    let workers = workers.clamp(1, n.min(1024) as usize) as u64;
    if workers == 1 {
        return run_range(sc, base_seed, 0..n);
    }
    let chunk = n.div_ceil(workers);
    let results: Vec<Result<EnsembleStats>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let start = (w * chunk).min(n);
                let end = ((w + 1) * chunk).min(n);
                scope.spawn(move || run_range(sc, base_seed, start..end))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("ensemble worker panicked"))
            .collect()
    });
    // Chunks are in index order, so the first error is the lowest index.
    let mut total = EnsembleStats::default();
    for r in results {
        total.merge(&r?);
    }
    Ok(total)
}

/// Conscious readout probability of `target` from `state`: certain if the
/// state is already definite, otherwise the relative Born weight summed over
/// the target's candidates.
fn readout_probability(spec: &AdmissibleSpec, state: &StateVector, target: &QualiaLabel, tol: &Tolerances) -> Result<f64> {
    let rows = overlap_table(spec, state, tol)?;
    if let Classification::Definite(q) = classify_rows(&rows, tol.class) {
        return Ok(if &q == target { 1.0 } else { 0.0 });
    }
    let weights: Vec<f64> = rows.iter().map(|r| r.weight).collect();
    let probs = relative_probabilities_with(&weights, tol.null)?;
    Ok(rows
        .iter()
        .zip(&probs)
        .filter(|(r, _)| &r.qualia == target)
        .map(|(_, p)| p)
        .sum())
}

fn check_target(sc: &Scenario, target: &QualiaLabel) -> Result<()> {
    if sc.spec.declares(target) {
        Ok(())
    } else {
        Err(SimError::UnknownQualia(target.clone()))
    }
}

/// Exact probability of `target` when every branch evolves unitarily and
/// consciousness only looks at the end.
///
/// `Enforce` steps are accepted only after the last unitary or record step
/// (the terminal readout); anywhere else they yield `NotDeferred`.
pub fn deferred_probability(sc: &Scenario, target: &QualiaLabel) -> Result<f64> {
    check_target(sc, target)?;
    let last_evolution = sc.schedule.iter().rposition(Step::evolves);
    let mut state = sc.initial_state.clone();
    for (i, step) in sc.schedule.iter().enumerate() {
        if matches!(step, Step::Enforce) && last_evolution.is_some_and(|last| i < last) {
            return Err(SimError::NotDeferred(i));
        }
        if let Some(next) = evolve(step, &state)? {
            state = next;
        }
    }
    readout_probability(&sc.spec, &state, target, &sc.tolerances)
}

/// Exact probability of `target` when every `Enforce` collapses the state:
/// the sum over all projection branches of the product of conditional Born
/// probabilities, evaluated without sampling.
pub fn collapse_probability(sc: &Scenario, target: &QualiaLabel) -> Result<f64> {
    check_target(sc, target)?;
    let tol = &sc.tolerances;
    let mut total = 0.0;
    let mut stack = vec![(0usize, sc.initial_state.clone(), 1.0f64)];
    let mut live = 1usize;
    while let Some((start, mut state, weight)) = stack.pop() {
        live -= 1;
        let mut i = start;
        let mut branched = false;
        while i < sc.schedule.len() {
            let step = &sc.schedule[i];
            i += 1;
            if let Some(next) = evolve(step, &state)? {
                state = next;
                continue;
            }
            if !matches!(step, Step::Enforce) {
                continue;
            }
            let rows = overlap_table(&sc.spec, &state, tol)?;
            if classify_rows(&rows, tol.class).is_definite() {
                continue;
            }
            let rows: Vec<_> = rows.into_iter().filter(|r| r.weight >= tol.null).collect();
            if rows.is_empty() {
                return Err(SimError::HungUniverse);
            }
            let weights: Vec<f64> = rows.iter().map(|r| r.weight).collect();
            let probs = relative_probabilities_with(&weights, tol.null)?;
            for (row, p) in rows.iter().zip(probs) {
                if p > 0.0 {
                    live += 1;
                    if live > MAX_BRANCHES {
                        return Err(SimError::BranchLimit(MAX_BRANCHES));
                    }
                    stack.push((i, sc.spec.candidate_state(row.candidate, &state)?, weight * p));
                }
            }
            branched = true;
            break;
        }
        if !branched {
            total += weight * readout_probability(&sc.spec, &state, target, tol)?;
        }
    }
    Ok(total)
}
