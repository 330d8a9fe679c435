//! The admissibility classifier.
//!
//! Admissible states are declared, not derived: a scenario lists disjoint
//! subspaces of basis labels (each a degenerate sector carrying one qualia
//! label) plus any number of explicit admissible unit vectors. Explicit
//! vectors may overlap each other and the subspaces arbitrarily, which is
//! what lets two nearly parallel states carry different qualia.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::statespace::{inner_product, normalize, BasisLabel, StateVector};
use crate::tolerances::Tolerances;

/// Reserved token for the null state of consciousness (e.g. the vacuum).
pub const NULL_QUALIA: &str = "φ";

/// Opaque name of one definite conscious state.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QualiaLabel(Arc<str>);

impl QualiaLabel {
    pub fn new(token: impl AsRef<str>) -> Self {
        Self(Arc::from(token.as_ref()))
    }

    pub fn null() -> Self {
        Self::new(NULL_QUALIA)
    }

    pub fn is_null(&self) -> bool {
        &*self.0 == NULL_QUALIA
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for QualiaLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for QualiaLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q({})", self.0)
    }
}

impl From<&str> for QualiaLabel {
    fn from(s: &str) -> Self {
        Self::new(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Definite(QualiaLabel),
    Mixed,
}

impl Classification {
    pub fn qualia(&self) -> Option<&QualiaLabel> {
        match self {
            Classification::Definite(q) => Some(q),
            Classification::Mixed => None,
        }
    }

    pub fn is_definite(&self) -> bool {
        matches!(self, Classification::Definite(_))
    }
}

/// Index into an [`AdmissibleSpec`]'s declared candidates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum CandidateRef {
    Subspace(usize),
    Extra(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    pub qualia: QualiaLabel,
    pub labels: BTreeSet<BasisLabel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtraVector {
    pub qualia: QualiaLabel,
    pub state: StateVector,
}

/// One candidate of the overlap table.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapRow {
    pub candidate: CandidateRef,
    pub qualia: QualiaLabel,
    /// ⟨candidate|s⟩.
    pub amplitude: Complex64,
    /// |amplitude|².
    pub weight: f64,
}

/// Declared extension of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleSpec {
    subspaces: Vec<Subspace>,
    extras: Vec<ExtraVector>,
    index: HashMap<BasisLabel, usize>,
}

impl AdmissibleSpec {
    pub fn new(
        subspaces: Vec<(QualiaLabel, Vec<BasisLabel>)>,
        extras: Vec<(StateVector, QualiaLabel)>,
        eps_norm: f64,
    ) -> Result<Self> {
        let mut index = HashMap::new();
        let mut seen_qualia = BTreeSet::new();
        let mut built = Vec::with_capacity(subspaces.len());
        for (i, (qualia, labels)) in subspaces.into_iter().enumerate() {
            if !seen_qualia.insert(qualia.clone()) {
                return Err(SimError::InvalidSpec(format!(
                    "qualia {qualia} declares more than one subspace"
                )));
            }
            if labels.is_empty() {
                return Err(SimError::InvalidSpec(format!("subspace for {qualia} is empty")));
            }
            for label in &labels {
                if let Some(&prev) = index.get(label) {
                    let other: &Subspace = &built[prev];
                    return Err(SimError::InvalidSpec(format!(
                        "subspaces not disjoint: {label} belongs to both {} and {qualia}",
                        other.qualia
                    )));
                }
                index.insert(label.clone(), i);
            }
            built.push(Subspace {
                qualia,
                labels: labels.into_iter().collect(),
            });
        }
        let mut extra_vectors = Vec::with_capacity(extras.len());
        for (state, qualia) in extras {
            if !state.is_normalized(eps_norm) {
                return Err(SimError::InvalidSpec(format!(
                    "admissible vector for {qualia} is not unit norm (squared norm {})",
                    state.norm_sqr()
                )));
            }
            extra_vectors.push(ExtraVector { qualia, state });
        }
        if built.is_empty() && extra_vectors.is_empty() {
            return Err(SimError::InvalidSpec("no admissible states declared".into()));
        }
        Ok(Self {
            subspaces: built,
            extras: extra_vectors,
            index,
        })
    }

    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn extras(&self) -> &[ExtraVector] {
        &self.extras
    }

    /// Sector that a basis label belongs to, if any.
    pub fn sector_of(&self, label: &BasisLabel) -> Option<&QualiaLabel> {
        self.index.get(label).map(|&i| &self.subspaces[i].qualia)
    }

    pub fn qualia_of(&self, candidate: CandidateRef) -> &QualiaLabel {
        match candidate {
            CandidateRef::Subspace(i) => &self.subspaces[i].qualia,
            CandidateRef::Extra(j) => &self.extras[j].qualia,
        }
    }

    pub fn declares(&self, qualia: &QualiaLabel) -> bool {
        self.subspaces.iter().any(|s| &s.qualia == qualia)
            || self.extras.iter().any(|e| &e.qualia == qualia)
    }

    /// A copy with one more explicitly admissible vector.
    pub fn with_extra(&self, state: StateVector, qualia: QualiaLabel, eps_norm: f64) -> Result<Self> {
        if !state.is_normalized(eps_norm) {
            return Err(SimError::InvalidSpec(format!(
                "admissible vector for {qualia} is not unit norm"
            )));
        }
        let mut spec = self.clone();
        spec.extras.push(ExtraVector { qualia, state });
        Ok(spec)
    }

    /// The unit state a candidate stands for, given the state being projected.
    pub fn candidate_state(&self, candidate: CandidateRef, s: &StateVector) -> Result<StateVector> {
        match candidate {
            CandidateRef::Subspace(i) => normalize(&s.restricted(|k| self.index.get(k) == Some(&i))),
            CandidateRef::Extra(j) => Ok(self.extras[j].state.clone()),
        }
    }

    fn sector_weights(&self, s: &StateVector) -> Vec<f64> {
        let mut weights = vec![0.0; self.subspaces.len()];
        for (label, amp) in s.iter() {
            if let Some(&i) = self.index.get(label) {
                weights[i] += amp.norm_sqr();
            }
        }
        weights
    }
}

fn check_normalized(s: &StateVector, tol: &Tolerances) -> Result<()> {
    if s.is_normalized(tol.norm) {
        Ok(())
    } else {
        Err(SimError::NotNormalized(s.norm_sqr()))
    }
}

/// Every candidate with its overlap. Subspace rows whose projection weight
/// is below `tol.null` are omitted; every explicit vector gets a row.
pub fn overlap_table(spec: &AdmissibleSpec, s: &StateVector, tol: &Tolerances) -> Result<Vec<OverlapRow>> {
    check_normalized(s, tol)?;
    let mut rows = Vec::new();
    for (i, w) in spec.sector_weights(s).into_iter().enumerate() {
        if w >= tol.null {
            rows.push(OverlapRow {
                candidate: CandidateRef::Subspace(i),
                qualia: spec.subspaces[i].qualia.clone(),
                amplitude: Complex64::new(w.sqrt(), 0.0),
                weight: w,
            });
        }
    }
    for (j, extra) in spec.extras.iter().enumerate() {
        let amplitude = inner_product(&extra.state, s)?;
        rows.push(OverlapRow {
            candidate: CandidateRef::Extra(j),
            qualia: extra.qualia.clone(),
            amplitude,
            weight: amplitude.norm_sqr(),
        });
    }
    Ok(rows)
}

/// Classification implied by an overlap table: the highest-weight row above
/// `1 - eps_class`, earliest declaration winning ties.
pub fn classify_rows(rows: &[OverlapRow], eps_class: f64) -> Classification {
    let mut best: Option<&OverlapRow> = None;
    for row in rows {
        if row.weight > 1.0 - eps_class && best.is_none_or(|b| row.weight > b.weight) {
            best = Some(row);
        }
    }
    match best {
        Some(row) => Classification::Definite(row.qualia.clone()),
        None => Classification::Mixed,
    }
}

pub fn classify(spec: &AdmissibleSpec, s: &StateVector, tol: &Tolerances) -> Result<Classification> {
    Ok(classify_rows(&overlap_table(spec, s, tol)?, tol.class))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statespace::Alphabet;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn lbl(s: &str) -> BasisLabel {
        BasisLabel::parse(s).unwrap()
    }

    fn sg() -> (Arc<Alphabet>, AdmissibleSpec) {
        let ab = Arc::new(Alphabet::from_tokens(&[&["+", "-"], &["B", "G", "R"]], None).unwrap());
        let spec = AdmissibleSpec::new(
            vec![
                ("Blue".into(), vec![lbl("+,B"), lbl("-,B")]),
                ("Green".into(), vec![lbl("+,G")]),
                ("Red".into(), vec![lbl("-,R")]),
            ],
            vec![],
            1e-10,
        )
        .unwrap();
        (ab, spec)
    }

    fn superposition(ab: &Arc<Alphabet>, parts: &[(&str, f64)]) -> StateVector {
        StateVector::new(
            ab.clone(),
            parts.iter().map(|(l, a)| (lbl(l), Complex64::new(*a, 0.0))),
        )
        .unwrap()
    }

    #[test]
    fn blue_sector_is_definite() {
        let (ab, spec) = sg();
        let tol = Tolerances::default();
        let s = StateVector::basis(ab.clone(), lbl("+,B")).unwrap();
        assert_eq!(classify(&spec, &s, &tol).unwrap(), Classification::Definite("Blue".into()));
        // Degenerate sector: any superposition of blue labels is still blue.
        let sup = superposition(&ab, &[("+,B", FRAC_1_SQRT_2), ("-,B", FRAC_1_SQRT_2)]);
        assert_eq!(classify(&spec, &sup, &tol).unwrap(), Classification::Definite("Blue".into()));
    }

    #[test]
    fn green_red_superposition_is_mixed() {
        let (ab, spec) = sg();
        let s = superposition(&ab, &[("+,G", FRAC_1_SQRT_2), ("-,R", FRAC_1_SQRT_2)]);
        assert_eq!(classify(&spec, &s, &Tolerances::default()).unwrap(), Classification::Mixed);
    }

    #[test]
    fn phase_does_not_matter() {
        let (ab, spec) = sg();
        let tol = Tolerances::default();
        let g = StateVector::basis(ab, lbl("+,G")).unwrap();
        for k in 0..16 {
            let theta = k as f64 * 0.4;
            assert_eq!(
                classify(&spec, &g.with_global_phase(theta), &tol).unwrap(),
                Classification::Definite("Green".into())
            );
        }
    }

    #[test]
    fn unnormalized_input_rejected() {
        let (ab, spec) = sg();
        let s = superposition(&ab, &[("+,G", 1.0), ("-,R", 1.0)]);
        assert!(matches!(
            classify(&spec, &s, &Tolerances::default()),
            Err(SimError::NotNormalized(_))
        ));
    }

    #[test]
    fn overlap_table_for_green_red_split() {
        let (ab, spec) = sg();
        let s = superposition(&ab, &[("+,G", FRAC_1_SQRT_2), ("-,R", FRAC_1_SQRT_2)]);
        let rows = overlap_table(&spec, &s, &Tolerances::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].qualia, "Green".into());
        assert_eq!(rows[1].qualia, "Red".into());
        for row in &rows {
            assert!((row.amplitude - Complex64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
            assert!((row.weight - 0.5).abs() < 1e-15);
        }
        let green = spec.candidate_state(rows[0].candidate, &s).unwrap();
        assert_eq!(green.amplitude(&lbl("+,G")), Complex64::new(1.0, 0.0));
        assert_eq!(green.len(), 1);
    }

    #[test]
    fn overlap_table_single_sector() {
        let (ab, spec) = sg();
        let s = superposition(&ab, &[("+,B", 0.6), ("-,B", 0.8)]);
        let rows = overlap_table(&spec, &s, &Tolerances::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].weight - 1.0).abs() < 1e-15);
    }

    #[test]
    fn phi_overlap_weights_need_not_sum_to_one() {
        let ab = Arc::new(Alphabet::from_tokens(&[&["psi", "perp"]], None).unwrap());
        let psi = StateVector::basis(ab.clone(), lbl("psi")).unwrap();
        let phi = superposition(&ab, &[("psi", 0.999), ("perp", (1.0 - 0.999f64.powi(2)).sqrt())]);
        let spec = AdmissibleSpec::new(
            vec![],
            vec![(psi.clone(), "Blue".into()), (phi, "Green".into())],
            1e-10,
        )
        .unwrap();
        let rows = overlap_table(&spec, &psi, &Tolerances::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].weight - 1.0).abs() < 1e-15);
        assert!((rows[1].weight - 0.998001).abs() < 1e-12);
        // Both pass? Only Blue exceeds 1 - εclass.
        assert_eq!(classify_rows(&rows, 1e-9), Classification::Definite("Blue".into()));
    }

    #[test]
    fn ties_go_to_first_declared() {
        let ab = Arc::new(Alphabet::from_tokens(&[&["a", "b"]], None).unwrap());
        let a = StateVector::basis(ab, lbl("a")).unwrap();
        let spec = AdmissibleSpec::new(
            vec![],
            vec![(a.clone(), "First".into()), (a.clone(), "Second".into())],
            1e-10,
        )
        .unwrap();
        assert_eq!(
            classify(&spec, &a, &Tolerances::default()).unwrap(),
            Classification::Definite("First".into())
        );
    }

    #[test]
    fn vacuum_is_null_qualia() {
        let ab = Arc::new(Alphabet::from_tokens(&[&["0"]], None).unwrap());
        let spec = AdmissibleSpec::new(vec![(QualiaLabel::null(), vec![lbl("0")])], vec![], 1e-10).unwrap();
        let vac = StateVector::basis(ab, lbl("0")).unwrap();
        let c = classify(&spec, &vac, &Tolerances::default()).unwrap();
        assert!(c.qualia().unwrap().is_null());
    }

    #[test]
    fn spec_validation() {
        let err = AdmissibleSpec::new(
            vec![
                ("Green".into(), vec![lbl("+,G")]),
                ("Red".into(), vec![lbl("+,G"), lbl("-,R")]),
            ],
            vec![],
            1e-10,
        )
        .unwrap_err();
        assert!(err.to_string().contains("subspaces not disjoint"));
        assert!(AdmissibleSpec::new(vec![], vec![], 1e-10).is_err());

        let ab = Arc::new(Alphabet::from_tokens(&[&["a", "b"]], None).unwrap());
        let long = superposition(&ab, &[("a", 1.0), ("b", 1.0)]);
        assert!(AdmissibleSpec::new(vec![], vec![(long, "X".into())], 1e-10).is_err());
    }
}
