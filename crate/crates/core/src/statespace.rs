//! Finite state spaces over symbolic basis labels.
//!
//! A basis label is an ordered list of tokens such as `+,B` (spin up, blue
//! light) or `U,I,I` (undecayed ion, two idle tape entries). States are
//! sparse maps from labels to complex amplitudes. Detector tapes grow by
//! appending one token per record coupling, so the label space is open-ended
//! and only populated branches are stored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::tolerances::PRUNE_EPS;

pub type Token = Arc<str>;

/// An ordered, non-empty list of tokens naming one basis vector.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel(Arc<[Token]>);

impl BasisLabel {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let tokens: Vec<Token> = tokens.into_iter().map(|t| Arc::from(t.as_ref())).collect();
        if tokens.is_empty() {
            return Err(SimError::EmptyLabel);
        }
        Ok(Self(tokens.into()))
    }

    /// Parses the comma-separated form used in scenario files, e.g. `"+,B"`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(SimError::EmptyLabel);
        }
        Self::new(text.split(',').map(str::trim))
    }

    pub fn tokens(&self) -> &[Token] {
        &self.0
    }

    pub fn token(&self, position: usize) -> Option<&str> {
        self.0.get(position).map(|t| &**t)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn appended(&self, token: Token) -> Self {
        let mut tokens = self.0.to_vec();
        tokens.push(token);
        Self(tokens.into())
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(t)?;
        }
        Ok(())
    }
}

impl fmt::Debug for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{self}⟩")
    }
}

/// Allowed tokens per label position.
///
/// Positions past the end of `positions` draw from `tail`, which is how
/// record tapes of unbounded length are declared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    positions: Vec<BTreeSet<String>>,
    tail: Option<BTreeSet<String>>,
}

impl Alphabet {
    pub fn new(positions: Vec<BTreeSet<String>>, tail: Option<BTreeSet<String>>) -> Result<Self> {
        if positions.is_empty() {
            return Err(SimError::InvalidScenario(
                "alphabet must declare at least one position".into(),
            ));
        }
        for set in positions.iter().chain(tail.iter()) {
            if set.is_empty() {
                return Err(SimError::InvalidScenario("alphabet position has no tokens".into()));
            }
            for tok in set {
                if tok.is_empty() || tok.contains(',') || tok.chars().any(char::is_whitespace) {
                    return Err(SimError::InvalidScenario(format!(
                        "token `{tok}` must be non-empty without commas or whitespace"
                    )));
                }
            }
        }
        Ok(Self { positions, tail })
    }

    /// Convenience constructor from string slices.
    pub fn from_tokens(positions: &[&[&str]], tail: Option<&[&str]>) -> Result<Self> {
        let to_set = |toks: &[&str]| toks.iter().map(|t| t.to_string()).collect::<BTreeSet<_>>();
        Self::new(positions.iter().map(|p| to_set(p)).collect(), tail.map(to_set))
    }

    pub fn positions(&self) -> &[BTreeSet<String>] {
        &self.positions
    }

    pub fn tail(&self) -> Option<&BTreeSet<String>> {
        self.tail.as_ref()
    }

    pub fn allows(&self, position: usize, token: &str) -> bool {
        match self.positions.get(position).or(self.tail.as_ref()) {
            Some(set) => set.contains(token),
            None => false,
        }
    }

    pub fn check(&self, label: &BasisLabel) -> Result<()> {
        for (position, tok) in label.tokens().iter().enumerate() {
            if !self.allows(position, tok) {
                return Err(SimError::UnknownToken {
                    token: tok.to_string(),
                    position,
                });
            }
        }
        Ok(())
    }
}

/// Sparse complex state over an alphabet's basis labels.
#[derive(Clone, PartialEq)]
pub struct StateVector {
    alphabet: Arc<Alphabet>,
    amplitudes: BTreeMap<BasisLabel, Complex64>,
}

impl StateVector {
    /// Builds a state from raw amplitudes. Repeated labels are summed and
    /// negligible amplitudes pruned. The result is not normalized.
    pub fn new<I>(alphabet: Arc<Alphabet>, amplitudes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisLabel, Complex64)>,
    {
        let mut map: BTreeMap<BasisLabel, Complex64> = BTreeMap::new();
        for (label, amp) in amplitudes {
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(SimError::NonFinite(label));
            }
            alphabet.check(&label)?;
            *map.entry(label).or_default() += amp;
        }
        map.retain(|_, a| a.norm_sqr() >= PRUNE_EPS);
        Ok(Self {
            alphabet,
            amplitudes: map,
        })
    }

    /// The unit vector on a single basis label.
    pub fn basis(alphabet: Arc<Alphabet>, label: BasisLabel) -> Result<Self> {
        Self::new(alphabet, [(label, Complex64::new(1.0, 0.0))])
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Complex64 {
        self.amplitudes.get(label).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisLabel, &Complex64)> {
        self.amplitudes.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = &BasisLabel> {
        self.amplitudes.keys()
    }

    /// Number of stored (populated) basis labels.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(Complex64::norm_sqr).sum()
    }

    pub fn is_normalized(&self, eps: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= eps
    }

    pub fn same_alphabet(&self, other: &StateVector) -> bool {
        Arc::ptr_eq(&self.alphabet, &other.alphabet) || self.alphabet == other.alphabet
    }

    /// Multiplies every amplitude by `factor`.
    pub fn scaled(&self, factor: Complex64) -> StateVector {
        Self {
            alphabet: Arc::clone(&self.alphabet),
            amplitudes: self
                .amplitudes
                .iter()
                .map(|(k, a)| (k.clone(), a * factor))
                .filter(|(_, a)| a.norm_sqr() >= PRUNE_EPS)
                .collect(),
        }
    }

    pub fn with_global_phase(&self, theta: f64) -> StateVector {
        self.scaled(Complex64::from_polar(1.0, theta))
    }

    /// Keeps only the amplitudes whose labels satisfy `keep`.
    pub fn restricted(&self, mut keep: impl FnMut(&BasisLabel) -> bool) -> StateVector {
        Self {
            alphabet: Arc::clone(&self.alphabet),
            amplitudes: self
                .amplitudes
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, a)| (k.clone(), *a))
                .collect(),
        }
    }

    /// Largest absolute amplitude difference over the union of labels.
    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, a) in &self.amplitudes {
            worst = worst.max((a - other.amplitude(k)).norm());
        }
        for (k, b) in &other.amplitudes {
            if !self.amplitudes.contains_key(k) {
                worst = worst.max(b.norm());
            }
        }
        worst
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (label, a) in &self.amplitudes {
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            write!(f, "({:.6}{:+.6}i){:?}", a.re, a.im, label)?;
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// ⟨a|b⟩ = Σ conj(a_k)·b_k; labels missing from either side contribute 0.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if !a.same_alphabet(b) {
        return Err(SimError::AlphabetMismatch);
    }
    let (small, large, conj_small) = if a.len() <= b.len() {
        (a, b, true)
    } else {
        (b, a, false)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, x) in &small.amplitudes {
        if let Some(y) = large.amplitudes.get(k) {
            acc += if conj_small { x.conj() * y } else { y.conj() * x };
        }
    }
    Ok(acc)
}

/// Rescales to unit norm. Fails on (numerically) null vectors.
pub fn normalize(s: &StateVector) -> Result<StateVector> {
    let n2 = s.norm_sqr();
    if n2 <= PRUNE_EPS || !n2.is_finite() {
        return Err(SimError::NullVector(n2));
    }
    Ok(s.scaled(Complex64::new(1.0 / n2.sqrt(), 0.0)))
}

/// A unitary acting on an ordered subset of basis labels, identity elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryStep {
    domain: Vec<BasisLabel>,
    /// Row-major `dim × dim`.
    matrix: Vec<Complex64>,
}

impl UnitaryStep {
    pub fn new(domain: Vec<BasisLabel>, rows: Vec<Vec<Complex64>>, eps_unitary: f64) -> Result<Self> {
        let dim = domain.len();
        if dim == 0 || rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            return Err(SimError::DimensionMismatch(dim));
        }
        let mut seen = BTreeSet::new();
        for label in &domain {
            if !seen.insert(label) {
                return Err(SimError::DuplicateLabel(label.clone()));
            }
        }
        let matrix: Vec<Complex64> = rows.into_iter().flatten().collect();
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(SimError::NotUnitary(f64::NAN));
        }
        let step = Self { domain, matrix };
        let defect = step.unitarity_defect();
        if defect > eps_unitary {
            return Err(SimError::NotUnitary(defect));
        }
        Ok(step)
    }

    pub fn identity(domain: Vec<BasisLabel>) -> Result<Self> {
        let dim = domain.len();
        let rows = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                    .collect()
            })
            .collect();
        Self::new(domain, rows, 0.0)
    }

    /// Real rotation sending `|from⟩ → cos θ|from⟩ + sin θ|to⟩`.
    pub fn rotation(from: BasisLabel, to: BasisLabel, theta: f64) -> Result<Self> {
        let (s, c) = theta.sin_cos();
        let r = |x: f64| Complex64::new(x, 0.0);
        Self::new(
            vec![from, to],
            vec![vec![r(c), r(-s)], vec![r(s), r(c)]],
            1e-12,
        )
    }

    /// Permutation unitary mapping `domain[i]` to `domain[perm[i]]`.
    pub fn permutation(domain: Vec<BasisLabel>, perm: &[usize]) -> Result<Self> {
        let dim = domain.len();
        if perm.len() != dim {
            return Err(SimError::DimensionMismatch(dim));
        }
        let mut rows = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
        for (src, &dst) in perm.iter().enumerate() {
            if dst >= dim {
                return Err(SimError::DimensionMismatch(dim));
            }
            rows[dst][src] = Complex64::new(1.0, 0.0);
        }
        Self::new(domain, rows, 0.0)
    }

    pub fn domain(&self) -> &[BasisLabel] {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim() + col]
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.matrix.chunks(self.dim()).map(<[_]>::to_vec).collect()
    }

    pub fn adjoint(&self) -> UnitaryStep {
        let n = self.dim();
        let mut matrix = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                matrix[j * n + i] = self.entry(i, j).conj();
            }
        }
        Self {
            domain: self.domain.clone(),
            matrix,
        }
    }

    /// max over entries of |(U†U − I)_ij|.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::new(if i == j { -1.0 } else { 0.0 }, 0.0);
                for k in 0..n {
                    acc += self.entry(k, i).conj() * self.entry(k, j);
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}

pub fn apply_unitary(u: &UnitaryStep, s: &StateVector) -> Result<StateVector> {
    for label in &u.domain {
        s.alphabet.check(label)?;
    }
    let n = u.dim();
    let input: Vec<Complex64> = u.domain.iter().map(|k| s.amplitude(k)).collect();
    let mut amplitudes = s.amplitudes.clone();
    for (i, label) in u.domain.iter().enumerate() {
        let out: Complex64 = (0..n).map(|j| u.matrix[i * n + j] * input[j]).sum();
        if out.norm_sqr() >= PRUNE_EPS {
            amplitudes.insert(label.clone(), out);
        } else {
            amplitudes.remove(label);
        }
    }
    Ok(StateVector {
        alphabet: Arc::clone(&s.alphabet),
        amplitudes,
    })
}

/// Appends a record token chosen by the token at `position`, e.g. the ion's
/// `U`/`D` state writing `I`/`A` to the detector tape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordCoupling {
    position: usize,
    rules: BTreeMap<Token, Token>,
}

impl RecordCoupling {
    pub fn new<I, A, B>(position: usize, rules: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        Self {
            position,
            rules: rules
                .into_iter()
                .map(|(a, b)| (Arc::from(a.as_ref()), Arc::from(b.as_ref())))
                .collect(),
        }
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn rules(&self) -> &BTreeMap<Token, Token> {
        &self.rules
    }

    fn record_for(&self, label: &BasisLabel) -> Result<&Token> {
        label
            .token(self.position)
            .and_then(|tok| self.rules.get(tok))
            .ok_or_else(|| SimError::IncompleteCoupling {
                label: label.clone(),
                position: self.position,
            })
    }
}

/// Moves each amplitude from `k` to `k ⊕ rule(k)`. Distinct labels stay
/// distinct, so the map is an exact isometry.
pub fn append_record(c: &RecordCoupling, s: &StateVector) -> Result<StateVector> {
    let mut amplitudes = BTreeMap::new();
    for (label, amp) in &s.amplitudes {
        let record = c.record_for(label)?;
        if !s.alphabet.allows(label.len(), record) {
            return Err(SimError::UnknownToken {
                token: record.to_string(),
                position: label.len(),
            });
        }
        amplitudes.insert(label.appended(Arc::clone(record)), *amp);
    }
    Ok(StateVector {
        alphabet: Arc::clone(&s.alphabet),
        amplitudes,
    })
}
