//! Prebuilt scenarios for the worked examples: Stern-Gerlach detection,
//! the measurement window, the pulsed-decay (Zeno) tape, and the hang-up
//! pathology with its escape vectors.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64;

use crate::consciousness::{AdmissibleSpec, QualiaLabel};
use crate::dynamics::{Scenario, Step};
use crate::error::{Result, SimError};
use crate::statespace::{normalize, Alphabet, BasisLabel, RecordCoupling, StateVector, UnitaryStep};
use crate::tolerances::Tolerances;

/// Overlap between the escape vector Φ and the state it rescues.
pub const PHI_OVERLAP: f64 = 0.999;

/// Largest number of escape vectors the hang-up alphabet can hold.
pub const MAX_ESCAPES: usize = 1000;

fn lbl(text: &str) -> BasisLabel {
    BasisLabel::parse(text).expect("builtin labels are non-empty")
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn real_rotation(from: BasisLabel, to: BasisLabel, cos: f64, sin: f64) -> Result<UnitaryStep> {
    UnitaryStep::new(
        vec![from, to],
        vec![vec![re(cos), re(-sin)], vec![re(sin), re(cos)]],
        Tolerances::default().unitary,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SternGerlachParams {
    p_up: f64,
}

impl SternGerlachParams {
    pub fn new(p_up: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_up) {
            return Err(SimError::InvalidParameter(format!("p_up = {p_up} outside [0, 1]")));
        }
        Ok(Self { p_up })
    }

    pub fn p_up(&self) -> f64 {
        self.p_up
    }
}

/// Spin prepared with Born weight `p_up` on spin-up, then routed to a green
/// (up) or red (down) lamp. Blue is the lamp-off sector before detection.
pub fn stern_gerlach_scenario(p: SternGerlachParams) -> Result<Scenario> {
    let alphabet = Arc::new(Alphabet::from_tokens(&[&["+", "-"], &["B", "G", "R"]], None)?);
    let tol = Tolerances::default();
    let spec = AdmissibleSpec::new(
        vec![
            ("Blue".into(), vec![lbl("+,B"), lbl("-,B")]),
            ("Green".into(), vec![lbl("+,G")]),
            ("Red".into(), vec![lbl("-,R")]),
        ],
        vec![],
        tol.norm,
    )?;
    let prepare = real_rotation(lbl("+,B"), lbl("-,B"), p.p_up.sqrt(), (1.0 - p.p_up).sqrt())?;
    // (+,B)→(+,G), (−,B)→(−,R), and back, so the map stays a permutation.
    let detect = UnitaryStep::permutation(vec![lbl("+,B"), lbl("-,B"), lbl("+,G"), lbl("-,R")], &[2, 3, 0, 1])?;
    Scenario::new(
        format!("stern-gerlach(p_up={})", p.p_up),
        StateVector::basis(alphabet, lbl("+,B"))?,
        spec,
        vec![
            Step::Unitary(prepare),
            Step::Unitary(detect),
            Step::Enforce,
            Step::Observe("lamp".into()),
        ],
        tol,
    )
}

/// How the states inside a finite-duration measurement are labeled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowPolicy {
    /// Blue strictly before the midpoint, Green from the midpoint on.
    Threshold,
    /// Every intermediate direction is its own blended qualia.
    Blend,
}

pub fn blend_label(k: usize) -> QualiaLabel {
    QualiaLabel::new(format!("Blend{k}"))
}

/// A spin-up electron passing the detector over a window Δt, with the state
/// interpolated linearly between blue and green: `[(1 − t/Δt)B + (t/Δt)G]/N`
/// sampled at `n_substeps` evenly spaced times including both endpoints.
/// Every sample direction is declared admissible, so enforcement never acts.
pub fn window_scenario(policy: WindowPolicy, n_substeps: usize) -> Result<Scenario> {
    if n_substeps < 2 {
        return Err(SimError::InvalidParameter("window needs at least 2 substeps".into()));
    }
    let alphabet = Arc::new(Alphabet::from_tokens(&[&["+"], &["B", "G"]], None)?);
    let tol = Tolerances::default();
    let (blue, green) = (lbl("+,B"), lbl("+,G"));
    let last = (n_substeps - 1) as f64;

    let mut angles = Vec::with_capacity(n_substeps);
    let mut extras = Vec::with_capacity(n_substeps);
    for k in 0..n_substeps {
        let t = k as f64 / last;
        let direction = normalize(&StateVector::new(
            alphabet.clone(),
            [(blue.clone(), re(1.0 - t)), (green.clone(), re(t))],
        )?)?;
        let qualia = match policy {
            WindowPolicy::Threshold if t < 0.5 => "Blue".into(),
            WindowPolicy::Threshold => "Green".into(),
            WindowPolicy::Blend => blend_label(k),
        };
        angles.push(t.atan2(1.0 - t));
        extras.push((direction, qualia));
    }
    let spec = AdmissibleSpec::new(vec![], extras, tol.norm)?;

    let mut schedule = Vec::with_capacity(3 * (n_substeps - 1));
    for k in 1..n_substeps {
        let delta = angles[k] - angles[k - 1];
        schedule.push(Step::Unitary(real_rotation(blue.clone(), green.clone(), delta.cos(), delta.sin())?));
        schedule.push(Step::Enforce);
        schedule.push(Step::Observe(format!("t={k}/{}", n_substeps - 1)));
    }
    let name = match policy {
        WindowPolicy::Threshold => "window-threshold",
        WindowPolicy::Blend => "window-blend",
    };
    Scenario::new(
        format!("{name}(n={n_substeps})"),
        StateVector::basis(alphabet, blue)?,
        spec,
        schedule,
        tol,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZenoParams {
    theta: f64,
    pulses: usize,
}

impl ZenoParams {
    pub fn new(theta: f64, pulses: usize) -> Result<Self> {
        if !(0.0..=FRAC_PI_2).contains(&theta) {
            return Err(SimError::InvalidParameter(format!("theta = {theta} outside [0, π/2]")));
        }
        Ok(Self { theta, pulses })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn pulses(&self) -> usize {
        self.pulses
    }

    /// Qualia of the undecayed ion with an all-idle tape after every pulse.
    pub fn survival_label(&self) -> QualiaLabel {
        QualiaLabel::new(zeno_label("U", self.pulses + 1, 0).to_string())
    }
}

fn zeno_label(system: &str, idle: usize, alarms: usize) -> BasisLabel {
    let tokens = std::iter::once(system)
        .chain(std::iter::repeat_n("I", idle))
        .chain(std::iter::repeat_n("A", alarms));
    BasisLabel::new(tokens).expect("system token is always present")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ZenoMode {
    Deferred,
    Enforced,
    Unmonitored,
}

/// Pulsed decay of a two-level ion watched by a detector that writes to a
/// tape: per pulse the undecayed branch rotates by θ (`U → cos θ U + sin θ D`)
/// and the detector appends `I` (ion in U) or `A` (ion in D).
///
/// With `deferred` the tape stays in superposition until a single terminal
/// readout; otherwise every tape record is enforced as it is written. Each
/// full label (ion and tape) is its own definite qualia.
pub fn zeno_scenario(z: ZenoParams, deferred: bool) -> Result<Scenario> {
    build_zeno(z, if deferred { ZenoMode::Deferred } else { ZenoMode::Enforced })
}

/// The same rotations with no detector records at all. Survival is read from
/// the qualia returned by [`zeno_unmonitored_survival_label`].
pub fn zeno_unmonitored_scenario(z: ZenoParams) -> Result<Scenario> {
    build_zeno(z, ZenoMode::Unmonitored)
}

pub fn zeno_unmonitored_survival_label() -> QualiaLabel {
    QualiaLabel::new("U,I")
}

fn build_zeno(z: ZenoParams, mode: ZenoMode) -> Result<Scenario> {
    let alphabet = Arc::new(Alphabet::from_tokens(&[&["U", "D"]], Some(&["I", "A"]))?);
    let tol = Tolerances::default();

    // Reachable tapes are I^a A^b with a ≥ 1: once the alarm fires it stays.
    let max_len = if mode == ZenoMode::Unmonitored { 1 } else { z.pulses + 1 };
    let mut subspaces = Vec::new();
    for len in 1..=max_len {
        for idle in (1..=len).rev() {
            for system in ["U", "D"] {
                let label = zeno_label(system, idle, len - idle);
                subspaces.push((QualiaLabel::new(label.to_string()), vec![label]));
            }
        }
    }
    let spec = AdmissibleSpec::new(subspaces, vec![], tol.norm)?;

    let record = RecordCoupling::new(0, [("U", "I"), ("D", "A")]);
    let mut schedule = Vec::new();
    for pulse in 0..z.pulses {
        let idle = if mode == ZenoMode::Unmonitored { 1 } else { pulse + 1 };
        schedule.push(Step::Unitary(UnitaryStep::rotation(
            zeno_label("U", idle, 0),
            zeno_label("D", idle, 0),
            z.theta,
        )?));
        if mode != ZenoMode::Unmonitored {
            schedule.push(Step::Record(record.clone()));
        }
        if mode == ZenoMode::Enforced {
            schedule.push(Step::Enforce);
        }
    }
    if mode != ZenoMode::Enforced || z.pulses == 0 {
        schedule.push(Step::Enforce);
    }
    schedule.push(Step::Observe("readout".into()));

    let name = match mode {
        ZenoMode::Deferred => "zeno-deferred",
        ZenoMode::Enforced => "zeno-collapse",
        ZenoMode::Unmonitored => "zeno-unmonitored",
    };
    Scenario::new(
        format!("{name}(theta={},pulses={})", z.theta, z.pulses),
        StateVector::basis(alphabet, zeno_label("U", 1, 0))?,
        spec,
        schedule,
        tol,
    )
    .map(|sc| sc.with_metadata("theta", z.theta.to_string()).with_metadata("pulses", z.pulses.to_string()))
}

/// Naive equal-branch-count prediction next to the Born prediction.
pub fn everett_comparator(p_up: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&p_up) {
        return Err(SimError::InvalidParameter(format!("p_up = {p_up} outside [0, 1]")));
    }
    if p_up == 0.0 || p_up == 1.0 {
        return Err(SimError::DegenerateBranching(p_up));
    }
    Ok((0.5, p_up))
}

fn hangup_alphabet() -> Result<Arc<Alphabet>> {
    let tokens: BTreeSet<String> = ["a", "b"]
        .into_iter()
        .map(String::from)
        .chain((1..=MAX_ESCAPES).map(|k| format!("e{k}")))
        .collect();
    Ok(Arc::new(Alphabet::new(vec![tokens], None)?))
}

/// The only admissible state is `|a⟩` (Blue) and the unitary rotates it onto
/// the orthogonal `|b⟩`. Enforcement has nowhere to go.
pub fn hangup_scenario() -> Result<Scenario> {
    let tol = Tolerances::default();
    let spec = AdmissibleSpec::new(vec![("Blue".into(), vec![lbl("a")])], vec![], tol.norm)?;
    Scenario::new(
        "hangup",
        StateVector::basis(hangup_alphabet()?, lbl("a"))?,
        spec,
        vec![
            Step::Unitary(UnitaryStep::rotation(lbl("a"), lbl("b"), FRAC_PI_2)?),
            Step::Enforce,
            Step::Observe("after".into()),
        ],
        tol,
    )
}

/// Escape vector `k` (1-based): `0.999|b⟩ + √(1 − 0.999²)|e_k⟩`, qualia `Phi{k}`.
pub fn escape_vector(alphabet: &Arc<Alphabet>, k: usize) -> Result<(StateVector, QualiaLabel)> {
    if k == 0 || k > MAX_ESCAPES {
        return Err(SimError::InvalidParameter(format!("escape index {k} outside 1..={MAX_ESCAPES}")));
    }
    let state = StateVector::new(
        alphabet.clone(),
        [
            (lbl("b"), re(PHI_OVERLAP)),
            (lbl(&format!("e{k}")), re((1.0 - PHI_OVERLAP * PHI_OVERLAP).sqrt())),
        ],
    )?;
    Ok((state, QualiaLabel::new(format!("Phi{k}"))))
}

/// [`hangup_scenario`] with `count` escape vectors added.
pub fn hangup_with_escapes(count: usize) -> Result<Scenario> {
    let mut sc = hangup_scenario()?;
    let alphabet = sc.alphabet().clone();
    for k in 1..=count {
        let (state, qualia) = escape_vector(&alphabet, k)?;
        sc = sc.with_extra_admissible(state, qualia)?;
    }
    Ok(sc)
}

/// Rotation angle that carries the admissible `|psi⟩` just into the hole in
/// [`phi_overlap_scenario`].
pub const PHI_NUDGE: f64 = 1e-5;

/// A state nudged out of its admissible direction `|psi⟩` (Blue) while a
/// second admissible vector Φ (qualia `Phi`) has overlap exactly 0.999 with
/// the nudged state. Candidate weights are `cos²(PHI_NUDGE) ≈ 1` and
/// `0.998001`, so the two outcomes are almost equally likely.
pub fn phi_overlap_scenario() -> Result<Scenario> {
    let alphabet = Arc::new(Alphabet::from_tokens(&[&["psi", "hole", "perp"]], None)?);
    // The nudge moves weight 1e-10 off |psi⟩, so membership must be tighter.
    let tol = Tolerances {
        class: 1e-12,
        ..Tolerances::default()
    };
    let (s, c) = PHI_NUDGE.sin_cos();
    let spill = (1.0 - PHI_OVERLAP * PHI_OVERLAP).sqrt();
    let phi = StateVector::new(
        alphabet.clone(),
        [
            (lbl("psi"), re(PHI_OVERLAP * c)),
            (lbl("hole"), re(PHI_OVERLAP * s)),
            (lbl("perp"), re(spill)),
        ],
    )?;
    let spec = AdmissibleSpec::new(
        vec![("Blue".into(), vec![lbl("psi")])],
        vec![(phi, "Phi".into())],
        tol.norm,
    )?;
    Scenario::new(
        "phi-overlap",
        StateVector::basis(alphabet, lbl("psi"))?,
        spec,
        vec![
            Step::Unitary(UnitaryStep::rotation(lbl("psi"), lbl("hole"), PHI_NUDGE)?),
            Step::Enforce,
            Step::Observe("after".into()),
        ],
        tol,
    )
}

/// The vacuum with nothing scheduled: null consciousness throughout.
pub fn vacuum_scenario() -> Result<Scenario> {
    let alphabet = Arc::new(Alphabet::from_tokens(&[&["0"]], None)?);
    let spec = AdmissibleSpec::new(vec![(QualiaLabel::null(), vec![lbl("0")])], vec![], 1e-10)?;
    Scenario::new(
        "vacuum",
        StateVector::basis(alphabet, lbl("0"))?,
        spec,
        vec![],
        Tolerances::default(),
    )
}

pub const BUILTIN_NAMES: &[&str] = &[
    "stern-gerlach-5050",
    "stern-gerlach-99",
    "stern-gerlach-up",
    "hangup",
    "hangup-escape",
    "hangup-escape-1000",
    "phi-overlap",
    "window-threshold",
    "window-blend",
    "zeno-deferred",
    "zeno-collapse",
    "vacuum",
];

/// Looks up a named prebuilt scenario.
pub fn builtin_scenario(name: &str) -> Result<Scenario> {
    let zeno = || ZenoParams::new(0.3, 2);
    match name {
        "stern-gerlach-5050" => stern_gerlach_scenario(SternGerlachParams::new(0.5)?),
        "stern-gerlach-99" => stern_gerlach_scenario(SternGerlachParams::new(0.99)?),
        "stern-gerlach-up" => stern_gerlach_scenario(SternGerlachParams::new(1.0)?),
        "hangup" => hangup_scenario(),
        "hangup-escape" => hangup_with_escapes(1),
        "hangup-escape-1000" => hangup_with_escapes(1000),
        "phi-overlap" => phi_overlap_scenario(),
        "window-threshold" => window_scenario(WindowPolicy::Threshold, 10),
        "window-blend" => window_scenario(WindowPolicy::Blend, 10),
        "zeno-deferred" => zeno_scenario(zeno()?, true),
        "zeno-collapse" => zeno_scenario(zeno()?, false),
        "vacuum" => vacuum_scenario(),
        other => Err(SimError::InvalidParameter(format!(
            "unknown builtin `{other}` (known: {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}
