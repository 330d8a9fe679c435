use std::sync::Arc;

use admissible_core::consciousness::classify_rows;
use admissible_core::dynamics::{run_ensemble, run_trajectory, Scenario, Step};
use admissible_core::{
    append_record, apply_unitary, classify, enforce, inner_product, normalize, overlap_table, AdmissibleSpec,
    Alphabet, BasisLabel, Classification, RecordCoupling, RngStream, StateVector, Tolerances, UnitaryStep,
};
use num_complex::Complex64;
use proptest::prelude::*;

const DIM: usize = 6;

fn alphabet() -> Arc<Alphabet> {
    let tokens: Vec<String> = (0..DIM).map(|i| format!("t{i}")).collect();
    let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
    Arc::new(Alphabet::from_tokens(&[&refs], Some(&["I", "A"])).unwrap())
}

fn label(i: usize) -> BasisLabel {
    BasisLabel::new([format!("t{i}")]).unwrap()
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn unit_state() -> impl Strategy<Value = StateVector> {
    complex_vec(DIM)
        .prop_filter("non-null", |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let raw = StateVector::new(alphabet(), v.into_iter().enumerate().map(|(i, z)| (label(i), z))).unwrap();
            normalize(&raw).unwrap()
        })
}

/// Gram–Schmidt on random columns gives a random unitary.
fn gram_schmidt(cols: Vec<Vec<Complex64>>) -> Option<Vec<Vec<Complex64>>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    for mut v in cols {
        for b in &basis {
            let proj: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n < 1e-3 {
            return None;
        }
        basis.push(v.into_iter().map(|z| z / n).collect());
    }
    // basis[j] is column j; convert to rows.
    let d = basis.len();
    Some((0..d).map(|i| (0..d).map(|j| basis[j][i]).collect()).collect())
}

fn unitary() -> impl Strategy<Value = UnitaryStep> {
    (2usize..=4, 0usize..DIM)
        .prop_flat_map(|(d, offset)| (Just(offset), prop::collection::vec(complex_vec(d), d)))
        .prop_filter_map("degenerate columns", |(offset, cols)| {
            let d = cols.len();
            let rows = gram_schmidt(cols)?;
            let domain = (0..d).map(|k| label((offset + k) % DIM)).collect();
            UnitaryStep::new(domain, rows, 1e-10).ok()
        })
}

fn sector_spec() -> AdmissibleSpec {
    AdmissibleSpec::new(
        vec![
            ("Blue".into(), vec![label(0), label(1)]),
            ("Green".into(), vec![label(2)]),
            ("Red".into(), vec![label(3), label(4), label(5)]),
        ],
        vec![],
        1e-10,
    )
    .unwrap()
}

/// A random state confined to one sector of [`sector_spec`].
fn definite_state() -> impl Strategy<Value = StateVector> {
    (0usize..3, complex_vec(3))
        .prop_filter("non-null", |(_, v)| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-3)
        .prop_map(|(sector, v)| {
            let labels: Vec<usize> = match sector {
                0 => vec![0, 1],
                1 => vec![2],
                _ => vec![3, 4, 5],
            };
            let raw = StateVector::new(alphabet(), labels.into_iter().zip(v).map(|(i, z)| (label(i), z))).unwrap();
            normalize(&raw).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn unitary_preserves_norm(u in unitary(), s in unit_state()) {
        let out = apply_unitary(&u, &s).unwrap();
        prop_assert!((out.norm_sqr().sqrt() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unitary_then_adjoint_is_identity(u in unitary(), s in unit_state()) {
        let back = apply_unitary(&u.adjoint(), &apply_unitary(&u, &s).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&s) < 1e-9);
    }

    #[test]
    fn inner_product_conjugate_symmetric(a in unit_state(), b in unit_state()) {
        let ab = inner_product(&a, &b).unwrap();
        let ba = inner_product(&b, &a).unwrap();
        prop_assert!((ab - ba.conj()).norm() < 1e-15);
        prop_assert!((inner_product(&a, &a).unwrap() - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn record_is_isometry(s in unit_state(), flips in prop::collection::vec(any::<bool>(), DIM)) {
        let rules: Vec<(String, &str)> = flips
            .iter()
            .enumerate()
            .map(|(i, f)| (format!("t{i}"), if *f { "A" } else { "I" }))
            .collect();
        let c = RecordCoupling::new(0, rules);
        let out = append_record(&c, &s).unwrap();
        prop_assert_eq!(out.norm_sqr(), s.norm_sqr());
        prop_assert_eq!(out.len(), s.len());
        let twice = append_record(&c, &out).unwrap();
        prop_assert_eq!(twice.norm_sqr(), s.norm_sqr());
    }

    #[test]
    fn classify_ignores_global_phase(s in unit_state(), theta in 0.0f64..std::f64::consts::TAU) {
        let spec = sector_spec();
        let tol = Tolerances::default();
        let rotated = s.with_global_phase(theta);
        prop_assert_eq!(classify(&spec, &rotated, &tol).unwrap(), classify(&spec, &s, &tol).unwrap());
    }

    #[test]
    fn definite_state_phase_invariant(s in definite_state(), theta in 0.0f64..std::f64::consts::TAU) {
        let spec = sector_spec();
        let tol = Tolerances::default();
        let c = classify(&spec, &s, &tol).unwrap();
        prop_assert!(c.is_definite());
        prop_assert_eq!(classify(&spec, &s.with_global_phase(theta), &tol).unwrap(), c);
    }

    #[test]
    fn definite_states_are_candidate_fixed_points(s in definite_state()) {
        let spec = sector_spec();
        let tol = Tolerances::default();
        let rows = overlap_table(&spec, &s, &tol).unwrap();
        let Classification::Definite(q) = classify_rows(&rows, tol.class) else {
            return Err(TestCaseError::fail("expected definite"));
        };
        let row = rows.iter().find(|r| r.qualia == q).unwrap();
        prop_assert!(row.weight > 1.0 - tol.class);
        let candidate = spec.candidate_state(row.candidate, &s).unwrap();
        // Equal up to global phase: |⟨c|s⟩| = 1.
        prop_assert!((inner_product(&candidate, &s).unwrap().norm() - 1.0).abs() < tol.class);
    }

    #[test]
    fn classify_agrees_with_overlap_table(s in unit_state()) {
        let spec = sector_spec();
        let tol = Tolerances::default();
        if let Classification::Definite(q) = classify(&spec, &s, &tol).unwrap() {
            let rows = overlap_table(&spec, &s, &tol).unwrap();
            prop_assert!(rows.iter().any(|r| r.qualia == q && r.weight > 1.0 - tol.class));
        }
    }

    #[test]
    fn enforcement_is_idempotent(s in unit_state(), seed in any::<u64>()) {
        let spec = sector_spec();
        let tol = Tolerances::default();
        let mut rng = RngStream::new(seed);
        let (once, _) = enforce(&spec, &s, &tol, &mut rng).unwrap();
        prop_assert!(classify(&spec, &once, &tol).unwrap().is_definite());
        let (twice, rec) = enforce(&spec, &once, &tol, &mut rng).unwrap();
        prop_assert!(!rec.occurred);
        prop_assert_eq!(twice, once);
    }

    #[test]
    fn enforcement_noop_on_definite(s in definite_state(), seed in any::<u64>()) {
        let spec = sector_spec();
        let mut rng = RngStream::new(seed);
        let (out, rec) = enforce(&spec, &s, &Tolerances::default(), &mut rng).unwrap();
        prop_assert!(!rec.occurred);
        prop_assert_eq!(rng.counter(), 0);
        for ((ka, a), (kb, b)) in out.iter().zip(s.iter()) {
            prop_assert_eq!(ka, kb);
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        prop_assert_eq!(out.len(), s.len());
    }
}

fn blue_sector_scenario(angles: &[f64], enforce_each: bool) -> Scenario {
    let spec = sector_spec();
    let mut schedule = Vec::new();
    for (k, &theta) in angles.iter().enumerate() {
        // Alternate which blue label rotates into the other, adding a phase.
        let (a, b) = if k % 2 == 0 { (0, 1) } else { (1, 0) };
        let (s, c) = theta.sin_cos();
        let phase = Complex64::from_polar(1.0, theta);
        let u = UnitaryStep::new(
            vec![label(a), label(b)],
            vec![
                vec![Complex64::new(c, 0.0), -phase.conj() * s],
                vec![phase * s, Complex64::new(c, 0.0)],
            ],
            1e-12,
        )
        .unwrap();
        schedule.push(Step::Unitary(u));
        if enforce_each {
            schedule.push(Step::Enforce);
        }
    }
    schedule.push(Step::Observe("end".into()));
    Scenario::new(
        "blue",
        StateVector::basis(alphabet(), label(0)).unwrap(),
        spec,
        schedule,
        Tolerances::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Frequent enforcement inside one qualia sector does not change the motion.
    #[test]
    fn no_zeno_inside_a_sector(angles in prop::collection::vec(-3.0f64..3.0, 1..40), seed in any::<u64>()) {
        let watched = run_trajectory(&blue_sector_scenario(&angles, true), seed).unwrap();
        let free = run_trajectory(&blue_sector_scenario(&angles, false), seed).unwrap();
        prop_assert_eq!(watched.projection_count(), 0);
        prop_assert!(watched.final_state.max_abs_diff(&free.final_state) < 1e-9);
    }

    #[test]
    fn trajectories_replay_bit_exact(seed in any::<u64>(), p in 0.05f64..0.95) {
        let sc = admissible_core::experiments::stern_gerlach_scenario(
            admissible_core::experiments::SternGerlachParams::new(p).unwrap(),
        )
        .unwrap();
        let a = run_trajectory(&sc, seed).unwrap();
        let b = run_trajectory(&sc, seed).unwrap();
        prop_assert_eq!(&a.qualia_history, &b.qualia_history);
        prop_assert_eq!(&a.projections, &b.projections);
        let draw = |t: &admissible_core::TrajectoryResult| t.projections[0].record.rng_draw.unwrap().to_bits();
        prop_assert_eq!(draw(&a), draw(&b));
    }

    #[test]
    fn ensemble_independent_of_workers(seed in any::<u64>(), n in 1u64..200, workers in 2usize..9) {
        let sc = admissible_core::experiments::builtin_scenario("stern-gerlach-5050").unwrap();
        let serial = run_ensemble(&sc, n, seed, 1).unwrap();
        let parallel = run_ensemble(&sc, n, seed, workers).unwrap();
        prop_assert_eq!(serial, parallel);
    }
}

/// Empirical sampling frequencies match relative probabilities within 3σ.
#[test]
fn born_statistics_per_candidate() {
    let n = 100_000u32;
    for (case, weights) in [vec![0.5, 0.5], vec![0.99, 0.01], vec![0.2, 0.3, 0.1, 0.4], vec![1.0, 0.998001]]
        .into_iter()
        .enumerate()
    {
        let probs = admissible_core::relative_probabilities(&weights).unwrap();
        let mut rng = RngStream::new(1000 + case as u64);
        let mut counts = vec![0u32; probs.len()];
        for _ in 0..n {
            counts[admissible_core::sample_candidate(&probs, &mut rng).0] += 1;
        }
        for (p, c) in probs.iter().zip(&counts) {
            let freq = f64::from(*c) / f64::from(n);
            let sigma = (p * (1.0 - p) / f64::from(n)).sqrt();
            assert!((freq - p).abs() <= 3.0 * sigma, "case {case}: {freq} vs {p}");
        }
    }
}
