use std::f64::consts::PI;

use blockade_cluster::ensemble::{blockade_absorb, gate_h, gate_phase, gate_x, transfer_to_storage, AbsorptionModel, Level};
use blockade_cluster::growth::{run_trial, GrowthPolicy, Pairing};
use blockade_cluster::optics::{beam_splitter, detect_all_probabilities, DetectorModel, TwoModeUnitary};
use blockade_cluster::sampling::trial_rng;
use blockade_cluster::state::{HybridState, Subsystem};
use num_complex::Complex64;
use proptest::prelude::*;

const CUTOFF: u8 = 3;

fn hybrid_layout() -> Vec<Subsystem> {
    vec![Subsystem::Ensemble, Subsystem::Mode { cutoff: CUTOFF }, Subsystem::Mode { cutoff: CUTOFF }]
}

/// Labels `(level, n1, n2)` with `n1 + n2 ≤ cutoff`, so any beam splitter
/// on the two modes stays inside the truncation.
fn hybrid_labels() -> Vec<[u8; 3]> {
    let mut out = Vec::new();
    for level in 0..4 {
        for n1 in 0..=CUTOFF {
            for n2 in 0..=CUTOFF - n1 {
                out.push([level, n1, n2]);
            }
        }
    }
    out
}

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
        .prop_filter("nonzero", |v: &Vec<Complex64>| v.iter().map(|c| c.norm_sqr()).sum::<f64>() > 1e-6)
}

fn random_hybrid() -> impl Strategy<Value = HybridState> {
    let labels = hybrid_labels();
    complex_vec(labels.len())
        .prop_map(move |amps| HybridState::from_amplitudes(hybrid_layout(), labels.iter().zip(amps)).unwrap().normalized().unwrap())
}

fn random_logical_pair() -> impl Strategy<Value = HybridState> {
    let (g, s) = (Level::G.index(), Level::S.index());
    complex_vec(4).prop_map(move |a| {
        let labels = [[g, g], [g, s], [s, g], [s, s]];
        HybridState::from_amplitudes(vec![Subsystem::Ensemble; 2], labels.iter().zip(a)).unwrap().normalized().unwrap()
    })
}

fn random_unitary() -> impl Strategy<Value = TwoModeUnitary> {
    (0.0..PI / 2.0, 0.0..2.0 * PI, 0.0..2.0 * PI, 0.0..2.0 * PI).prop_map(|(theta, a, b, c)| {
        let (ct, st) = (theta.cos(), theta.sin());
        let e = |x: f64| Complex64::from_polar(1.0, x);
        TwoModeUnitary::new([[e(a) * ct, e(b) * st], [-e(c - b) * st, e(c - a) * ct]])
    })
}

fn distance(a: &HybridState, b: &HybridState) -> f64 {
    a.plus(&b.scaled(Complex64::new(-1.0, 0.0))).unwrap().norm()
}

fn photons(label: &[u8]) -> u8 {
    label[1] + label[2]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn beam_splitter_is_unitary_and_conserves_photons(s in random_hybrid()) {
        let out = beam_splitter(&s, 1, 2).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
        for n in 0..=CUTOFF {
            let weight = |x: &HybridState| x.iter().filter(|(l, _)| photons(l) == n).map(|(_, a)| a.norm_sqr()).sum::<f64>();
            prop_assert!((weight(&s) - weight(&out)).abs() < 1e-12);
        }
        let back = TwoModeUnitary::balanced().adjoint().apply(&out, 1, 2).unwrap();
        prop_assert!(distance(&back, &s) < 1e-12);
    }

    #[test]
    fn general_two_mode_unitaries_preserve_inner_products(s in random_hybrid(), t in random_hybrid(), u in random_unitary()) {
        let before = s.inner(&t).unwrap();
        let after = u.apply(&s, 1, 2).unwrap().inner(&u.apply(&t, 1, 2).unwrap()).unwrap();
        prop_assert!((before - after).norm() < 1e-12);
    }

    #[test]
    fn logical_gates_are_unitary(s in random_logical_pair(), a in -PI..PI, b in -PI..PI) {
        for e in 0..2 {
            for out in [gate_x(&s, e).unwrap(), gate_h(&s, e).unwrap(), gate_phase(&s, e, a).unwrap()] {
                prop_assert!((out.norm() - 1.0).abs() < 1e-12);
            }
            prop_assert!(distance(&gate_x(&gate_x(&s, e).unwrap(), e).unwrap(), &s) < 1e-12);
            prop_assert!(distance(&gate_h(&gate_h(&s, e).unwrap(), e).unwrap(), &s) < 1e-12);
            let ab = gate_phase(&gate_phase(&s, e, a).unwrap(), e, b).unwrap();
            prop_assert!(distance(&ab, &gate_phase(&s, e, a + b).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn absorption_preserves_trace_and_positivity(s in random_hybrid(), p in 0.0f64..=1.0) {
        let abs = AbsorptionModel::new(p).unwrap();
        let rho = blockade_absorb(&s.to_density(), 0, 1, &abs).unwrap();
        prop_assert!((rho.trace() - 1.0).abs() < 1e-12);
        prop_assert!(rho.hermiticity_defect() < 1e-12);
        prop_assert!(rho.eigenvalues().iter().all(|&l| l >= -1e-10));
    }

    #[test]
    fn blockaded_ensemble_never_absorbs(s in random_hybrid(), p in 0.0f64..=1.0) {
        let r1 = Level::R1.index();
        let blocked = s.restricted(0, &[r1]).unwrap();
        prop_assume!(blocked.norm_sqr() > 1e-9);
        let blocked = blocked.normalized().unwrap();
        let rho = blockade_absorb(&blocked.to_density(), 0, 1, &AbsorptionModel::new(p).unwrap()).unwrap();
        for ((row, col), v) in rho.iter() {
            prop_assert!((*v - blocked.to_density().element(row, col)).norm() < 1e-12);
        }
        // Starting from e, at most one excitation is ever created, however many photons arrive.
        let e = Level::E.index();
        let fresh = HybridState::basis(hybrid_layout(), &[e, CUTOFF, 0]).unwrap();
        let once = blockade_absorb(&fresh.to_density(), 0, 1, &AbsorptionModel::new(p).unwrap()).unwrap();
        let twice = blockade_absorb(&once, 0, 1, &AbsorptionModel::new(p).unwrap()).unwrap();
        let absorbed: f64 = twice.level_weights(0).unwrap()[r1 as usize];
        let photons_left: f64 = twice.level_weights(1).unwrap()[(CUTOFF - 1) as usize];
        prop_assert!((absorbed - photons_left).abs() < 1e-12);
    }

    #[test]
    fn povm_is_complete(eta in 0.0f64..=1.0, rate in 0.0f64..1e6, gate in 1e-9f64..1e-3, resolving: bool, n in 0u8..=4) {
        let det = DetectorModel::new(eta, rate, gate).unwrap().number_resolving(resolving);
        let probs: Vec<f64> = det.outcomes(4).map(|o| det.likelihood(n, o)).collect();
        prop_assert!(probs.iter().all(|&q| (0.0..=1.0 + 1e-15).contains(&q)));
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detection_outcomes_sum_to_one(s in random_hybrid(), eta in 0.0f64..=1.0, rate in 0.0f64..1e5, resolving: bool) {
        let det = DetectorModel::new(eta, rate, 5e-6).unwrap().number_resolving(resolving);
        let branches = detect_all_probabilities(&s, &[1, 2], &det).unwrap();
        let total: f64 = branches.values().map(|b| b.probability).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
        for b in branches.values() {
            if let Some(rho) = &b.state {
                prop_assert!((rho.trace() - 1.0).abs() < 1e-10);
                prop_assert!(rho.level_weights(1).unwrap()[0] > 1.0 - 1e-10);
            }
        }
    }

    #[test]
    fn projective_partition_is_complete(s in random_hybrid(), split in 0u8..4) {
        let (low, high): (Vec<u8>, Vec<u8>) = (0..4).partition(|&l| l <= split);
        let mut p = s.measure_projective(0, &low).unwrap().probability;
        if !high.is_empty() {
            p += s.measure_projective(0, &high).unwrap().probability;
        }
        prop_assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_undoes_pure_ancilla(s in random_logical_pair(), n in 0u8..=2) {
        let joint = s.tensor(&HybridState::fock(n, 2).unwrap());
        let reduced = joint.to_density().partial_trace(&[0, 1]).unwrap();
        let direct = s.to_density();
        for ((row, col), v) in direct.iter() {
            prop_assert!((*v - reduced.element(row, col)).norm() < 1e-12);
        }
        prop_assert!((reduced.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn storage_transfer_preserves_norm(a in complex_vec(4)) {
        let (e, r1) = (Level::E.index(), Level::R1.index());
        let labels = [[e, e], [e, r1], [r1, e], [r1, r1]];
        let s = HybridState::from_amplitudes(vec![Subsystem::Ensemble; 2], labels.iter().zip(a)).unwrap().normalized().unwrap();
        let t = transfer_to_storage(&transfer_to_storage(&s, 0).unwrap(), 1).unwrap();
        prop_assert!((t.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn growth_ledger_balances(
        q in prop::sample::select(vec![4u32, 6, 8]),
        extra in 0u32..=12,
        pairing in prop::sample::select(vec![Pairing::LargestFirst, Pairing::SmallestFirst, Pairing::Random]),
        pool in 2usize..=4,
        eta in 0.3f64..=1.0,
        eta_link in 0.0f64..=1.0,
        seed: u64,
    ) {
        let mut policy = GrowthPolicy::new(q, q + extra).unwrap().with_pairing(pairing);
        policy.pool_size = pool;
        policy.cap = 20_000;
        let rec = run_trial(&policy, eta, eta_link, &mut trial_rng(seed, 0)).unwrap();
        let inv = &rec.inventory;
        prop_assert_eq!(inv.qubits_created(q), inv.qubits_accounted());
        prop_assert!(inv.clusters.iter().all(|&c| c >= 2));
        prop_assert!(inv.elapsed_steps <= policy.cap);
        prop_assert_eq!(inv.elapsed_steps, inv.generation_attempts + inv.link_attempts);
    }
}
