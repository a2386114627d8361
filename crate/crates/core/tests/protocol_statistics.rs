use blockade_cluster::ensemble::{readout, AbsorptionModel, Level};
use blockade_cluster::optics::{detect_all_probabilities, detect_modes, DetectorModel, HeraldPattern};
use blockade_cluster::protocol::{
    entangle_pair_exact, entangle_pair_exact_with, entangle_pair_sampled, ghz4_exact, ghz_success_probability, HeraldPolicy,
};
use blockade_cluster::sampling::{binomial_sigma, trial_rng};
use blockade_cluster::state::{HybridState, Subsystem};
use num_complex::Complex64;
use std::collections::BTreeMap;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn sampled_entangler_matches_exact() {
    let cases = [(1.0, 1.0, 0.0), (0.3, 1.0, 0.0), (0.3, 0.9, 0.0), (0.6, 0.95, 2e4)];
    for (k, (eta, p_abs, rate)) in cases.into_iter().enumerate() {
        let abs = AbsorptionModel::new(p_abs).unwrap();
        let det = DetectorModel::new(eta, rate, 5e-6).unwrap();
        let exact = entangle_pair_exact(&abs, &det).unwrap();
        let n = 50_000;
        let s = entangle_pair_sampled(&abs, &det, HeraldPolicy::ExactlyOne, 100 + k as u64, n).unwrap();
        let sigma = binomial_sigma(exact.success_probability, n).max(1e-12);
        assert!((s.herald_rate - exact.success_probability).abs() <= 3.0 * sigma, "case {k}: {s:?}");
        let heralds = s.up + s.down;
        assert!((s.up_fraction - 0.5).abs() <= 3.0 * binomial_sigma(0.5, heralds), "case {k}");
        let f_tol = (3.0 * s.fidelity_std_error).max(1e-9);
        assert!((s.mean_fidelity - exact.fidelity()).abs() <= f_tol, "case {k}: {} vs {}", s.mean_fidelity, exact.fidelity());
    }
}

#[test]
fn sampled_detection_matches_enumeration() {
    let layout = vec![Subsystem::Ensemble, Subsystem::Mode { cutoff: 2 }, Subsystem::Mode { cutoff: 2 }];
    let s = HybridState::from_amplitudes(
        layout,
        [([0u8, 0, 1], c(0.5, 0.0)), ([1, 1, 1], c(0.0, 0.5)), ([2, 2, 0], c(0.5, 0.5)), ([3, 0, 0], c(-0.5, 0.0))],
    )
    .unwrap()
    .normalized()
    .unwrap();
    let det = DetectorModel::new(0.4, 3e4, 5e-6).unwrap().number_resolving(true);
    let exact = detect_all_probabilities(&s, &[1, 2], &det).unwrap();
    let n = 100_000u64;
    let mut counts: BTreeMap<HeraldPattern, u64> = BTreeMap::new();
    let mut rng = trial_rng(11, 0);
    for _ in 0..n {
        let (pattern, post) = detect_modes(&s, &[1, 2], &det, &mut rng).unwrap();
        assert!((post.norm() - 1.0).abs() < 1e-12);
        *counts.entry(pattern).or_default() += 1;
    }
    for (pattern, branch) in &exact {
        let freq = counts.get(pattern).copied().unwrap_or(0) as f64 / n as f64;
        let sigma = binomial_sigma(branch.probability, n).max(1.0 / n as f64);
        assert!((freq - branch.probability).abs() <= 3.0 * sigma + 1e-12, "{pattern:?}: {freq} vs {}", branch.probability);
    }
    assert!(counts.keys().all(|p| exact.contains_key(p)));
}

#[test]
fn dark_counts_raise_heralds_and_lower_fidelity() {
    let abs = AbsorptionModel::new(0.989).unwrap();
    let mut last: Option<(f64, f64)> = None;
    for rate in [0.0, 20.0, 1e3, 1e4, 1e5] {
        let out = entangle_pair_exact(&abs, &DetectorModel::new(0.3, rate, 5e-6).unwrap()).unwrap();
        let now = (out.success_probability, out.fidelity());
        if let Some((p, f)) = last {
            assert!(now.0 > p && now.1 < f, "rate {rate}: {now:?} after {:?}", (p, f));
        }
        last = Some(now);
    }
}

#[test]
fn herald_probability_at_perfect_absorption_is_eta() {
    for eta in [0.1, 0.3, 0.5, 1.0] {
        for policy in [HeraldPolicy::ExactlyOne, HeraldPolicy::IgnoreOther] {
            let out = entangle_pair_exact_with(&AbsorptionModel::perfect(), &DetectorModel::with_efficiency(eta).unwrap(), policy).unwrap();
            assert!((out.success_probability - eta).abs() < 1e-10);
        }
    }
}

#[test]
fn ghz_exact_matches_formula() {
    for eta in [0.1, 0.3, 0.5, 1.0] {
        let out = ghz4_exact(&AbsorptionModel::perfect(), &DetectorModel::with_efficiency(eta).unwrap()).unwrap();
        assert!((out.success_probability - ghz_success_probability(4, eta).unwrap()).abs() < 1e-10);
    }
}

#[test]
fn imperfect_absorption_degrades_ghz() {
    let out = ghz4_exact(&AbsorptionModel::new(0.95).unwrap(), &DetectorModel::ideal()).unwrap();
    let f = out.fidelity();
    assert!(f < 1.0 && f > 0.8, "{f}");
}

#[test]
fn readout_collapses_partner() {
    let (g, s) = (Level::G.index(), Level::S.index());
    let pair = HybridState::from_amplitudes(
        vec![Subsystem::Ensemble; 2],
        [([g, s], c(std::f64::consts::FRAC_1_SQRT_2, 0.0)), ([s, g], c(0.0, std::f64::consts::FRAC_1_SQRT_2))],
    )
    .unwrap();
    let mut zeros = 0;
    for t in 0..2000 {
        let (bit, post) = readout(&pair, 0, &mut trial_rng(5, t)).unwrap();
        let partner = post.level_weights(1).unwrap();
        if bit == 0 {
            zeros += 1;
            assert!((partner[s as usize] - 1.0).abs() < 1e-12);
        } else {
            assert!((partner[g as usize] - 1.0).abs() < 1e-12);
        }
    }
    assert!((zeros as f64 / 2000.0 - 0.5).abs() < 3.0 * binomial_sigma(0.5, 2000));
}
