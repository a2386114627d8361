//! Four-ensemble GHZ interferometer.
//!
//! Two entanglers run side by side on (A, B) and (C, D), each up to and
//! including its second beam splitter. Their four outputs are recombined
//! pairwise, upper with upper and lower with lower, on two more balanced
//! beam splitters feeding detectors D1..D4:
//!
//! ```text
//!   AB upper ─┐         ┌─ D1        AB lower ─┐         ┌─ D2
//!             ├─ BS_up ─┤                      ├─ BS_lo ─┤
//!   CD upper ─┘         └─ D4        CD lower ─┘         └─ D3
//! ```
//!
//! One click behind each recombining beam splitter erases which entangler
//! emitted which photon and projects the ensembles onto a GHZ state up to
//! the local corrections tabulated in [`GhzCorrection::for_pattern`].

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::entangler::recombine;
use crate::ensemble::{blockade_absorb_mixture, gate_phase, gate_x, transfer_to_storage, AbsorptionModel, Level};
use crate::error::{ensure, Result};
use crate::optics::{beam_splitter, detect_mixture, DetectorModel, HeraldPattern};
use crate::state::{DensityOperator, HybridState, Mixture, Subsystem};

const ENSEMBLES: [usize; 4] = [0, 1, 2, 3];
const AB_UP: usize = 4;
const AB_DOWN: usize = 5;
const CD_UP: usize = 6;
const CD_DOWN: usize = 7;
/// Up to four photons can meet in one mode when absorption fails.
const CUTOFF: u8 = 4;
/// Modes watched by D1, D2, D3, D4.
const DETECTOR_MODES: [usize; 4] = [AB_UP, AB_DOWN, CD_DOWN, CD_UP];

/// The four accepted two-click patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GhzPattern {
    D1D2,
    D1D3,
    D4D2,
    D4D3,
}

impl GhzPattern {
    pub const ALL: [GhzPattern; 4] = [GhzPattern::D1D2, GhzPattern::D1D3, GhzPattern::D4D2, GhzPattern::D4D3];

    /// Detector numbers (1-based) that must fire.
    pub fn detectors(self) -> [usize; 2] {
        match self {
            GhzPattern::D1D2 => [1, 2],
            GhzPattern::D1D3 => [1, 3],
            GhzPattern::D4D2 => [4, 2],
            GhzPattern::D4D3 => [4, 3],
        }
    }

    fn matches(self, pattern: &HeraldPattern) -> bool {
        let mut fired: Vec<usize> = pattern.fired().into_iter().map(|d| d + 1).collect();
        let mut want = self.detectors().to_vec();
        fired.sort_unstable();
        want.sort_unstable();
        fired == want
    }

    pub fn classify(pattern: &HeraldPattern) -> Option<GhzPattern> {
        Self::ALL.into_iter().find(|p| p.matches(pattern))
    }
}

/// Local corrections applied in storage after a herald: X on `flips`, then
/// `Φ(phase)` on ensemble A.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhzCorrection {
    pub flips: Vec<usize>,
    pub phase: f64,
}

impl GhzCorrection {
    /// D1D2 and D4D3 herald `(|sgsg⟩ + |gsgs⟩)/√2`; D1D3 and D4D2 herald
    /// `(|sggs⟩ − |gssg⟩)/√2`. Both map onto `(|gggg⟩ + |ssss⟩)/√2`.
    pub fn for_pattern(pattern: GhzPattern) -> Self {
        match pattern {
            GhzPattern::D1D2 | GhzPattern::D4D3 => Self { flips: vec![1, 3], phase: 0.0 },
            GhzPattern::D1D3 | GhzPattern::D4D2 => Self { flips: vec![1, 2], phase: PI },
        }
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        let mut out = rho.clone();
        for &e in &self.flips {
            out = gate_x(&out, e)?;
        }
        if self.phase != 0.0 {
            out = gate_phase(&out, 0, self.phase)?;
        }
        Ok(out)
    }
}

/// `(|gggg⟩ + |ssss⟩)/√2` over four ensembles.
pub fn ghz_target() -> HybridState {
    let (g, s) = (Level::G.index(), Level::S.index());
    HybridState::from_amplitudes(
        vec![Subsystem::Ensemble; 4],
        [([g; 4], Complex64::new(FRAC_1_SQRT_2, 0.0)), ([s; 4], Complex64::new(FRAC_1_SQRT_2, 0.0))],
    )
    .expect("target fits four ensembles")
}

/// Largest GHZ fidelity reachable from a four-ensemble storage state with
/// local X flips and one relative phase: the maximum over complementary
/// bit-string pairs `(x, x̄)` of `(ρ_xx + ρ_x̄x̄)/2 + |ρ_xx̄|`.
pub fn best_ghz_fidelity(rho: &DensityOperator) -> f64 {
    let (g, s) = (Level::G.index(), Level::S.index());
    let mut best: f64 = 0.0;
    for bits in 0u8..8 {
        let x: Vec<u8> = (0..4).map(|k| if bits >> k & 1 == 1 { s } else { g }).collect();
        let xbar: Vec<u8> = x.iter().map(|&l| if l == g { s } else { g }).collect();
        let f = (rho.element(&x, &x).re + rho.element(&xbar, &xbar).re) / 2.0 + rho.element(&x, &xbar).norm();
        best = best.max(f);
    }
    best.clamp(0.0, 1.0)
}

#[derive(Debug, Clone)]
pub struct GhzHerald {
    pub pattern: GhzPattern,
    pub probability: f64,
    pub correction: GhzCorrection,
    /// Corrected four-ensemble storage state.
    pub conditional_state: Option<DensityOperator>,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RejectedPattern {
    pub pattern: HeraldPattern,
    pub probability: f64,
    pub best_fidelity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GhzOutcome {
    pub success_probability: f64,
    pub accepted: Vec<GhzHerald>,
    pub rejected: Vec<RejectedPattern>,
}

impl GhzOutcome {
    pub fn fidelity(&self) -> f64 {
        let (n, d) = self
            .accepted
            .iter()
            .filter_map(|h| h.fidelity.map(|f| (f * h.probability, h.probability)))
            .fold((0.0, 0.0), |(n, d), (a, b)| (n + a, d + b));
        if d > 0.0 {
            n / d
        } else {
            0.0
        }
    }
}

fn layout() -> Vec<Subsystem> {
    let mut l = vec![Subsystem::Ensemble; 4];
    l.extend([Subsystem::Mode { cutoff: CUTOFF }; 4]);
    l
}

fn pre_detection(abs: &AbsorptionModel) -> Result<Mixture> {
    let e = Level::E.index();
    let input = HybridState::basis(layout(), &[e, e, e, e, 1, 1, 1, 1])?;
    let bunched = beam_splitter(&beam_splitter(&input, AB_UP, AB_DOWN)?, CD_UP, CD_DOWN)?;
    let mut m = Mixture::from_pure(bunched);
    for (ensemble, mode) in [(0, AB_UP), (1, AB_DOWN), (2, CD_UP), (3, CD_DOWN)] {
        m = blockade_absorb_mixture(&m, ensemble, mode, abs)?;
    }
    m.map_branches(|b| {
        let b = recombine(b, AB_UP, AB_DOWN)?;
        let b = recombine(&b, CD_UP, CD_DOWN)?;
        let b = beam_splitter(&b, AB_UP, CD_UP)?;
        beam_splitter(&b, AB_DOWN, CD_DOWN)
    })
}

fn storage_ensembles(mix: &Mixture) -> Result<DensityOperator> {
    let mut rho = mix.to_density().partial_trace(&ENSEMBLES)?.normalized()?;
    for e in ENSEMBLES {
        rho = transfer_to_storage(&rho, e)?;
    }
    Ok(rho)
}

/// Exact enumeration of every detector pattern of the GHZ interferometer.
pub fn ghz4_exact(abs: &AbsorptionModel, det: &DetectorModel) -> Result<GhzOutcome> {
    let mixture = pre_detection(abs)?;
    let total = mixture.trace();
    let target = ghz_target();
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for (pattern, branch) in detect_mixture(&mixture, &DETECTOR_MODES, det)? {
        let probability = branch.trace() / total;
        match GhzPattern::classify(&pattern) {
            Some(p) => {
                let correction = GhzCorrection::for_pattern(p);
                let (conditional_state, fidelity) = if probability > 0.0 {
                    let rho = correction.apply(&storage_ensembles(&branch)?)?;
                    let f = rho.fidelity(&target)?;
                    (Some(rho), Some(f))
                } else {
                    (None, None)
                };
                accepted.push(GhzHerald { pattern: p, probability, correction, conditional_state, fidelity });
            }
            None => {
                let best_fidelity = if probability > 0.0 { Some(best_ghz_fidelity(&storage_ensembles(&branch)?)) } else { None };
                rejected.push(RejectedPattern { pattern, probability, best_fidelity });
            }
        }
    }
    accepted.sort_by_key(|h| h.pattern);
    Ok(GhzOutcome { success_probability: accepted.iter().map(|h| h.probability).sum(), accepted, rejected })
}

/// Success probability `η^{Q/2} (Q−2) / 2^{Q−2}` of a Q-ensemble GHZ state.
pub fn ghz_success_probability(qubits: u32, eta: f64) -> Result<f64> {
    ensure(qubits >= 4 && qubits.is_multiple_of(2), "qubits", qubits as f64, "must be even and at least 4")?;
    ensure((0.0..=1.0).contains(&eta), "eta", eta, "must lie in [0, 1]")?;
    Ok(eta.powi(qubits as i32 / 2) * (qubits - 2) as f64 / 2f64.powi(qubits as i32 - 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_values() {
        assert!((ghz_success_probability(4, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((ghz_success_probability(4, 0.3).unwrap() - 0.045).abs() < 1e-15);
        assert!((ghz_success_probability(6, 1.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(ghz_success_probability(5, 1.0).is_err());
        assert!(ghz_success_probability(2, 1.0).is_err());
        assert!(ghz_success_probability(4, 1.5).is_err());
    }

    #[test]
    fn perfect_ghz_circuit() {
        let out = ghz4_exact(&AbsorptionModel::perfect(), &DetectorModel::ideal()).unwrap();
        assert!((out.success_probability - 0.5).abs() < 1e-12);
        assert_eq!(out.accepted.len(), 4);
        for h in &out.accepted {
            assert!((h.probability - 0.125).abs() < 1e-12, "{:?}", h.pattern);
            assert!((h.fidelity.unwrap() - 1.0).abs() < 1e-12, "{:?}", h.pattern);
        }
    }

    #[test]
    fn success_scales_with_efficiency_squared() {
        let det = DetectorModel::with_efficiency(0.3).unwrap();
        let out = ghz4_exact(&AbsorptionModel::perfect(), &det).unwrap();
        assert!((out.success_probability - 0.045).abs() < 1e-12);
        assert!((out.fidelity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejected_patterns_are_not_ghz() {
        let out = ghz4_exact(&AbsorptionModel::perfect(), &DetectorModel::ideal()).unwrap();
        let live: Vec<_> = out.rejected.iter().filter(|r| r.probability > 1e-12).collect();
        assert!(!live.is_empty());
        for r in live {
            assert!(r.best_fidelity.unwrap() < 0.99, "{:?}", r.pattern);
        }
    }

    #[test]
    fn pattern_classification() {
        assert_eq!(GhzPattern::classify(&HeraldPattern(vec![1, 1, 0, 0])), Some(GhzPattern::D1D2));
        assert_eq!(GhzPattern::classify(&HeraldPattern(vec![0, 1, 0, 1])), Some(GhzPattern::D4D2));
        assert_eq!(GhzPattern::classify(&HeraldPattern(vec![1, 0, 0, 1])), None);
        assert_eq!(GhzPattern::classify(&HeraldPattern(vec![1, 1, 1, 0])), None);
    }
}
