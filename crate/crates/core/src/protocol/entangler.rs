//! Two-ensemble Mach-Zehnder entangler.
//!
//! Photons `|1,1⟩` enter the first beam splitter and bunch into
//! `(i/√2)(|0,2⟩ + |2,0⟩)`. The upper arm passes ensemble A, the lower arm
//! ensemble B, both prepared in `|e⟩`. Each blockaded ensemble absorbs at most
//! one photon; the leftover photon is recombined on a second beam splitter
//! and a single click heralds `(|r1 e⟩ ± i|e r1⟩)/√2`.
//!
//! The second beam splitter is the same balanced element followed by a
//! `−π/2` phase plate on the upper output. The plate sits directly in front
//! of a detector and has no observable effect, but it fixes the branch phases
//! so the pre-detection state reads `(i/√2)(|ψ⁺⟩|0,1⟩ + |ψ⁻⟩|1,0⟩)` exactly.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{absorption_branches, blockade_absorb_mixture, transfer_to_storage, AbsorptionModel, Level};
use crate::error::Result;
use crate::optics::{beam_splitter, detect_mixture, detect_modes, phase_shift, DetectorModel, HeraldPattern};
use crate::sampling::{trial_rng, Summary};
use crate::state::{DensityOperator, HybridState, Mixture, Subsystem};

pub(crate) const ENSEMBLE_A: usize = 0;
pub(crate) const ENSEMBLE_B: usize = 1;
pub(crate) const MODE_UP: usize = 2;
pub(crate) const MODE_DOWN: usize = 3;
const CUTOFF: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detector {
    /// Watches the upper output of the second beam splitter.
    Up,
    /// Watches the lower output.
    Down,
}

impl Detector {
    pub const BOTH: [Detector; 2] = [Detector::Up, Detector::Down];

    fn index(self) -> usize {
        match self {
            Detector::Up => 0,
            Detector::Down => 1,
        }
    }
}

/// Which click patterns count as a herald.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HeraldPolicy {
    /// One detector clicks and the other stays silent.
    #[default]
    ExactlyOne,
    /// A detector heralds whenever it clicks; the other detector is ignored,
    /// so a double click heralds on both.
    IgnoreOther,
}

impl HeraldPolicy {
    fn heralds(self, pattern: &HeraldPattern) -> Vec<Detector> {
        let fired: Vec<Detector> = Detector::BOTH.into_iter().filter(|d| pattern.clicked(d.index())).collect();
        match self {
            HeraldPolicy::ExactlyOne if fired.len() == 1 => fired,
            HeraldPolicy::ExactlyOne => Vec::new(),
            HeraldPolicy::IgnoreOther => fired,
        }
    }
}

fn layout() -> Vec<Subsystem> {
    let mode = Subsystem::Mode { cutoff: CUTOFF };
    vec![Subsystem::Ensemble, Subsystem::Ensemble, mode, mode]
}

fn input_state() -> HybridState {
    let e = Level::E.index();
    HybridState::basis(layout(), &[e, e, 1, 1]).expect("input fits the layout")
}

/// Second beam splitter plus the detector-side phase plate.
pub(crate) fn recombine(s: &HybridState, up: usize, down: usize) -> Result<HybridState> {
    phase_shift(&beam_splitter(s, up, down)?, up, -FRAC_PI_2)
}

/// Ensembles-plus-light state just before detection, as a Kraus-branch mixture.
pub fn pre_detection_mixture(abs: &AbsorptionModel) -> Result<Mixture> {
    let bunched = Mixture::from_pure(beam_splitter(&input_state(), MODE_UP, MODE_DOWN)?);
    let absorbed = blockade_absorb_mixture(&bunched, ENSEMBLE_A, MODE_UP, abs)?;
    let absorbed = blockade_absorb_mixture(&absorbed, ENSEMBLE_B, MODE_DOWN, abs)?;
    absorbed.map_branches(|b| recombine(b, MODE_UP, MODE_DOWN))
}

/// Pure pre-detection state for perfect absorption.
pub fn pre_detection_state() -> Result<HybridState> {
    let m = pre_detection_mixture(&AbsorptionModel::perfect())?;
    Ok(m.branches()[0].clone())
}

/// Storage-basis target heralded by `detector`: `(|sg⟩ ∓ i|gs⟩)/√2`,
/// minus sign for the upper detector.
pub fn target_state(detector: Detector) -> HybridState {
    let (g, s) = (Level::G.index(), Level::S.index());
    let sign = match detector {
        Detector::Up => -1.0,
        Detector::Down => 1.0,
    };
    HybridState::from_amplitudes(
        vec![Subsystem::Ensemble, Subsystem::Ensemble],
        [([s, g], Complex64::new(FRAC_1_SQRT_2, 0.0)), ([g, s], Complex64::new(0.0, sign * FRAC_1_SQRT_2))],
    )
    .expect("target fits two ensembles")
}

fn storage_pair(rho: &DensityOperator) -> Result<DensityOperator> {
    let pair = rho.partial_trace(&[ENSEMBLE_A, ENSEMBLE_B])?.normalized()?;
    transfer_to_storage(&transfer_to_storage(&pair, 0)?, 1)
}

#[derive(Debug, Clone)]
pub struct HeraldBranch {
    pub detector: Detector,
    pub probability: f64,
    /// Two-ensemble state after storage transfer, given this herald.
    pub conditional_state: Option<DensityOperator>,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct EntangleOutcome {
    pub success_probability: f64,
    pub heralds: Vec<HeraldBranch>,
    pub pre_detection: DensityOperator,
}

impl EntangleOutcome {
    pub fn herald(&self, detector: Detector) -> &HeraldBranch {
        &self.heralds[detector.index()]
    }

    /// Herald-probability-weighted fidelity with the matching target.
    pub fn fidelity(&self) -> f64 {
        let (num, den) = self
            .heralds
            .iter()
            .filter_map(|h| h.fidelity.map(|f| (f * h.probability, h.probability)))
            .fold((0.0, 0.0), |(n, d), (a, b)| (n + a, d + b));
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

pub fn entangle_pair_exact(abs: &AbsorptionModel, det: &DetectorModel) -> Result<EntangleOutcome> {
    entangle_pair_exact_with(abs, det, HeraldPolicy::default())
}

pub fn entangle_pair_exact_with(abs: &AbsorptionModel, det: &DetectorModel, policy: HeraldPolicy) -> Result<EntangleOutcome> {
    let mixture = pre_detection_mixture(abs)?;
    let total = mixture.trace();
    let mut per_detector = [Mixture::new(layout()), Mixture::new(layout())];
    let mut success = 0.0;
    for (pattern, branch) in detect_mixture(&mixture, &[MODE_UP, MODE_DOWN], det)? {
        let heralds = policy.heralds(&pattern);
        if !heralds.is_empty() {
            success += branch.trace() / total;
        }
        for d in heralds {
            for b in branch.branches() {
                per_detector[d.index()].push(b.clone())?;
            }
        }
    }
    let heralds = Detector::BOTH
        .into_iter()
        .map(|detector| {
            let mix = &per_detector[detector.index()];
            let probability = mix.trace() / total;
            if probability > 0.0 {
                let state = storage_pair(&mix.to_density())?;
                let fidelity = state.fidelity(&target_state(detector))?;
                Ok(HeraldBranch { detector, probability, conditional_state: Some(state), fidelity: Some(fidelity) })
            } else {
                Ok(HeraldBranch { detector, probability, conditional_state: None, fidelity: None })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EntangleOutcome { success_probability: success, heralds, pre_detection: mixture.to_density() })
}

/// One sampled run of the entangler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntangleTrial {
    pub heralded: bool,
    /// Set when exactly one detector heralded.
    pub which_detector: Option<Detector>,
    pub up: bool,
    pub down: bool,
    pub fidelity: Option<f64>,
}

fn pick_branch<R: Rng + ?Sized>(branches: Vec<HybridState>, rng: &mut R) -> Result<HybridState> {
    let weights: Vec<f64> = branches.iter().map(HybridState::norm_sqr).collect();
    let k = crate::optics::sample_index(&weights, rng);
    branches[k].normalized()
}

pub fn entangle_trial<R: Rng + ?Sized>(
    abs: &AbsorptionModel,
    det: &DetectorModel,
    policy: HeraldPolicy,
    rng: &mut R,
) -> Result<EntangleTrial> {
    let mut state = beam_splitter(&input_state(), MODE_UP, MODE_DOWN)?;
    state = pick_branch(absorption_branches(&state, ENSEMBLE_A, MODE_UP, abs)?, rng)?;
    state = pick_branch(absorption_branches(&state, ENSEMBLE_B, MODE_DOWN, abs)?, rng)?;
    state = recombine(&state, MODE_UP, MODE_DOWN)?;
    let (pattern, post) = detect_modes(&state, &[MODE_UP, MODE_DOWN], det, rng)?;
    let heralds = policy.heralds(&pattern);
    let which_detector = match heralds.as_slice() {
        [d] => Some(*d),
        _ => None,
    };
    let fidelity = match which_detector {
        Some(d) => Some(storage_pair(&post.to_density())?.fidelity(&target_state(d))?),
        None => None,
    };
    Ok(EntangleTrial {
        heralded: !heralds.is_empty(),
        which_detector,
        up: heralds.contains(&Detector::Up),
        down: heralds.contains(&Detector::Down),
        fidelity,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledEntangle {
    pub trials: u64,
    pub heralded: u64,
    pub up: u64,
    pub down: u64,
    pub herald_rate: f64,
    /// Fraction of heralds on the upper detector.
    pub up_fraction: f64,
    /// Mean conditional fidelity over single-detector heralds.
    pub mean_fidelity: f64,
    pub fidelity_std_error: f64,
}

/// Monte Carlo run of `trials` independent entangler attempts.
pub fn entangle_pair_sampled(
    abs: &AbsorptionModel,
    det: &DetectorModel,
    policy: HeraldPolicy,
    seed: u64,
    trials: u64,
) -> Result<SampledEntangle> {
    crate::error::ensure(trials >= 1, "trials", trials as f64, "must be at least 1")?;
    let runs =
        (0..trials).into_par_iter().map(|k| entangle_trial(abs, det, policy, &mut trial_rng(seed, k))).collect::<Result<Vec<_>>>()?;
    let heralded = runs.iter().filter(|t| t.heralded).count() as u64;
    let up = runs.iter().filter(|t| t.up).count() as u64;
    let down = runs.iter().filter(|t| t.down).count() as u64;
    let fids: Vec<f64> = runs.iter().filter_map(|t| t.fidelity).collect();
    let fid = if fids.is_empty() { Summary { mean: 0.0, std_dev: 0.0, std_error: 0.0 } } else { Summary::of(&fids) };
    Ok(SampledEntangle {
        trials,
        heralded,
        up,
        down,
        herald_rate: heralded as f64 / trials as f64,
        up_fraction: if up + down > 0 { up as f64 / (up + down) as f64 } else { 0.0 },
        mean_fidelity: fid.mean,
        fidelity_std_error: fid.std_error,
    })
}
