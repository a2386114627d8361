//! Linear optics on truncated Fock modes and gated photodetection.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::state::{check_mode, single_image, DensityOperator, HybridState, Images, Label, Mixture, Subsystem};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Passive two-mode transformation acting on creation operators:
/// `a_i† → u[0][0] a_i† + u[0][1] a_j†`, `a_j† → u[1][0] a_i† + u[1][1] a_j†`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeUnitary {
    u: [[Complex64; 2]; 2],
}

impl TwoModeUnitary {
    pub fn new(u: [[Complex64; 2]; 2]) -> Self {
        Self { u }
    }

    /// The 50:50 beam splitter used throughout:
    /// `a_i† → (a_j† + i a_i†)/√2`, `a_j† → (a_i† + i a_j†)/√2`,
    /// which sends `|1,1⟩` to `(i/√2)(|0,2⟩ + |2,0⟩)`.
    pub fn balanced() -> Self {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let t = Complex64::new(0.0, FRAC_1_SQRT_2);
        Self::new([[t, r], [r, t]])
    }

    pub fn adjoint(&self) -> Self {
        let u = self.u;
        Self::new([[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]])
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        self.u
    }

    /// Coefficients of `|p, n_i + n_j − p⟩` produced from `|n_i, n_j⟩`.
    fn fock_images(&self, ni: usize, nj: usize) -> Vec<Complex64> {
        let total = ni + nj;
        // (u00 x + u01 y)^ni, indexed by the power of x
        let poly: Vec<Complex64> =
            (0..=ni).map(|k| binomial(ni, k) * self.u[0][0].powu(k as u32) * self.u[0][1].powu((ni - k) as u32)).collect();
        let mut out = vec![ZERO; total + 1];
        for l in 0..=nj {
            let factor = binomial(nj, l) * self.u[1][0].powu(l as u32) * self.u[1][1].powu((nj - l) as u32);
            for (k, p) in poly.iter().enumerate() {
                out[k + l] += p * factor;
            }
        }
        let norm_in = (factorial(ni) * factorial(nj)).sqrt();
        for (p, coeff) in out.iter_mut().enumerate() {
            *coeff *= (factorial(p) * factorial(total - p)).sqrt() / norm_in;
        }
        out
    }

    fn images(&self, label: &[u8], i: usize, j: usize, cut_i: u8, cut_j: u8) -> Result<Images> {
        let (ni, nj) = (label[i] as usize, label[j] as usize);
        let mut out = Images::new();
        for (p, coeff) in self.fock_images(ni, nj).into_iter().enumerate() {
            if coeff.norm() <= 1e-15 {
                continue;
            }
            let q = ni + nj - p;
            if p > cut_i as usize {
                return Err(Error::CutoffExceeded { mode: i, occupation: p, cutoff: cut_i });
            }
            if q > cut_j as usize {
                return Err(Error::CutoffExceeded { mode: j, occupation: q, cutoff: cut_j });
            }
            let mut image = Label::from_slice(label);
            image[i] = p as u8;
            image[j] = q as u8;
            out.push((image, coeff));
        }
        Ok(out)
    }

    fn check(layout: &[Subsystem], i: usize, j: usize) -> Result<(u8, u8)> {
        let cut_i = check_mode(layout, i)?;
        let cut_j = check_mode(layout, j)?;
        if i == j {
            return Err(Error::DuplicateModes(i));
        }
        Ok((cut_i, cut_j))
    }

    pub fn apply(&self, s: &HybridState, i: usize, j: usize) -> Result<HybridState> {
        let (ci, cj) = Self::check(s.layout(), i, j)?;
        s.map_basis(|label| self.images(label, i, j, ci, cj))
    }

    pub fn apply_density(&self, rho: &DensityOperator, i: usize, j: usize) -> Result<DensityOperator> {
        let (ci, cj) = Self::check(rho.layout(), i, j)?;
        rho.conjugate_by(|label| self.images(label, i, j, ci, cj))
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    factorial(n) / (factorial(k) * factorial(n - k))
}

pub fn beam_splitter(s: &HybridState, mode_i: usize, mode_j: usize) -> Result<HybridState> {
    TwoModeUnitary::balanced().apply(s, mode_i, mode_j)
}

pub fn beam_splitter_density(rho: &DensityOperator, mode_i: usize, mode_j: usize) -> Result<DensityOperator> {
    TwoModeUnitary::balanced().apply_density(rho, mode_i, mode_j)
}

/// Phase plate: `|n⟩ → e^{i n θ}|n⟩` on one mode.
pub fn phase_shift(s: &HybridState, mode: usize, theta: f64) -> Result<HybridState> {
    check_mode(s.layout(), mode)?;
    s.map_basis(|label| {
        let n = label[mode];
        Ok(single_image(label, mode, n, Complex64::from_polar(1.0, theta * n as f64)))
    })
}

/// Gated photodetector: efficiency, dark counts and optional number resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Dark-count rate in Hz.
    pub dark_count_rate: f64,
    /// Detection gate in seconds.
    pub gate_time: f64,
    pub number_resolving: bool,
}

impl DetectorModel {
    /// Gate length of the protocol window, 5 μs.
    pub const DEFAULT_GATE: f64 = 5e-6;

    pub fn new(efficiency: f64, dark_count_rate: f64, gate_time: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&efficiency), "efficiency", efficiency, "must lie in [0, 1]")?;
        ensure(dark_count_rate >= 0.0 && dark_count_rate.is_finite(), "dark_count_rate", dark_count_rate, "must be finite and >= 0")?;
        ensure(gate_time > 0.0 && gate_time.is_finite(), "gate_time", gate_time, "must be finite and > 0")?;
        Ok(Self { efficiency, dark_count_rate, gate_time, number_resolving: false })
    }

    /// Unit efficiency, no dark counts.
    pub fn ideal() -> Self {
        Self::with_efficiency(1.0).expect("unit efficiency is valid")
    }

    pub fn with_efficiency(efficiency: f64) -> Result<Self> {
        Self::new(efficiency, 0.0, Self::DEFAULT_GATE)
    }

    pub fn number_resolving(mut self, on: bool) -> Self {
        self.number_resolving = on;
        self
    }

    /// Probability of a dark click within one gate, `1 − exp(−γ_dc t)`.
    pub fn dark_click_probability(&self) -> f64 {
        -(-self.dark_count_rate * self.gate_time).exp_m1()
    }

    /// Outcomes this detector can report for a mode truncated at `cutoff`.
    pub fn outcomes(&self, cutoff: u8) -> std::ops::RangeInclusive<u8> {
        if self.number_resolving {
            0..=cutoff + 1
        } else {
            0..=1
        }
    }

    /// `P(outcome | n photons)`. Non-resolving outcomes are 0 (silent) or 1
    /// (click); resolving outcomes count detected photons plus at most one
    /// dark count.
    pub fn likelihood(&self, photons: u8, outcome: u8) -> f64 {
        let pd = self.dark_click_probability();
        let eta = self.efficiency;
        if self.number_resolving {
            let detected = |k: i32| -> f64 {
                if k < 0 || k > photons as i32 {
                    0.0
                } else {
                    binomial(photons as usize, k as usize) * eta.powi(k) * (1.0 - eta).powi(photons as i32 - k)
                }
            };
            detected(outcome as i32) * (1.0 - pd) + detected(outcome as i32 - 1) * pd
        } else {
            let silent = (1.0 - eta).powi(photons as i32) * (1.0 - pd);
            match outcome {
                0 => silent,
                1 => 1.0 - silent,
                _ => 0.0,
            }
        }
    }

    fn sample_outcome<R: Rng + ?Sized>(&self, photons: u8, rng: &mut R) -> u8 {
        let dark = rng.gen::<f64>() < self.dark_click_probability();
        let detected = (0..photons).filter(|_| rng.gen::<f64>() < self.efficiency).count() as u8;
        if self.number_resolving {
            detected + dark as u8
        } else {
            (detected > 0 || dark) as u8
        }
    }
}

/// Per-detector outcomes, ordered like the detected modes. Non-resolving
/// detectors report 0/1, resolving ones report counts.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HeraldPattern(pub Vec<u8>);

impl HeraldPattern {
    pub fn clicked(&self, detector: usize) -> bool {
        self.0.get(detector).is_some_and(|&c| c > 0)
    }

    /// Number of detectors that fired.
    pub fn clicks(&self) -> usize {
        self.0.iter().filter(|&&c| c > 0).count()
    }

    /// Indices of detectors that fired.
    pub fn fired(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&d| self.clicked(d)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct DetectionBranch {
    pub probability: f64,
    /// Normalized conditional state with the detected modes in vacuum.
    pub state: Option<DensityOperator>,
}

fn check_modes(layout: &[Subsystem], modes: &[usize]) -> Result<Vec<u8>> {
    let mut cutoffs = Vec::with_capacity(modes.len());
    for (k, &m) in modes.iter().enumerate() {
        cutoffs.push(check_mode(layout, m)?);
        if modes[..k].contains(&m) {
            return Err(Error::DuplicateModes(m));
        }
    }
    Ok(cutoffs)
}

fn all_patterns(det: &DetectorModel, cutoffs: &[u8]) -> Vec<HeraldPattern> {
    let mut patterns = vec![Vec::new()];
    for &cut in cutoffs {
        patterns = patterns
            .into_iter()
            .flat_map(|p| {
                det.outcomes(cut).map(move |o| {
                    let mut q = p.clone();
                    q.push(o);
                    q
                })
            })
            .collect();
    }
    patterns.into_iter().map(HeraldPattern).collect()
}

/// Exact detection of `modes`, returning the unnormalized conditional mixture
/// for every pattern. Photon-number components of the detected modes are
/// weighted by the pattern likelihood and the modes are reset to vacuum.
pub fn detect_mixture(m: &Mixture, modes: &[usize], det: &DetectorModel) -> Result<BTreeMap<HeraldPattern, Mixture>> {
    let cutoffs = check_modes(m.layout(), modes)?;
    let patterns = all_patterns(det, &cutoffs);
    let mut out: BTreeMap<HeraldPattern, Mixture> = patterns.iter().map(|p| (p.clone(), Mixture::new(m.layout().to_vec()))).collect();
    for branch in m.branches() {
        // group by occupation of the detected modes
        let mut groups: BTreeMap<Vec<u8>, Vec<(Label, Complex64)>> = BTreeMap::new();
        for (label, amp) in branch.iter() {
            let occ: Vec<u8> = modes.iter().map(|&k| label[k]).collect();
            let mut reset = label.clone();
            for &k in modes {
                reset[k] = 0;
            }
            groups.entry(occ).or_default().push((reset, *amp));
        }
        for (occ, amps) in groups {
            let component = HybridState::from_amplitudes(m.layout().to_vec(), amps)?;
            for pattern in &patterns {
                let weight: f64 = occ.iter().zip(&pattern.0).map(|(&n, &o)| det.likelihood(n, o)).product();
                if weight > 0.0 {
                    let part = component.scaled(Complex64::new(weight.sqrt(), 0.0));
                    out.get_mut(pattern).expect("pattern enumerated").push(part)?;
                }
            }
        }
    }
    Ok(out)
}

/// Exact outcome distribution of detecting `modes` of a mixed state.
pub fn detect_all_mixed(m: &Mixture, modes: &[usize], det: &DetectorModel) -> Result<BTreeMap<HeraldPattern, DetectionBranch>> {
    let total = m.trace();
    if total <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    detect_mixture(m, modes, det)?
        .into_iter()
        .map(|(pattern, mix)| {
            let probability = mix.trace() / total;
            let state = if probability > 0.0 { Some(mix.to_density().normalized()?) } else { None };
            Ok((pattern, DetectionBranch { probability, state }))
        })
        .collect()
}

/// Exact outcome distribution of detecting `modes` of a pure state.
pub fn detect_all_probabilities(s: &HybridState, modes: &[usize], det: &DetectorModel) -> Result<BTreeMap<HeraldPattern, DetectionBranch>> {
    detect_all_mixed(&Mixture::from_pure(s.clone()), modes, det)
}

/// Samples one detection of `mode`: the photon number is drawn from the
/// state, the detector outcome from the POVM likelihood, and the mode is
/// left in vacuum.
pub fn detect<R: Rng + ?Sized>(s: &HybridState, mode: usize, det: &DetectorModel, rng: &mut R) -> Result<(HeraldPattern, HybridState)> {
    detect_modes(s, &[mode], det, rng)
}

pub fn detect_modes<R: Rng + ?Sized>(
    s: &HybridState,
    modes: &[usize],
    det: &DetectorModel,
    rng: &mut R,
) -> Result<(HeraldPattern, HybridState)> {
    check_modes(s.layout(), modes)?;
    let mut state = s.normalized()?;
    let mut outcomes = Vec::with_capacity(modes.len());
    for &mode in modes {
        let weights = state.level_weights(mode)?;
        let n = sample_index(&weights, rng);
        let projected = state.measure_projective(mode, &[n as u8])?.post_state.ok_or(Error::ZeroNorm)?;
        outcomes.push(det.sample_outcome(n as u8, rng));
        state = projected.map_basis(|label| Ok(single_image(label, mode, 0, Complex64::new(1.0, 0.0))))?;
    }
    Ok((HeraldPattern(outcomes), state))
}

/// Draws an index with probability proportional to `weights`.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = i;
            if x < w {
                return i;
            }
            x -= w;
        }
    }
    last
}
