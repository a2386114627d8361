//! Blockade-restricted ensemble qudit.
//!
//! Each ensemble carries at most one collective excitation, so its symmetric
//! states form a four-level system `{g, e, s, r1}`. The logical qubit lives on
//! the storage pair: `|0⟩_L = |g⟩`, `|1⟩_L = |s⟩`. Single-qubit gates are exact
//! 2×2 unitaries on that pair.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::state::{
    check_ensemble, check_mode, single_image, DensityOperator, HybridState, Images, Label, Mixture, QuantumState, Subsystem, ALGEBRA_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Level {
    /// All atoms in the ground state, logical 0.
    G = 0,
    E = 1,
    /// Single storage excitation, logical 1.
    S = 2,
    /// Single Rydberg excitation.
    R1 = 3,
}

impl Level {
    pub const fn index(self) -> u8 {
        self as u8
    }
}

const G: u8 = Level::G.index();
const E: u8 = Level::E.index();
const S: u8 = Level::S.index();
const R1: u8 = Level::R1.index();

/// Single-ensemble basis ket.
pub fn ket(level: Level) -> HybridState {
    HybridState::basis(vec![Subsystem::Ensemble], &[level.index()]).expect("level fits the qudit")
}

/// Probability that one ensemble absorbs an incident photon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionModel {
    pub p_abs: f64,
}

impl AbsorptionModel {
    pub fn new(p_abs: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&p_abs), "p_abs", p_abs, "must lie in [0, 1]")?;
        Ok(Self { p_abs })
    }

    pub fn perfect() -> Self {
        Self { p_abs: 1.0 }
    }

    /// `ε = 1 − P_abs`.
    pub fn epsilon(&self) -> f64 {
        1.0 - self.p_abs
    }
}

fn check_logical<Q: QuantumState>(s: &Q, ensemble: usize) -> Result<()> {
    check_ensemble(s.layout(), ensemble)?;
    let w = s.level_weights(ensemble)?;
    let outside = w[E as usize] + w[R1 as usize];
    if outside > ALGEBRA_TOL {
        return Err(Error::OutsideLogicalSubspace { ensemble, weight: outside });
    }
    Ok(())
}

/// Applies `[[gg, gs], [sg, ss]]` (columns are images of g and s) on the
/// logical pair of one ensemble. Other levels are left untouched.
fn logical_gate<Q: QuantumState>(s: &Q, ensemble: usize, m: [[Complex64; 2]; 2]) -> Result<Q> {
    check_logical(s, ensemble)?;
    s.apply_map(|label| {
        let col = match label[ensemble] {
            G => 0,
            S => 1,
            other => return Ok(single_image(label, ensemble, other, Complex64::new(1.0, 0.0))),
        };
        let mut out = Images::new();
        for (row, digit) in [(0, G), (1, S)] {
            let coeff = m[row][col];
            if coeff != Complex64::new(0.0, 0.0) {
                let mut image = Label::from_slice(label);
                image[ensemble] = digit;
                out.push((image, coeff));
            }
        }
        Ok(out)
    })
}

/// Bit flip on the logical pair.
pub fn gate_x<Q: QuantumState>(s: &Q, ensemble: usize) -> Result<Q> {
    let (o, l) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    logical_gate(s, ensemble, [[o, l], [l, o]])
}

/// Hadamard: `g → (g + s)/√2`, `s → (g − s)/√2`.
pub fn gate_h<Q: QuantumState>(s: &Q, ensemble: usize) -> Result<Q> {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    logical_gate(s, ensemble, [[h, h], [h, -h]])
}

/// `Φ(φ) = exp(−iφZ/2)`: g picks up `e^{−iφ/2}`, s picks up `e^{+iφ/2}`.
pub fn gate_phase<Q: QuantumState>(s: &Q, ensemble: usize, phi: f64) -> Result<Q> {
    let o = Complex64::new(0.0, 0.0);
    logical_gate(s, ensemble, [[Complex64::from_polar(1.0, -phi / 2.0), o], [o, Complex64::from_polar(1.0, phi / 2.0)]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kraus {
    /// Absorption on `e` with photons present; identity on `(e,0)`, g and s.
    Absorb,
    /// The photons fly on and the ensemble stays in `e`.
    Survive,
    /// A Rydberg-excited ensemble is blockaded and transparent.
    Blockade,
}

fn absorption_images(label: &[u8], ensemble: usize, mode: usize, kind: Kraus, p_abs: f64) -> Images {
    let level = label[ensemble];
    let photons = label[mode];
    let one = Complex64::new(1.0, 0.0);
    let mut out = Images::new();
    match (kind, level) {
        (Kraus::Absorb, E) if photons > 0 => {
            if p_abs > 0.0 {
                let mut image = Label::from_slice(label);
                image[ensemble] = R1;
                image[mode] = photons - 1;
                out.push((image, Complex64::new(p_abs.sqrt(), 0.0)));
            }
        }
        (Kraus::Absorb, E) | (Kraus::Absorb, G) | (Kraus::Absorb, S) => {
            out.push((Label::from_slice(label), one));
        }
        (Kraus::Survive, E) if photons > 0 && p_abs < 1.0 => {
            out.push((Label::from_slice(label), Complex64::new((1.0 - p_abs).sqrt(), 0.0)));
        }
        (Kraus::Blockade, R1) => out.push((Label::from_slice(label), one)),
        _ => {}
    }
    out
}

fn kraus_set(abs: &AbsorptionModel) -> &'static [Kraus] {
    if abs.p_abs < 1.0 {
        &[Kraus::Absorb, Kraus::Survive, Kraus::Blockade]
    } else {
        &[Kraus::Absorb, Kraus::Blockade]
    }
}

fn check_pair(layout: &[Subsystem], ensemble: usize, mode: usize) -> Result<()> {
    check_ensemble(layout, ensemble)?;
    check_mode(layout, mode)?;
    Ok(())
}

/// Kraus-resolved action of the blockade absorption channel on a pure state.
///
/// Returns the nonzero unnormalized branches `K_k|ψ⟩`; their squared norms
/// sum to the input norm. Branches, in order:
/// * absorbed: `(e, n≥1) → √P_abs (r1, n−1)`, with `(e, 0)`, g and s unchanged;
/// * survived: `(e, n≥1) → √(1−P_abs) (e, n)`;
/// * blockaded: `(r1, n) → (r1, n)`, no second absorption.
pub fn absorption_branches(s: &HybridState, ensemble: usize, mode: usize, abs: &AbsorptionModel) -> Result<Vec<HybridState>> {
    check_pair(s.layout(), ensemble, mode)?;
    let mut out = Vec::new();
    for &kind in kraus_set(abs) {
        let branch = s.map_basis(|l| Ok(absorption_images(l, ensemble, mode, kind, abs.p_abs)))?;
        if !branch.is_empty() {
            out.push(branch);
        }
    }
    Ok(out)
}

/// Blockade absorption channel on a density operator.
pub fn blockade_absorb(rho: &DensityOperator, ensemble: usize, mode: usize, abs: &AbsorptionModel) -> Result<DensityOperator> {
    check_pair(rho.layout(), ensemble, mode)?;
    let mut ops: Vec<_> =
        kraus_set(abs).iter().map(|&kind| move |l: &[u8]| Ok(absorption_images(l, ensemble, mode, kind, abs.p_abs))).collect();
    rho.kraus(&mut ops)
}

/// Blockade absorption channel on a branch mixture.
pub fn blockade_absorb_mixture(m: &Mixture, ensemble: usize, mode: usize, abs: &AbsorptionModel) -> Result<Mixture> {
    let mut out = Mixture::new(m.layout().to_vec());
    for branch in m.branches() {
        for b in absorption_branches(branch, ensemble, mode, abs)? {
            out.push(b)?;
        }
    }
    Ok(out)
}

/// Maps the interaction levels onto storage: `r1 → s`, `e → g`.
///
/// Storage levels are left alone. A state with support on both the
/// interaction pair and the storage pair of the same ensemble is rejected,
/// since the relabeling would merge orthogonal components.
pub fn transfer_to_storage<Q: QuantumState>(s: &Q, ensemble: usize) -> Result<Q> {
    check_ensemble(s.layout(), ensemble)?;
    let w = s.level_weights(ensemble)?;
    let interaction = w[E as usize] + w[R1 as usize];
    let storage = w[G as usize] + w[S as usize];
    if interaction > ALGEBRA_TOL && storage > ALGEBRA_TOL {
        return Err(Error::MixedStorageTransfer { ensemble });
    }
    s.apply_map(|label| {
        let to = match label[ensemble] {
            E => G,
            R1 => S,
            other => other,
        };
        Ok(single_image(label, ensemble, to, Complex64::new(1.0, 0.0)))
    })
}

/// Probability of reading logical 1 (fluorescence) on `ensemble`.
pub fn readout_probability(s: &HybridState, ensemble: usize) -> Result<f64> {
    check_logical(s, ensemble)?;
    let w = s.level_weights(ensemble)?;
    let total: f64 = w.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(w[S as usize] / total)
}

/// Fluorescence readout in the `{g, s}` basis. No fluorescence reads as 0
/// and leaves the ensemble in `|g⟩`.
pub fn readout<R: Rng + ?Sized>(s: &HybridState, ensemble: usize, rng: &mut R) -> Result<(u8, HybridState)> {
    let p1 = readout_probability(s, ensemble)?;
    let (bit, level) = if rng.gen::<f64>() < p1 { (1, S) } else { (0, G) };
    let post = s.measure_projective(ensemble, &[level])?.post_state.ok_or(Error::ZeroNorm)?;
    Ok((bit, post))
}
