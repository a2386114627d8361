//! Finite-dimensional hybrid states: ensemble qudits tensored with truncated
//! Fock modes.
//!
//! Pure states are sparse amplitude maps keyed by basis labels, one digit per
//! subsystem in declaration order. Mixed states come in two forms: an explicit
//! [`DensityOperator`] and a [`Mixture`] of unnormalized pure branches whose
//! outer products sum to the density operator. Every map is a `BTreeMap`, so
//! iteration order (and therefore output) is deterministic.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// Tolerance for algebraic identities (norms, traces, Hermiticity).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Most negative eigenvalue still accepted as positive semidefinite.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Amplitudes below this magnitude are dropped from sparse storage.
const PRUNE: f64 = 1e-15;

/// Basis label: one level/occupation index per subsystem.
pub type Label = SmallVec<[u8; 8]>;

/// Images of a single basis label under a linear map.
pub type Images = SmallVec<[(Label, Complex64); 4]>;

/// Dimension of a blockade-restricted ensemble qudit: g, e, s, r1.
pub const ENSEMBLE_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subsystem {
    /// Collective ensemble state restricted to at most one excitation.
    Ensemble,
    /// Optical mode truncated at `cutoff` photons.
    Mode { cutoff: u8 },
}

impl Subsystem {
    pub fn dim(self) -> usize {
        match self {
            Subsystem::Ensemble => ENSEMBLE_DIM,
            Subsystem::Mode { cutoff } => cutoff as usize + 1,
        }
    }

    pub fn is_mode(self) -> bool {
        matches!(self, Subsystem::Mode { .. })
    }
}

pub(crate) fn check_index(layout: &[Subsystem], index: usize) -> Result<()> {
    if index < layout.len() {
        Ok(())
    } else {
        Err(Error::SubsystemIndex { index, len: layout.len() })
    }
}

pub(crate) fn check_mode(layout: &[Subsystem], index: usize) -> Result<u8> {
    check_index(layout, index)?;
    match layout[index] {
        Subsystem::Mode { cutoff } => Ok(cutoff),
        Subsystem::Ensemble => Err(Error::NotAMode { index }),
    }
}

pub(crate) fn check_ensemble(layout: &[Subsystem], index: usize) -> Result<()> {
    check_index(layout, index)?;
    match layout[index] {
        Subsystem::Ensemble => Ok(()),
        Subsystem::Mode { .. } => Err(Error::NotAnEnsemble { index }),
    }
}

fn check_label(layout: &[Subsystem], label: &[u8]) -> Result<()> {
    let fits = label.len() == layout.len() && label.iter().zip(layout).all(|(&digit, sub)| (digit as usize) < sub.dim());
    if fits {
        Ok(())
    } else {
        Err(Error::InvalidLabel { label: label.to_vec() })
    }
}

fn accumulate<K: Ord>(map: &mut BTreeMap<K, Complex64>, key: K, value: Complex64) {
    *map.entry(key).or_insert(Complex64::new(0.0, 0.0)) += value;
}

fn pruned<K: Ord>(map: BTreeMap<K, Complex64>) -> BTreeMap<K, Complex64> {
    map.into_iter().filter(|(_, v)| v.norm() > PRUNE).collect()
}

/// Pure (possibly unnormalized) state vector over a hybrid layout.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    layout: Vec<Subsystem>,
    amps: BTreeMap<Label, Complex64>,
}

/// Result of a projective measurement on one subsystem.
#[derive(Debug, Clone)]
pub struct Projection {
    pub probability: f64,
    /// Renormalized post-measurement state; `None` for a null outcome.
    pub post_state: Option<HybridState>,
}

impl HybridState {
    pub fn basis(layout: Vec<Subsystem>, label: &[u8]) -> Result<Self> {
        Self::from_amplitudes(layout, [(label.to_vec(), Complex64::new(1.0, 0.0))])
    }

    /// Builds a state from `(label, amplitude)` pairs. Repeated labels add.
    pub fn from_amplitudes<L, I>(layout: Vec<Subsystem>, amplitudes: I) -> Result<Self>
    where
        L: AsRef<[u8]>,
        I: IntoIterator<Item = (L, Complex64)>,
    {
        let mut amps = BTreeMap::new();
        for (label, amp) in amplitudes {
            let label = label.as_ref();
            check_label(&layout, label)?;
            accumulate(&mut amps, Label::from_slice(label), amp);
        }
        Ok(Self { layout, amps: pruned(amps) })
    }

    /// The zero vector on `layout`.
    pub fn zero(layout: Vec<Subsystem>) -> Self {
        Self { layout, amps: BTreeMap::new() }
    }

    /// Fock state `|n⟩` of a single mode truncated at `cutoff`.
    pub fn fock(n: u8, cutoff: u8) -> Result<Self> {
        if n > cutoff {
            return Err(Error::CutoffExceeded { mode: 0, occupation: n as usize, cutoff });
        }
        Self::basis(vec![Subsystem::Mode { cutoff }], &[n])
    }

    pub fn layout(&self) -> &[Subsystem] {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Label, &Complex64)> {
        self.amps.iter()
    }

    pub fn amplitude(&self, label: &[u8]) -> Complex64 {
        self.amps.get(label).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm <= PRUNE {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self { layout: self.layout.clone(), amps: pruned(self.amps.iter().map(|(l, a)| (l.clone(), a * factor)).collect()) }
    }

    /// Vector sum `self + other`.
    pub fn plus(&self, other: &HybridState) -> Result<Self> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch);
        }
        let mut amps = self.amps.clone();
        for (label, amp) in &other.amps {
            accumulate(&mut amps, label.clone(), *amp);
        }
        Ok(Self { layout: self.layout.clone(), amps: pruned(amps) })
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &HybridState) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch);
        }
        Ok(self.amps.iter().filter_map(|(label, a)| other.amps.get(label).map(|b| a.conj() * b)).sum())
    }

    pub fn tensor(&self, other: &HybridState) -> HybridState {
        let mut layout = self.layout.clone();
        layout.extend_from_slice(&other.layout);
        let mut amps = BTreeMap::new();
        for (la, a) in &self.amps {
            for (lb, b) in &other.amps {
                let mut label = la.clone();
                label.extend_from_slice(lb);
                amps.insert(label, a * b);
            }
        }
        HybridState { layout, amps: pruned(amps) }
    }

    /// Applies the linear map defined by its action on basis labels.
    pub fn map_basis<F>(&self, mut images: F) -> Result<Self>
    where
        F: FnMut(&[u8]) -> Result<Images>,
    {
        let mut amps = BTreeMap::new();
        for (label, amp) in &self.amps {
            for (image, coeff) in images(label)? {
                accumulate(&mut amps, image, coeff * amp);
            }
        }
        Ok(Self { layout: self.layout.clone(), amps: pruned(amps) })
    }

    /// Probability weight of each basis level of `subsystem`.
    pub fn level_weights(&self, subsystem: usize) -> Result<Vec<f64>> {
        check_index(&self.layout, subsystem)?;
        let mut weights = vec![0.0; self.layout[subsystem].dim()];
        for (label, amp) in &self.amps {
            weights[label[subsystem] as usize] += amp.norm_sqr();
        }
        Ok(weights)
    }

    /// Unnormalized restriction to labels whose `subsystem` digit is in `keep`.
    pub fn restricted(&self, subsystem: usize, keep: &[u8]) -> Result<Self> {
        check_index(&self.layout, subsystem)?;
        Ok(Self {
            layout: self.layout.clone(),
            amps: self.amps.iter().filter(|(label, _)| keep.contains(&label[subsystem])).map(|(l, a)| (l.clone(), *a)).collect(),
        })
    }

    pub fn measure_projective(&self, subsystem: usize, projector_labels: &[u8]) -> Result<Projection> {
        check_index(&self.layout, subsystem)?;
        if projector_labels.is_empty() {
            return Err(Error::EmptyProjector);
        }
        let dim = self.layout[subsystem].dim();
        if let Some(&bad) = projector_labels.iter().find(|&&l| l as usize >= dim) {
            return Err(Error::InvalidLabel { label: vec![bad] });
        }
        let branch = self.restricted(subsystem, projector_labels)?;
        let total = self.norm_sqr();
        let probability = if total > 0.0 { branch.norm_sqr() / total } else { 0.0 };
        let post_state = if probability > 0.0 { Some(branch.normalized()?) } else { None };
        Ok(Projection { probability, post_state })
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator::from_pure(self)
    }
}

/// Mixed state stored as a sum of unnormalized pure branches,
/// `ρ = Σ_k |b_k⟩⟨b_k|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    layout: Vec<Subsystem>,
    branches: Vec<HybridState>,
}

impl Mixture {
    pub fn new(layout: Vec<Subsystem>) -> Self {
        Self { layout, branches: Vec::new() }
    }

    pub fn from_pure(state: HybridState) -> Self {
        Self { layout: state.layout.clone(), branches: vec![state] }
    }

    pub fn layout(&self) -> &[Subsystem] {
        &self.layout
    }

    pub fn branches(&self) -> &[HybridState] {
        &self.branches
    }

    pub fn push(&mut self, branch: HybridState) -> Result<()> {
        if branch.layout != self.layout {
            return Err(Error::DimensionMismatch);
        }
        if !branch.is_empty() {
            self.branches.push(branch);
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        self.branches.iter().map(HybridState::norm_sqr).sum()
    }

    /// Applies the same linear map to every branch.
    pub fn map_branches<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&HybridState) -> Result<HybridState>,
    {
        let mut out = Mixture::new(self.layout.clone());
        for branch in &self.branches {
            out.push(f(branch)?)?;
        }
        Ok(out)
    }

    pub fn to_density(&self) -> DensityOperator {
        let mut elems = BTreeMap::new();
        for branch in &self.branches {
            for (la, a) in &branch.amps {
                for (lb, b) in &branch.amps {
                    accumulate(&mut elems, (la.clone(), lb.clone()), a * b.conj());
                }
            }
        }
        DensityOperator { layout: self.layout.clone(), elems: pruned(elems) }
    }
}

/// Density operator over a hybrid layout, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    layout: Vec<Subsystem>,
    elems: BTreeMap<(Label, Label), Complex64>,
}

impl DensityOperator {
    pub fn from_pure(state: &HybridState) -> Self {
        Mixture::from_pure(state.clone()).to_density()
    }

    /// Builds `Σ_k p_k ρ_k` from weighted components on a shared layout.
    pub fn weighted_sum<'a, I>(layout: Vec<Subsystem>, parts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, &'a DensityOperator)>,
    {
        let mut elems = BTreeMap::new();
        for (weight, rho) in parts {
            if rho.layout != layout {
                return Err(Error::DimensionMismatch);
            }
            for (key, v) in &rho.elems {
                accumulate(&mut elems, key.clone(), v * weight);
            }
        }
        Ok(Self { layout, elems: pruned(elems) })
    }

    pub fn layout(&self) -> &[Subsystem] {
        &self.layout
    }

    pub fn element(&self, row: &[u8], col: &[u8]) -> Complex64 {
        self.elems.get(&(Label::from_slice(row), Label::from_slice(col))).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Label, Label), &Complex64)> {
        self.elems.iter()
    }

    pub fn trace(&self) -> f64 {
        self.elems.iter().filter(|((r, c), _)| r == c).map(|(_, v)| v.re).sum()
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= PRUNE {
            return Err(Error::ZeroNorm);
        }
        Ok(Self { layout: self.layout.clone(), elems: self.elems.iter().map(|(k, v)| (k.clone(), v / tr)).collect() })
    }

    /// Diagonal probability weight of each level of `subsystem`.
    pub fn level_weights(&self, subsystem: usize) -> Result<Vec<f64>> {
        check_index(&self.layout, subsystem)?;
        let mut weights = vec![0.0; self.layout[subsystem].dim()];
        for ((r, c), v) in &self.elems {
            if r == c {
                weights[r[subsystem] as usize] += v.re;
            }
        }
        Ok(weights)
    }

    /// `A ρ A†` for the linear map `A` given by its basis images.
    pub fn conjugate_by<F>(&self, mut images: F) -> Result<Self>
    where
        F: FnMut(&[u8]) -> Result<Images>,
    {
        let mut cache: BTreeMap<Label, Images> = BTreeMap::new();
        for (r, c) in self.elems.keys() {
            for label in [r, c] {
                if !cache.contains_key(label) {
                    cache.insert(label.clone(), images(label)?);
                }
            }
        }
        let mut elems = BTreeMap::new();
        for ((r, c), v) in &self.elems {
            for (ri, rc) in &cache[r] {
                for (ci, cc) in &cache[c] {
                    accumulate(&mut elems, (ri.clone(), ci.clone()), rc * v * cc.conj());
                }
            }
        }
        Ok(Self { layout: self.layout.clone(), elems: pruned(elems) })
    }

    /// `Σ_k K_k ρ K_k†` over the supplied Kraus operators.
    pub fn kraus<F>(&self, operators: &mut [F]) -> Result<Self>
    where
        F: FnMut(&[u8]) -> Result<Images>,
    {
        let mut parts = Vec::with_capacity(operators.len());
        for op in operators.iter_mut() {
            parts.push(self.conjugate_by(op)?);
        }
        Self::weighted_sum(self.layout.clone(), parts.iter().map(|p| (1.0, p)))
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        let mut keep = keep.to_vec();
        keep.sort_unstable();
        keep.dedup();
        for &k in &keep {
            check_index(&self.layout, k)?;
        }
        let traced: Vec<usize> = (0..self.layout.len()).filter(|i| !keep.contains(i)).collect();
        let mut elems = BTreeMap::new();
        for ((r, c), v) in &self.elems {
            if traced.iter().all(|&t| r[t] == c[t]) {
                let rk: Label = keep.iter().map(|&k| r[k]).collect();
                let ck: Label = keep.iter().map(|&k| c[k]).collect();
                accumulate(&mut elems, (rk, ck), *v);
            }
        }
        Ok(Self { layout: keep.iter().map(|&k| self.layout[k]).collect(), elems: pruned(elems) })
    }

    /// `⟨ψ|ρ|ψ⟩` clamped to `[0, 1]`.
    pub fn fidelity(&self, psi: &HybridState) -> Result<f64> {
        if self.layout != psi.layout {
            return Err(Error::DimensionMismatch);
        }
        let value: Complex64 = self.elems.iter().map(|((r, c), v)| psi.amplitude(r).conj() * v * psi.amplitude(c)).sum();
        Ok(value.re.clamp(0.0, 1.0))
    }

    /// Largest `|ρ_ab − conj(ρ_ba)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        self.elems
            .iter()
            .map(|((r, c), v)| {
                let mirror = self.elems.get(&(c.clone(), r.clone())).copied().unwrap_or(Complex64::new(0.0, 0.0));
                (v - mirror.conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Labels carrying any matrix element, in deterministic order.
    pub fn support(&self) -> Vec<Label> {
        let mut labels: Vec<Label> = self.elems.keys().flat_map(|(r, c)| [r.clone(), c.clone()]).collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Dense matrix restricted to the support.
    pub fn to_dense(&self) -> (Vec<Label>, DMatrix<Complex64>) {
        let support = self.support();
        let index: BTreeMap<&Label, usize> = support.iter().enumerate().map(|(i, l)| (l, i)).collect();
        let mut m = DMatrix::zeros(support.len(), support.len());
        for ((r, c), v) in &self.elems {
            m[(index[r], index[c])] = *v;
        }
        (support, m)
    }

    /// Eigenvalues in ascending order (Hermitian part).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (_, m) = self.to_dense();
        if m.nrows() == 0 {
            return Vec::new();
        }
        let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let mut values: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    pub fn is_physical(&self) -> bool {
        (self.trace() - 1.0).abs() < ALGEBRA_TOL
            && self.hermiticity_defect() < ALGEBRA_TOL
            && self.eigenvalues().first().is_none_or(|&e| e >= -POSITIVITY_TOL)
    }
}

/// Common surface of pure and mixed states for local linear maps.
pub trait QuantumState: Sized {
    fn layout(&self) -> &[Subsystem];
    fn level_weights(&self, subsystem: usize) -> Result<Vec<f64>>;
    /// Applies a linear map given by basis images (`A|ψ⟩` or `AρA†`).
    fn apply_map<F>(&self, images: F) -> Result<Self>
    where
        F: FnMut(&[u8]) -> Result<Images>;
}

impl QuantumState for HybridState {
    fn layout(&self) -> &[Subsystem] {
        HybridState::layout(self)
    }
    fn level_weights(&self, subsystem: usize) -> Result<Vec<f64>> {
        HybridState::level_weights(self, subsystem)
    }
    fn apply_map<F>(&self, images: F) -> Result<Self>
    where
        F: FnMut(&[u8]) -> Result<Images>,
    {
        self.map_basis(images)
    }
}

impl QuantumState for DensityOperator {
    fn layout(&self) -> &[Subsystem] {
        DensityOperator::layout(self)
    }
    fn level_weights(&self, subsystem: usize) -> Result<Vec<f64>> {
        DensityOperator::level_weights(self, subsystem)
    }
    fn apply_map<F>(&self, images: F) -> Result<Self>
    where
        F: FnMut(&[u8]) -> Result<Images>,
    {
        self.conjugate_by(images)
    }
}

/// `⟨ψ|ρ|ψ⟩`, see [`DensityOperator::fidelity`].
pub fn fidelity(rho: &DensityOperator, psi: &HybridState) -> Result<f64> {
    rho.fidelity(psi)
}

/// Relabels one subsystem digit: every label maps to exactly one image.
pub(crate) fn single_image(label: &[u8], subsystem: usize, digit: u8, coeff: Complex64) -> Images {
    let mut image = Label::from_slice(label);
    image[subsystem] = digit;
    let mut out = Images::new();
    out.push((image, coeff));
    out
}
