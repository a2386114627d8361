//! Closed-form error budget for the ensemble entangler.
//!
//! Inputs are taken in the units they are usually quoted in (nm-scale
//! lengths in metres, couplings in MHz, densities in cm⁻³); everything is
//! converted to SI before use. Each mechanism is reported as a probability
//! per protocol run, except the literature rates, which are constants.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Spontaneous emission plus black-body transfer out of the Rydberg level.
pub const RYDBERG_DECAY_RATE_HZ: f64 = 1.0e3;
/// Coincidence rate of a demonstrated SPDC source at the first beam splitter.
pub const HOM_COINCIDENCE_RATE_HZ: f64 = 1500.0;
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Fidelity quoted for the 0.989 absorption figure.
pub const QUOTED_FIDELITY: f64 = 0.982;

const CM3_TO_M3: f64 = 1.0e-6;
const CM2_TO_M2: f64 = 1.0e-4;

/// Every experimental input of the budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetParams {
    /// Atoms inside the beam (`N_i`).
    pub n_interaction: f64,
    pub wavelength_m: f64,
    pub beam_waist_m: f64,
    /// Ensemble atom number `N`.
    pub n_atoms: u64,
    /// Single-atom coupling. Not quoted anywhere; the presets back-solve it
    /// from the quoted double-excitation probabilities.
    pub g0_mhz: f64,
    pub blockade_shift_mhz: f64,
    pub dark_count_rate_hz: f64,
    pub protocol_time_s: f64,
    /// Herald probability entering the dark-count window.
    pub p_success: f64,
    /// Detection efficiency.
    pub eta: f64,
    pub number_density_cm3: f64,
    pub collision_cross_section_cm2: f64,
    pub atomic_mass_kg: f64,
    pub boltzmann_j_per_k: f64,
    pub temperature_k: f64,
    /// Cloud standard deviation. Carried along, not used by any formula.
    pub cloud_sigma_m: f64,
}

/// Names, in report order, of the [`BudgetParams`] fields.
pub const PARAM_NAMES: [&str; 16] = [
    "n_interaction",
    "wavelength_m",
    "beam_waist_m",
    "n_atoms",
    "g0_mhz",
    "blockade_shift_mhz",
    "dark_count_rate_hz",
    "protocol_time_s",
    "p_success",
    "eta",
    "number_density_cm3",
    "collision_cross_section_cm2",
    "atomic_mass_kg",
    "boltzmann_j_per_k",
    "temperature_k",
    "cloud_sigma_m",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// 43D5/2 Rydberg level, B = 0.25 MHz.
    Paper43d,
    /// 58D3/2 Rydberg level, B = 2.9 MHz.
    Paper58d,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Paper43d, Preset::Paper58d];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Paper43d => "paper-43d",
            Preset::Paper58d => "paper-58d",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    /// Quoted double-excitation probability the preset's `g0` reproduces.
    pub fn quoted_p_double(self) -> f64 {
        match self {
            Preset::Paper43d => 0.26,
            Preset::Paper58d => 0.57e-3,
        }
    }

    pub fn params(self) -> BudgetParams {
        let (wavelength, shift) = match self {
            Preset::Paper43d => (485.766e-9, 0.25),
            Preset::Paper58d => (485.081e-9, 2.9),
        };
        let n_atoms = 300;
        let g0 = g0_for_p_double(n_atoms, shift, self.quoted_p_double()).expect("preset values are valid");
        let eta = 0.3;
        BudgetParams {
            n_interaction: 300.0,
            wavelength_m: wavelength,
            beam_waist_m: PI * wavelength,
            n_atoms,
            g0_mhz: g0,
            blockade_shift_mhz: shift,
            dark_count_rate_hz: 20.0,
            protocol_time_s: 5e-6,
            p_success: eta,
            eta,
            number_density_cm3: 1e12,
            collision_cross_section_cm2: 1e-14,
            atomic_mass_kg: 87.0 * ATOMIC_MASS_UNIT,
            boltzmann_j_per_k: BOLTZMANN,
            temperature_k: 1e-3,
            cloud_sigma_m: 3.0e-6,
        }
    }
}

impl BudgetParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength_m", self.wavelength_m),
            ("beam_waist_m", self.beam_waist_m),
            ("g0_mhz", self.g0_mhz),
            ("blockade_shift_mhz", self.blockade_shift_mhz),
            ("protocol_time_s", self.protocol_time_s),
            ("number_density_cm3", self.number_density_cm3),
            ("collision_cross_section_cm2", self.collision_cross_section_cm2),
            ("atomic_mass_kg", self.atomic_mass_kg),
            ("boltzmann_j_per_k", self.boltzmann_j_per_k),
            ("temperature_k", self.temperature_k),
            ("cloud_sigma_m", self.cloud_sigma_m),
        ];
        for (name, v) in positive {
            ensure(v > 0.0 && v.is_finite(), name, v, "must be finite and > 0")?;
        }
        ensure(
            self.n_interaction >= 0.0 && self.n_interaction.is_finite(),
            "n_interaction",
            self.n_interaction,
            "must be finite and >= 0",
        )?;
        ensure(self.n_atoms >= 2, "n_atoms", self.n_atoms as f64, "must be at least 2")?;
        ensure(
            self.dark_count_rate_hz >= 0.0 && self.dark_count_rate_hz.is_finite(),
            "dark_count_rate_hz",
            self.dark_count_rate_hz,
            "must be finite and >= 0",
        )?;
        ensure(self.p_success > 0.0 && self.p_success <= 1.0, "p_success", self.p_success, "must lie in (0, 1]")?;
        ensure((0.0..=1.0).contains(&self.eta), "eta", self.eta, "must lie in [0, 1]")?;
        Ok(())
    }

    fn value_of(&self, name: &str) -> f64 {
        match name {
            "n_interaction" => self.n_interaction,
            "wavelength_m" => self.wavelength_m,
            "beam_waist_m" => self.beam_waist_m,
            "n_atoms" => self.n_atoms as f64,
            "g0_mhz" => self.g0_mhz,
            "blockade_shift_mhz" => self.blockade_shift_mhz,
            "dark_count_rate_hz" => self.dark_count_rate_hz,
            "protocol_time_s" => self.protocol_time_s,
            "p_success" => self.p_success,
            "eta" => self.eta,
            "number_density_cm3" => self.number_density_cm3,
            "collision_cross_section_cm2" => self.collision_cross_section_cm2,
            "atomic_mass_kg" => self.atomic_mass_kg,
            "boltzmann_j_per_k" => self.boltzmann_j_per_k,
            "temperature_k" => self.temperature_k,
            "cloud_sigma_m" => self.cloud_sigma_m,
            _ => unreachable!("unknown parameter {name}"),
        }
    }

    /// Sets a numeric field by name. Used by the command line and sweeps.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "n_interaction" => &mut self.n_interaction,
            "wavelength_m" => &mut self.wavelength_m,
            "beam_waist_m" => &mut self.beam_waist_m,
            "n_atoms" => {
                ensure(value >= 0.0 && value.fract() == 0.0 && value < u64::MAX as f64, "n_atoms", value, "must be a whole number")?;
                self.n_atoms = value as u64;
                return Ok(());
            }
            "g0_mhz" => &mut self.g0_mhz,
            "blockade_shift_mhz" => &mut self.blockade_shift_mhz,
            "dark_count_rate_hz" => &mut self.dark_count_rate_hz,
            "protocol_time_s" => &mut self.protocol_time_s,
            "p_success" => &mut self.p_success,
            "eta" => &mut self.eta,
            "number_density_cm3" => &mut self.number_density_cm3,
            "collision_cross_section_cm2" => &mut self.collision_cross_section_cm2,
            "atomic_mass_kg" => &mut self.atomic_mass_kg,
            "boltzmann_j_per_k" => &mut self.boltzmann_j_per_k,
            "temperature_k" => &mut self.temperature_k,
            "cloud_sigma_m" => &mut self.cloud_sigma_m,
            _ => return Err(Error::InvalidParameter { name: "budget parameter", value, reason: "unknown name" }),
        };
        *slot = value;
        Ok(())
    }
}

fn unit_of(name: &str) -> &'static str {
    match name {
        "wavelength_m" | "beam_waist_m" | "cloud_sigma_m" => "m",
        "g0_mhz" | "blockade_shift_mhz" => "MHz",
        "dark_count_rate_hz" => "Hz",
        "protocol_time_s" => "s",
        "number_density_cm3" => "cm^-3",
        "collision_cross_section_cm2" => "cm^2",
        "atomic_mass_kg" => "kg",
        "boltzmann_j_per_k" => "J/K",
        "temperature_k" => "K",
        _ => "1",
    }
}

/// `1 − exp(−N_i σ₀/A)` with `σ₀ = 3λ²/2π` and `A = π w₀²`.
pub fn p_absorption(n_interaction: f64, wavelength_m: f64, beam_waist_m: f64) -> Result<f64> {
    ensure(n_interaction >= 0.0 && n_interaction.is_finite(), "n_interaction", n_interaction, "must be finite and >= 0")?;
    ensure(wavelength_m > 0.0, "wavelength_m", wavelength_m, "must be > 0")?;
    ensure(beam_waist_m > 0.0, "beam_waist_m", beam_waist_m, "must be > 0")?;
    let sigma0 = 3.0 * wavelength_m * wavelength_m / (2.0 * PI);
    let area = PI * beam_waist_m * beam_waist_m;
    Ok(-(-n_interaction * sigma0 / area).exp_m1())
}

/// `(N−1) g_N² / (2 N B²)` with `g_N = √N g₀`.
pub fn p_double_excitation(n_atoms: u64, g0_mhz: f64, shift_mhz: f64) -> Result<f64> {
    ensure(n_atoms >= 2, "n_atoms", n_atoms as f64, "must be at least 2")?;
    ensure(g0_mhz > 0.0, "g0_mhz", g0_mhz, "must be > 0")?;
    ensure(shift_mhz > 0.0, "blockade_shift_mhz", shift_mhz, "must be > 0")?;
    let n = n_atoms as f64;
    let g_n_sqr = n * g0_mhz * g0_mhz;
    Ok((n - 1.0) * g_n_sqr / (2.0 * n * shift_mhz * shift_mhz))
}

/// Inverse of [`p_double_excitation`] in `g₀`.
pub fn g0_for_p_double(n_atoms: u64, shift_mhz: f64, p_double: f64) -> Result<f64> {
    ensure(n_atoms >= 2, "n_atoms", n_atoms as f64, "must be at least 2")?;
    ensure(shift_mhz > 0.0, "blockade_shift_mhz", shift_mhz, "must be > 0")?;
    ensure(p_double > 0.0 && p_double <= 1.0, "p_double", p_double, "must lie in (0, 1]")?;
    Ok(shift_mhz * (2.0 * p_double / (n_atoms as f64 - 1.0)).sqrt())
}

/// `1 − exp(−γ_dc t / p_success)`.
pub fn p_dark_count(rate_hz: f64, time_s: f64, p_success: f64) -> Result<f64> {
    ensure(rate_hz >= 0.0 && rate_hz.is_finite(), "dark_count_rate_hz", rate_hz, "must be finite and >= 0")?;
    ensure(time_s >= 0.0 && time_s.is_finite(), "protocol_time_s", time_s, "must be finite and >= 0")?;
    ensure(p_success > 0.0 && p_success <= 1.0, "p_success", p_success, "must lie in (0, 1]")?;
    Ok(-(-rate_hz * time_s / p_success).exp_m1())
}

/// `n σ √(3 k_B T / M)` with SI inputs.
pub fn collision_rate_si(density_m3: f64, cross_section_m2: f64, mass_kg: f64, boltzmann: f64, temperature_k: f64) -> Result<f64> {
    ensure(density_m3 > 0.0, "number_density", density_m3, "must be > 0")?;
    ensure(cross_section_m2 > 0.0, "collision_cross_section", cross_section_m2, "must be > 0")?;
    ensure(mass_kg > 0.0, "atomic_mass_kg", mass_kg, "must be > 0")?;
    ensure(boltzmann > 0.0, "boltzmann_j_per_k", boltzmann, "must be > 0")?;
    ensure(temperature_k >= 0.0 && temperature_k.is_finite(), "temperature_k", temperature_k, "must be finite and >= 0")?;
    Ok(density_m3 * cross_section_m2 * (3.0 * boltzmann * temperature_k / mass_kg).sqrt())
}

/// Collision rate with density in cm⁻³ and cross section in cm².
pub fn collision_rate(density_cm3: f64, cross_section_cm2: f64, mass_kg: f64, boltzmann: f64, temperature_k: f64) -> Result<f64> {
    collision_rate_si(density_cm3 / CM3_TO_M3, cross_section_cm2 * CM2_TO_M2, mass_kg, boltzmann, temperature_k)
}

/// First-order fidelity `1 − 2ε` for a per-ensemble absorption failure ε.
pub fn fidelity_estimate(epsilon: f64) -> Result<f64> {
    ensure((0.0..=0.5).contains(&epsilon), "epsilon", epsilon, "must lie in [0, 0.5]")?;
    Ok(1.0 - 2.0 * epsilon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mechanism {
    NoAbsorption,
    DoubleExcitation,
    DarkCount,
    Collision,
}

impl Mechanism {
    pub fn name(self) -> &'static str {
        match self {
            Mechanism::NoAbsorption => "no-absorption",
            Mechanism::DoubleExcitation => "double-excitation",
            Mechanism::DarkCount => "dark-count",
            Mechanism::Collision => "collision",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismEntry {
    pub mechanism: Mechanism,
    /// Probability per protocol run.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub params: BudgetParams,
    pub p_absorption: f64,
    pub p_double_excitation: f64,
    pub p_dark_count: f64,
    pub collision_rate_hz: f64,
    pub mechanisms: Vec<MechanismEntry>,
    pub dominant: Mechanism,
    /// `1 − P_abs`.
    pub epsilon: f64,
    /// `1 − 2ε` from absorption failure alone.
    pub fidelity_absorption: f64,
    /// `1 − 2(ε + P_dc)`, clamped at 0.
    pub fidelity_composite: f64,
    pub fidelity_quoted: f64,
    pub rydberg_decay_rate_hz: f64,
    pub hom_coincidence_rate_hz: f64,
}

pub fn budget_report(params: &BudgetParams) -> Result<BudgetReport> {
    params.validate()?;
    let p_abs = p_absorption(params.n_interaction, params.wavelength_m, params.beam_waist_m)?;
    let p2 = p_double_excitation(params.n_atoms, params.g0_mhz, params.blockade_shift_mhz)?;
    let pdc = p_dark_count(params.dark_count_rate_hz, params.protocol_time_s, params.p_success)?;
    let col = collision_rate(
        params.number_density_cm3,
        params.collision_cross_section_cm2,
        params.atomic_mass_kg,
        params.boltzmann_j_per_k,
        params.temperature_k,
    )?;
    let epsilon = 1.0 - p_abs;
    let mechanisms = vec![
        MechanismEntry { mechanism: Mechanism::NoAbsorption, probability: epsilon },
        MechanismEntry { mechanism: Mechanism::DoubleExcitation, probability: p2 },
        MechanismEntry { mechanism: Mechanism::DarkCount, probability: pdc },
        MechanismEntry { mechanism: Mechanism::Collision, probability: -(-col * params.protocol_time_s).exp_m1() },
    ];
    let dominant =
        mechanisms.iter().max_by(|a, b| a.probability.total_cmp(&b.probability)).map(|m| m.mechanism).expect("mechanism list is nonempty");
    Ok(BudgetReport {
        params: params.clone(),
        p_absorption: p_abs,
        p_double_excitation: p2,
        p_dark_count: pdc,
        collision_rate_hz: col,
        mechanisms,
        dominant,
        epsilon,
        fidelity_absorption: fidelity_estimate(epsilon.min(0.5))?,
        fidelity_composite: fidelity_estimate((epsilon + pdc).min(0.5))?,
        fidelity_quoted: QUOTED_FIDELITY,
        rydberg_decay_rate_hz: RYDBERG_DECAY_RATE_HZ,
        hom_coincidence_rate_hz: HOM_COINCIDENCE_RATE_HZ,
    })
}

impl BudgetReport {
    /// Aligned `name value unit` lines. Each input appears on exactly one
    /// line of the `[params]` block.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(String, String, &str)> = Vec::new();
        let sci = |v: f64| format!("{v:.6e}");
        rows.push(("[params]".into(), String::new(), ""));
        for name in PARAM_NAMES {
            rows.push((name.to_string(), sci(self.params.value_of(name)), unit_of(name)));
        }
        rows.push(("[derived]".into(), String::new(), ""));
        rows.push(("p_absorption".into(), sci(self.p_absorption), "1"));
        rows.push(("p_double_excitation".into(), sci(self.p_double_excitation), "1"));
        rows.push(("p_dark_count".into(), sci(self.p_dark_count), "1"));
        rows.push(("collision_rate".into(), sci(self.collision_rate_hz), "Hz"));
        rows.push(("[per-run error probability]".into(), String::new(), ""));
        for m in &self.mechanisms {
            rows.push((m.mechanism.name().to_string(), sci(m.probability), "1"));
        }
        rows.push(("dominant".into(), self.dominant.name().to_string(), ""));
        rows.push(("[fidelity]".into(), String::new(), ""));
        rows.push(("epsilon".into(), sci(self.epsilon), "1"));
        rows.push(("fidelity_absorption".into(), format!("{:.6}", self.fidelity_absorption), "1"));
        rows.push(("fidelity_composite".into(), format!("{:.6}", self.fidelity_composite), "1"));
        rows.push(("fidelity_quoted".into(), format!("{:.6}", self.fidelity_quoted), "1"));
        rows.push(("fidelity_residual".into(), format!("{:+.6}", self.fidelity_quoted - self.fidelity_absorption), "1"));
        rows.push(("[constants]".into(), String::new(), ""));
        rows.push(("rydberg_decay_rate".into(), sci(self.rydberg_decay_rate_hz), "Hz"));
        rows.push(("hom_coincidence_rate".into(), sci(self.hom_coincidence_rate_hz), "Hz"));

        let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (name, value, unit) in rows {
            let line = if value.is_empty() { name } else { format!("{name:<w$}  {value:>14}  {unit}") };
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absorption_examples() {
        let lambda = 485.766e-9;
        let p = p_absorption(300.0, lambda, PI * lambda).unwrap();
        assert!((p - 0.989).abs() < 0.002, "{p}");
        let ratio = 3.0 / (2.0 * PI.powi(4));
        assert!((p - (1.0 - (-300.0 * ratio).exp())).abs() < 1e-12);
        assert_eq!(p_absorption(0.0, lambda, PI * lambda).unwrap(), 0.0);
        assert!(p_absorption(1e6, lambda, PI * lambda).unwrap() > 0.9999);
        assert!(p_absorption(300.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn double_excitation_examples() {
        let g0 = g0_for_p_double(300, 0.25, 0.26).unwrap();
        assert!((g0 - 0.0104).abs() < 5e-5, "{g0}");
        assert!((p_double_excitation(300, g0, 0.25).unwrap() - 0.26).abs() < 1e-12);
        let far = p_double_excitation(300, 0.01, 1e3).unwrap();
        assert!((far - 299.0e-4 / 2.0e6).abs() < 1e-20);
        assert!(p_double_excitation(300, 0.01, 1e4).unwrap() < 1e-9);
        let a = p_double_excitation(300, 0.01, 0.5).unwrap();
        let b = p_double_excitation(300, 0.01, 1.0).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        assert!(p_double_excitation(1, 0.01, 1.0).is_err());
    }

    #[test]
    fn dark_count_examples() {
        let p = p_dark_count(20.0, 5e-6, 0.2).unwrap();
        assert!((p / 5e-4 - 1.0).abs() < 0.02);
        assert_eq!(p_dark_count(0.0, 5e-6, 0.2).unwrap(), 0.0);
        let q = p_dark_count(40.0, 5e-6, 0.2).unwrap();
        assert!((q / p - 2.0).abs() < 2e-3);
        assert!(p_dark_count(20.0, 5e-6, 0.0).is_err());
    }

    #[test]
    fn collision_examples() {
        let m = 87.0 * ATOMIC_MASS_UNIT;
        let r = collision_rate(1e12, 1e-14, m, BOLTZMANN, 1e-3).unwrap();
        assert!(r > 0.1 && r < 2.0, "{r}");
        assert_eq!(collision_rate(1e12, 1e-14, m, BOLTZMANN, 0.0).unwrap(), 0.0);
        let r4 = collision_rate(1e12, 1e-14, m, BOLTZMANN, 4e-3).unwrap();
        assert!((r4 / r - 2.0).abs() < 1e-12);
        let si = collision_rate_si(1e18, 1e-18, m, BOLTZMANN, 1e-3).unwrap();
        assert!((si / r - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fidelity_examples() {
        assert!((fidelity_estimate(0.011).unwrap() - 0.978).abs() < 1e-12);
        assert_eq!(fidelity_estimate(0.0).unwrap(), 1.0);
        assert_eq!(fidelity_estimate(0.25).unwrap(), 0.5);
        assert!(fidelity_estimate(0.6).is_err());
        assert!(fidelity_estimate(-0.1).is_err());
    }

    #[test]
    fn presets_reproduce_quoted_numbers() {
        for preset in Preset::ALL {
            let r = budget_report(&preset.params()).unwrap();
            assert!((r.p_absorption - 0.989).abs() < 0.002);
            assert!((r.p_double_excitation - preset.quoted_p_double()).abs() < 1e-12 * preset.quoted_p_double().max(1.0));
        }
        let g0 = Preset::Paper58d.params().g0_mhz;
        assert!((g0 - 0.0057).abs() < 1e-4, "{g0}");
        assert_eq!(budget_report(&Preset::Paper58d.params()).unwrap().dominant, Mechanism::NoAbsorption);
    }

    #[test]
    fn zero_error_limit() {
        let mut p = Preset::Paper58d.params();
        p.n_interaction = 1e9;
        p.dark_count_rate_hz = 0.0;
        let r = budget_report(&p).unwrap();
        assert_eq!(r.fidelity_absorption, 1.0);
        assert_eq!(r.fidelity_composite, 1.0);
    }

    #[test]
    fn every_param_on_exactly_one_line() {
        let text = budget_report(&Preset::Paper43d.params()).unwrap().to_text();
        for name in PARAM_NAMES {
            let hits = text.lines().filter(|l| l.split_whitespace().any(|tok| tok == name)).count();
            assert_eq!(hits, 1, "{name}");
        }
    }

    #[test]
    fn set_by_name_covers_every_field() {
        let mut p = Preset::Paper43d.params();
        for (k, name) in PARAM_NAMES.iter().enumerate() {
            p.set(name, (k + 2) as f64).unwrap();
            assert_eq!(p.value_of(name), (k + 2) as f64);
        }
        assert!(p.set("nope", 1.0).is_err());
        assert!(p.set("n_atoms", 2.5).is_err());
    }
}
