//! Subcommand implementations and their output records.

use serde::{Deserialize, Serialize};

use super::config::{parse_axis, Params, SweepAxis};
use super::output::{Body, Cell, Table};
use super::CliError;
use crate::budget::{budget_report, p_absorption, BudgetParams, BudgetReport, Preset, PARAM_NAMES};
use crate::ensemble::AbsorptionModel;
use crate::growth::{
    expected_cost_markov, simulate_growth, GrowthPolicy, GrowthStats, MarkovCost, Pairing, DEFAULT_CAP, DEFAULT_MAX_STATES,
};
use crate::optics::DetectorModel;
use crate::protocol::{
    entangle_pair_exact_with, entangle_pair_sampled, ghz4_exact, ghz_success_probability, Detector, HeraldPolicy, SampledEntangle,
};
use crate::Error;

pub const DEFAULT_MAX_GRID: usize = 10_000;
const MAX_AXES: usize = 2;

/// Defaults for the optical parameters, optionally pinned by a preset.
struct OpticsDefaults {
    eta: f64,
    p_abs: f64,
    dark_count_rate: f64,
}

fn optics_defaults(params: &mut Params) -> Result<OpticsDefaults, CliError> {
    match params.take_str("preset") {
        None => Ok(OpticsDefaults { eta: 1.0, p_abs: 1.0, dark_count_rate: 0.0 }),
        Some(name) => {
            let preset = parse_preset(&name)?;
            let b = preset.params();
            Ok(OpticsDefaults {
                eta: b.eta,
                p_abs: p_absorption(b.n_interaction, b.wavelength_m, b.beam_waist_m)?,
                dark_count_rate: b.dark_count_rate_hz,
            })
        }
    }
}

fn parse_preset(name: &str) -> Result<Preset, CliError> {
    Preset::parse(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}` (expected paper-43d or paper-58d)")))
}

fn parse_enum<T: Serialize + for<'de> Deserialize<'de>>(key: &str, raw: &str) -> Result<T, CliError> {
    serde_json::from_value(serde_json::Value::String(raw.to_string()))
        .map_err(|_| CliError::Config(format!("`{key}`: unknown value `{raw}`")))
}

fn detector(params: &mut Params, d: &OpticsDefaults) -> Result<DetectorModel, CliError> {
    let eta = params.take_or("eta", d.eta)?;
    let rate = params.take_or("dark-count-rate", d.dark_count_rate)?;
    let gate = params.take_or("gate-time", DetectorModel::DEFAULT_GATE)?;
    let resolving = params.take_or("number-resolving", false)?;
    Ok(DetectorModel::new(eta, rate, gate)?.number_resolving(resolving))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeraldSummary {
    pub probability: f64,
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntangleReport {
    pub eta: f64,
    pub p_abs: f64,
    pub dark_count_rate_hz: f64,
    pub gate_time_s: f64,
    pub number_resolving: bool,
    pub policy: HeraldPolicy,
    pub success_probability: f64,
    pub fidelity: f64,
    pub up: HeraldSummary,
    pub down: HeraldSummary,
    pub sampled: Option<SampledEntangle>,
}

impl EntangleReport {
    fn row(&self) -> Vec<(&'static str, Cell)> {
        let mut row = vec![
            ("eta", Cell::Num(self.eta)),
            ("p_abs", Cell::Num(self.p_abs)),
            ("dark_count_rate_hz", Cell::Num(self.dark_count_rate_hz)),
            ("success_probability", Cell::Num(self.success_probability)),
            ("fidelity", Cell::Num(self.fidelity)),
        ];
        if let Some(s) = &self.sampled {
            row.extend([
                ("trials", Cell::Int(s.trials)),
                ("herald_rate", Cell::Num(s.herald_rate)),
                ("up_fraction", Cell::Num(s.up_fraction)),
                ("mean_fidelity", Cell::Num(s.mean_fidelity)),
            ]);
        }
        row
    }
}

pub fn entangle(mut params: Params, seed: u64) -> Result<EntangleReport, CliError> {
    let defaults = optics_defaults(&mut params)?;
    let det = detector(&mut params, &defaults)?;
    let abs = AbsorptionModel::new(params.take_or("p-abs", defaults.p_abs)?)?;
    let policy = match params.take_str("policy") {
        Some(raw) => parse_enum("policy", &raw)?,
        None => HeraldPolicy::default(),
    };
    let trials: u64 = params.take_or("trials", 0)?;
    params.finish()?;

    let exact = entangle_pair_exact_with(&abs, &det, policy)?;
    let summary = |d: Detector| {
        let h = exact.herald(d);
        HeraldSummary { probability: h.probability, fidelity: h.fidelity }
    };
    let sampled = if trials > 0 { Some(entangle_pair_sampled(&abs, &det, policy, seed, trials)?) } else { None };
    Ok(EntangleReport {
        eta: det.efficiency,
        p_abs: abs.p_abs,
        dark_count_rate_hz: det.dark_count_rate,
        gate_time_s: det.gate_time,
        number_resolving: det.number_resolving,
        policy,
        success_probability: exact.success_probability,
        fidelity: exact.fidelity(),
        up: summary(Detector::Up),
        down: summary(Detector::Down),
        sampled,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhzPatternReport {
    pub detectors: [usize; 2],
    pub probability: f64,
    pub fidelity: Option<f64>,
    /// Ensembles receiving an X correction.
    pub flips: Vec<usize>,
    /// Phase of the Φ correction on ensemble A.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhzExact {
    pub success_probability: f64,
    pub fidelity: f64,
    pub patterns: Vec<GhzPatternReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GhzReport {
    pub qubits: u32,
    pub eta: f64,
    pub p_abs: f64,
    /// `η^{Q/2}(Q−2)/2^{Q−2}`.
    pub success_probability: f64,
    /// Full interferometer simulation, four qubits only.
    pub exact: Option<GhzExact>,
}

impl GhzReport {
    fn row(&self) -> Vec<(&'static str, Cell)> {
        let mut row = vec![
            ("qubits", Cell::Int(self.qubits as u64)),
            ("eta", Cell::Num(self.eta)),
            ("p_abs", Cell::Num(self.p_abs)),
            ("success_probability", Cell::Num(self.success_probability)),
        ];
        if let Some(e) = &self.exact {
            row.push(("exact_success_probability", Cell::Num(e.success_probability)));
            row.push(("exact_fidelity", Cell::Num(e.fidelity)));
        }
        row
    }
}

pub fn ghz(mut params: Params) -> Result<GhzReport, CliError> {
    let defaults = optics_defaults(&mut params)?;
    let qubits: u32 = params.take_or("qubits", 4)?;
    let det = detector(&mut params, &defaults)?;
    let abs = AbsorptionModel::new(params.take_or("p-abs", defaults.p_abs)?)?;
    let exact_wanted: bool = params.take_or("exact", qubits == 4)?;
    params.finish()?;

    let success_probability = ghz_success_probability(qubits, det.efficiency)?;
    let exact = if exact_wanted {
        if qubits != 4 {
            return Err(CliError::Config("`exact` simulation is only available for 4 qubits".into()));
        }
        let out = ghz4_exact(&abs, &det)?;
        Some(GhzExact {
            success_probability: out.success_probability,
            fidelity: out.fidelity(),
            patterns: out
                .accepted
                .iter()
                .map(|h| GhzPatternReport {
                    detectors: h.pattern.detectors(),
                    probability: h.probability,
                    fidelity: h.fidelity,
                    flips: h.correction.flips.clone(),
                    phase: h.correction.phase,
                })
                .collect(),
        })
    } else {
        None
    };
    Ok(GhzReport { qubits, eta: det.efficiency, p_abs: abs.p_abs, success_probability, exact })
}

fn budget_row(r: &BudgetReport) -> Vec<(&'static str, Cell)> {
    vec![
        ("p_absorption", Cell::Num(r.p_absorption)),
        ("p_double_excitation", Cell::Num(r.p_double_excitation)),
        ("p_dark_count", Cell::Num(r.p_dark_count)),
        ("collision_rate_hz", Cell::Num(r.collision_rate_hz)),
        ("fidelity_absorption", Cell::Num(r.fidelity_absorption)),
        ("fidelity_composite", Cell::Num(r.fidelity_composite)),
        ("dominant", Cell::Text(r.dominant.name().to_string())),
    ]
}

pub fn budget(mut params: Params) -> Result<BudgetReport, CliError> {
    let preset = match params.take_str("preset") {
        Some(name) => parse_preset(&name)?,
        None => Preset::Paper43d,
    };
    let mut p: BudgetParams = preset.params();
    for name in PARAM_NAMES {
        if let Some(v) = params.take::<f64>(&name.replace('_', "-"))? {
            p.set(name, v)?;
        }
    }
    params.finish()?;
    Ok(budget_report(&p)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowReport {
    pub policy: GrowthPolicy,
    pub eta: f64,
    pub eta_link: f64,
    pub seed: u64,
    pub stats: GrowthStats,
    /// Exact chain solution when the state space is small enough.
    pub markov: Option<MarkovCost>,
}

impl GrowReport {
    fn row(&self) -> Vec<(&'static str, Cell)> {
        let s = &self.stats;
        let mean = |x: &Option<crate::sampling::Summary>| Cell::opt(x.map(|x| x.mean));
        let se = |x: &Option<crate::sampling::Summary>| Cell::opt(x.map(|x| x.std_error));
        vec![
            ("block_size", Cell::Int(self.policy.block_size as u64)),
            ("target", Cell::Int(self.policy.target as u64)),
            ("eta", Cell::Num(self.eta)),
            ("eta_link", Cell::Num(self.eta_link)),
            ("trials", Cell::Int(s.trials)),
            ("success_fraction", Cell::Num(s.success_fraction)),
            ("cap_hits", Cell::Int(s.cap_hits)),
            ("blocks_mean", mean(&s.blocks)),
            ("blocks_stderr", se(&s.blocks)),
            ("link_attempts_mean", mean(&s.link_attempts)),
            ("link_attempts_stderr", se(&s.link_attempts)),
            ("generation_attempts_mean", mean(&s.generation_attempts)),
            ("steps_mean", mean(&s.steps)),
            ("markov_blocks", Cell::opt(self.markov.map(|m| m.expected_blocks))),
            ("markov_link_attempts", Cell::opt(self.markov.map(|m| m.expected_link_attempts))),
        ]
    }
}

pub fn grow(mut params: Params, seed: u64) -> Result<GrowReport, CliError> {
    let defaults = optics_defaults(&mut params)?;
    let policy = GrowthPolicy {
        block_size: params.take_or("block-size", 4)?,
        target: params.take_or("target", 8)?,
        pairing: match params.take_str("pairing") {
            Some(raw) => raw.parse::<Pairing>().map_err(CliError::Config)?,
            None => Pairing::default(),
        },
        pool_size: params.take_or("pool-size", 2)?,
        cap: params.take_or("cap", DEFAULT_CAP)?,
    };
    let eta = params.take_or("eta", defaults.eta)?;
    let eta_link = params.take_or("eta-link", eta)?;
    let trials = params.take_or("trials", 10_000u64)?;
    let markov_wanted = params.take_or("markov", true)?;
    let max_states = params.take_or("max-states", DEFAULT_MAX_STATES)?;
    params.finish()?;

    let stats = simulate_growth(&policy, eta, eta_link, seed, trials)?;
    let markov = if markov_wanted {
        match expected_cost_markov(&policy, eta, eta_link, max_states) {
            Ok(m) => Some(m),
            Err(Error::StateSpaceTooLarge { .. } | Error::NonAbsorbingChain) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    Ok(GrowReport { policy, eta, eta_link, seed, stats, markov })
}

/// A flat `(column, value)` view of one result.
pub type Row = Vec<(&'static str, Cell)>;

/// Runs one non-sweep command and returns its body plus its flat row.
pub fn dispatch(command: &str, params: Params, seed: u64) -> Result<(Body, Row), CliError> {
    match command {
        "entangle" => {
            let r = entangle(params, seed)?;
            let row = r.row();
            Ok((Body::Entangle(r), row))
        }
        "ghz" => {
            let r = ghz(params)?;
            let row = r.row();
            Ok((Body::Ghz(r), row))
        }
        "budget" => {
            let r = budget(params)?;
            let row = budget_row(&r);
            Ok((Body::Budget(Box::new(r)), row))
        }
        "grow" => {
            let r = grow(params, seed)?;
            let row = r.row();
            Ok((Body::Grow(r), row))
        }
        other => Err(CliError::Config(format!("`{other}` cannot be swept (expected entangle, ghz, budget or grow)"))),
    }
}

/// Grid evaluation of another command over one or two axes.
pub fn sweep(mut params: Params, seed: u64) -> Result<Table, CliError> {
    let over = params.take_str("over").ok_or_else(|| CliError::Config("sweep needs `over` (entangle, ghz, budget or grow)".into()))?;
    let max_grid: usize = params.take_or("max-grid", DEFAULT_MAX_GRID)?;
    let specs = params.take_all("vary");
    if specs.is_empty() {
        return Err(CliError::Config("sweep needs at least one `vary name=start:stop:step`".into()));
    }
    if specs.len() > MAX_AXES {
        return Err(CliError::Config(format!("at most {MAX_AXES} swept parameters are supported")));
    }
    let axes: Vec<SweepAxis> = specs.iter().map(|s| parse_axis(s, max_grid)).collect::<Result<_, _>>()?;
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(CliError::Config(format!("`{}` is swept twice", axes[0].name)));
    }
    let points: usize = axes.iter().map(|a| a.values.len()).product();
    if points > max_grid {
        return Err(CliError::Config(format!("grid of {points} points exceeds the bound of {max_grid}")));
    }
    for a in &axes {
        if params.contains(&a.name) {
            return Err(CliError::Config(format!("`{}` is both fixed and swept", a.name)));
        }
    }

    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for a in &axes {
        grid = grid
            .into_iter()
            .flat_map(|prefix| {
                a.values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }

    let mut columns: Vec<String> = axes.iter().map(|a| a.name.replace('-', "_")).collect();
    let mut rows = Vec::with_capacity(grid.len());
    let mut cap_hits = 0;
    for point in grid {
        let mut p = params.clone();
        for (a, v) in axes.iter().zip(&point) {
            p.set(&a.name, v.to_string());
        }
        let (body, row) = dispatch(&over, p, seed)?;
        if let Body::Grow(g) = &body {
            cap_hits += g.stats.cap_hits;
        }
        // Swept inputs already lead the row.
        let row: Vec<_> = row.into_iter().filter(|(c, _)| !axes.iter().any(|a| a.name.replace('-', "_") == *c)).collect();
        if rows.is_empty() {
            columns.extend(row.iter().map(|(c, _)| c.to_string()));
        }
        let mut cells: Vec<Cell> = point.into_iter().map(Cell::Num).collect();
        cells.extend(row.into_iter().map(|(_, c)| c));
        rows.push(cells);
    }
    Ok(Table { over, columns, rows, cap_hits })
}

/// Single-command result as a one-row table, for CSV output.
pub fn single_row_table(command: &str, row: Vec<(&'static str, Cell)>) -> Table {
    let (columns, cells): (Vec<String>, Vec<Cell>) = row.into_iter().map(|(c, v)| (c.to_string(), v)).unzip();
    Table { over: command.to_string(), columns, rows: vec![cells], cap_hits: 0 }
}
