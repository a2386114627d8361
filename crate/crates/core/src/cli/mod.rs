//! The `blockade` command line.
//!
//! ```text
//! blockade <entangle|ghz|budget|grow|sweep> [--key value]... [--config FILE]
//! ```
//!
//! Every flag can also be given in a config file as `key = value`. Results
//! go to `--output PATH` (written atomically) or to stdout. Relative output
//! paths are placed under `$BLOCKADE_OUTPUT_DIR` when it is set.
//!
//! Exit status: 0 success, 1 I/O failure, 2 configuration error, 3 invalid
//! physical parameter, 4 some growth trial hit its step cap (the output is
//! still written).

pub mod commands;
pub mod config;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use thiserror::Error;

use self::commands::{dispatch, single_row_table, sweep};
use self::config::{parse_args, parse_config_text, Invocation, Params, SUBCOMMANDS};
use self::output::{render, resolve_output, write_atomic, Body, Document, Format, OUTPUT_DIR_ENV, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("invalid parameter: {0}")]
    Validation(#[from] crate::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
        }
    }
}

pub const EXIT_CAP_HIT: i32 = 4;

pub const USAGE: &str = "\
usage: blockade <command> [--key value]... [--config FILE]

commands:
  entangle  two-ensemble heralded entangler (exact, plus Monte Carlo with --trials)
  ghz       four-ensemble GHZ interferometer and the Q-qubit success formula
  budget    analytic error budget
  grow      cluster growth Monte Carlo with an exact Markov cross-check
  sweep     evaluate another command over a 1-D or 2-D grid

common keys:
  seed, output, format (csv|json|text), config, preset (paper-43d|paper-58d)

entangle: eta, p-abs, dark-count-rate, gate-time, number-resolving,
          policy (exactly-one|ignore-other), trials
ghz:      qubits, eta, p-abs, dark-count-rate, gate-time, number-resolving, exact
budget:   n-interaction, wavelength-m, beam-waist-m, n-atoms, g0-mhz,
          blockade-shift-mhz, dark-count-rate-hz, protocol-time-s, p-success,
          eta, number-density-cm3, collision-cross-section-cm2, atomic-mass-kg,
          boltzmann-j-per-k, temperature-k, cloud-sigma-m
grow:     block-size, target, pairing (largest-first|smallest-first|random),
          pool-size, cap, eta, eta-link, trials, markov, max-states
sweep:    over <command>, vary name=start:stop:step (up to twice), max-grid,
          plus any key of the swept command
";

/// A fully parsed invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub subcommand: String,
    pub params: Params,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn from_invocation(inv: Invocation) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        let mut subcommand = inv.subcommand;
        if let Some((_, path)) = inv.entries.iter().rev().find(|(k, _)| k == "config") {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read config `{path}`: {e}")))?;
            for (k, v) in parse_config_text(&text)? {
                if k == "command" {
                    subcommand.get_or_insert(v);
                } else {
                    entries.push((k, v));
                }
            }
        }
        entries.extend(inv.entries.into_iter().filter(|(k, _)| k != "config"));
        let subcommand = subcommand.ok_or_else(|| CliError::Config("missing command".into()))?;
        if !SUBCOMMANDS.contains(&subcommand.as_str()) {
            return Err(CliError::Config(format!("unknown command `{subcommand}`")));
        }
        let mut params = Params::from_entries(entries);
        let seed = params.take_or("seed", 0u64)?;
        let output = params.take_str("output").map(PathBuf::from);
        let format = match params.take_str("format") {
            Some(f) => Format::parse(&f)?,
            None => Format::infer(output.as_deref()),
        };
        Ok(Self { subcommand, params, seed, output, format })
    }
}

/// Result of a successful run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub document: Document,
    pub rendered: String,
    pub cap_hits: u64,
}

/// Executes a run without touching the filesystem.
pub fn execute(config: &RunConfig) -> Result<Artifact, CliError> {
    let params = config.params.clone();
    let (body, table) = if config.subcommand == "sweep" {
        let table = sweep(params, config.seed)?;
        (Body::Sweep(table.clone()), table)
    } else {
        let (body, row) = dispatch(&config.subcommand, params, config.seed)?;
        (body, single_row_table(&config.subcommand, row))
    };
    let cap_hits = match &body {
        Body::Grow(g) => g.stats.cap_hits,
        Body::Sweep(t) => t.cap_hits,
        _ => 0,
    };
    let document = Document { schema_version: SCHEMA_VERSION, seed: config.seed, body };
    let rendered = render(&document, &table, config.format)?;
    Ok(Artifact { document, rendered, cap_hits })
}

/// Executes a run and writes the artifact. Returns the exit status.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let artifact = execute(config)?;
    match &config.output {
        Some(path) => {
            let dir = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
            write_atomic(&resolve_output(path, dir.as_deref()), &artifact.rendered)?;
        }
        None => stdout.write_all(artifact.rendered.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?,
    }
    Ok(if artifact.cap_hits > 0 { EXIT_CAP_HIT } else { 0 })
}

/// Entry point used by the binary: parses `args` (without the program
/// name), runs, and reports errors on `stderr`.
pub fn main_with<S: AsRef<str>>(args: &[S], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = parse_args(args).and_then(|inv| {
        if inv.help || (inv.subcommand.is_none() && inv.entries.is_empty()) {
            let _ = stdout.write_all(USAGE.as_bytes());
            return Ok(if inv.help { 0 } else { 2 });
        }
        let config = RunConfig::from_invocation(inv)?;
        let code = run(&config, stdout)?;
        if code == EXIT_CAP_HIT {
            let _ = writeln!(stderr, "warning: some growth trials hit the step cap");
        }
        Ok(code)
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "blockade: {e}");
            e.exit_code()
        }
    }
}
