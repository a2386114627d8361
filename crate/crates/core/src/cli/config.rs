//! Key-value input shared by command-line flags and config files.
//!
//! Flags are `--key value` (a bare `--key` means `true`). Config files hold
//! one `key = value` per line with `#` comments. File entries are applied
//! first, so flags override them; `vary` accumulates instead.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::CliError;

pub const SUBCOMMANDS: [&str; 5] = ["entangle", "ghz", "budget", "grow", "sweep"];

/// Keys that may be repeated, each occurrence adding a value.
const MULTI: [&str; 1] = ["vary"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub subcommand: Option<String>,
    pub entries: Vec<(String, String)>,
    pub help: bool,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn normalize_key(raw: &str) -> Result<String, CliError> {
    let key = raw.trim().replace('_', "-");
    let ok = !key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') && !key.starts_with('-');
    if ok {
        Ok(key.to_ascii_lowercase())
    } else {
        Err(config_err(format!("malformed key `{raw}`")))
    }
}

/// Splits raw arguments (without the program name).
pub fn parse_args<S: AsRef<str>>(args: &[S]) -> Result<Invocation, CliError> {
    let mut inv = Invocation { subcommand: None, entries: Vec::new(), help: false };
    let mut i = 0;
    while i < args.len() {
        let arg = args[i].as_ref();
        if arg == "-h" || arg == "--help" {
            inv.help = true;
            i += 1;
        } else if let Some(flag) = arg.strip_prefix("--") {
            let (key, value) = match flag.split_once('=') {
                Some((k, v)) => (k, Some(v.to_string())),
                None => (flag, None),
            };
            let key = normalize_key(key)?;
            let value = match value {
                Some(v) => v,
                None => match args.get(i + 1).map(AsRef::as_ref) {
                    Some(next) if !next.starts_with("--") => {
                        i += 1;
                        next.to_string()
                    }
                    _ => "true".to_string(),
                },
            };
            inv.entries.push((key, value));
            i += 1;
        } else if inv.subcommand.is_none() && inv.entries.is_empty() {
            inv.subcommand = Some(arg.to_string());
            i += 1;
        } else {
            return Err(config_err(format!("unexpected argument `{arg}`")));
        }
    }
    Ok(inv)
}

/// Parses `key = value` lines.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| config_err(format!("line {}: expected `key = value`", n + 1)))?;
        let v = v.trim();
        if v.is_empty() {
            return Err(config_err(format!("line {}: empty value for `{}`", n + 1, k.trim())));
        }
        out.push((normalize_key(k)?, v.to_string()));
    }
    Ok(out)
}

/// Typed view over the entries of one run. Every key must be consumed;
/// [`Params::finish`] rejects leftovers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    single: BTreeMap<String, String>,
    multi: BTreeMap<String, Vec<String>>,
}

impl Params {
    pub fn from_entries(entries: impl IntoIterator<Item = (String, String)>) -> Self {
        let mut p = Params::default();
        for (k, v) in entries {
            if MULTI.contains(&k.as_str()) {
                p.multi.entry(k).or_default().push(v);
            } else {
                p.single.insert(k, v);
            }
        }
        p
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.single.insert(key.to_string(), value);
    }

    pub fn contains(&self, key: &str) -> bool {
        self.single.contains_key(key)
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.single.remove(key)
    }

    pub fn take_all(&mut self, key: &str) -> Vec<String> {
        self.multi.remove(key).unwrap_or_default()
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.single.remove(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| config_err(format!("`{key}`: cannot parse `{raw}`: {e}"))),
        }
    }

    pub fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    pub fn finish(self) -> Result<(), CliError> {
        let mut left: Vec<&String> = self.single.keys().chain(self.multi.keys()).collect();
        left.sort();
        match left.as_slice() {
            [] => Ok(()),
            keys => Err(config_err(format!(
                "unknown key(s) for this command: {}",
                keys.iter().map(|k| format!("`{k}`")).collect::<Vec<_>>().join(", ")
            ))),
        }
    }
}

/// One swept parameter: `name=start:stop:step` or `name=v1,v2,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

fn parse_number(s: &str) -> Result<f64, CliError> {
    let v: f64 = s.trim().parse().map_err(|_| config_err(format!("`{s}` is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(config_err(format!("`{s}` is not finite")))
    }
}

/// Removes representation noise such as `0.30000000000000004`.
fn tidy(v: f64) -> f64 {
    format!("{v:.12e}").parse().unwrap_or(v)
}

pub fn parse_axis(raw: &str, max_points: usize) -> Result<SweepAxis, CliError> {
    let (name, range) = raw.split_once('=').ok_or_else(|| config_err(format!("sweep axis `{raw}` must look like name=start:stop:step")))?;
    let name = normalize_key(name)?;
    let range = range.trim();
    let values = if range.contains(':') {
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(config_err(format!("range `{range}` must be start:stop:step")));
        };
        let (start, stop, step) = (parse_number(start)?, parse_number(stop)?, parse_number(step)?);
        if step <= 0.0 {
            return Err(config_err(format!("range `{range}`: step must be positive")));
        }
        if stop < start {
            return Err(config_err(format!("range `{range}` is empty")));
        }
        let span = (stop - start) / step;
        if span + 1.0 > max_points as f64 {
            return Err(config_err(format!("range `{range}` exceeds the grid bound of {max_points} points")));
        }
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count).map(|k| tidy(start + k as f64 * step)).collect()
    } else {
        range.split(',').filter(|s| !s.trim().is_empty()).map(parse_number).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err(config_err(format!("sweep axis `{name}` has no values")));
    }
    Ok(SweepAxis { name, values })
}
