//! Flag/config-file merging and value parsing.
//!
//! A config file holds flat `key = value` lines; `#` starts a comment. Keys
//! are the long flag names (`max-steps`, `eps`, ...). Flags given on the
//! command line win over file values.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "n",
    "eps",
    "trials",
    "seed",
    "mode",
    "max-steps",
    "convergence-tol",
    "consensus-tol",
    "threads",
    "out",
    "opinions",
    "trace",
    "trace-opinions",
    "suite",
    "cases",
];

/// Environment variable selecting the worker-thread count.
pub const THREADS_ENV: &str = "HK_THREADS";

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected `key = value`", lineno + 1)))?;
        let key = key.trim().replace('_', "-");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Usage(format!("config line {}: unknown key `{key}`", lineno + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

/// Effective settings of one invocation.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    /// Merges `flags` (already-present values win) over the optional file.
    pub fn load(file: Option<&Path>, flags: Vec<(&'static str, Option<String>)>) -> Result<Self, CliError> {
        let mut values = match file {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                parse_config_text(&text)?
            }
            None => BTreeMap::new(),
        };
        for (key, value) in flags {
            if let Some(v) = value {
                values.insert(key.to_string(), v);
            }
        }
        Ok(Settings { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::Usage(format!("invalid value `{v}` for --{key}"))))
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(false),
            Some("true" | "1" | "yes") => Ok(true),
            Some("false" | "0" | "no") => Ok(false),
            Some(v) => Err(CliError::Usage(format!("invalid boolean `{v}` for {key}"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?.ok_or_else(|| CliError::Usage(format!("missing required --{key}")))
    }

    /// Worker threads: `--threads`, else `HK_THREADS`, else one per core.
    pub fn threads(&self) -> Result<Option<usize>, CliError> {
        if let Some(t) = self.get::<usize>("threads")? {
            return Ok(Some(t));
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse().map(Some).map_err(|_| CliError::Usage(format!("invalid {THREADS_ENV}=`{v}`"))),
            Err(_) => Ok(None),
        }
    }
}

/// Rounds grid values to 12 decimals so `0.1:0.3:0.1` yields `0.3`, not
/// `0.30000000000000004`.
fn snap(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// A single number, a comma list, or an inclusive `start:stop:step` range.
pub fn parse_f64_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad grid specification `{spec}`"));
    let spec = spec.trim();
    if spec.contains(':') {
        let parts: Vec<f64> =
            spec.split(':').map(|p| p.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if !(start.is_finite() && stop.is_finite() && step.is_finite() && step > 0.0 && stop >= start) {
            return Err(bad());
        }
        // points past `stop` by more than rounding noise are excluded
        let count = ((stop - start) / step + 1e-6).floor() as usize + 1;
        return Ok((0..count).map(|k| snap(start + k as f64 * step)).collect());
    }
    spec.split(',')
        .map(|p| {
            p.trim().parse::<f64>().map_err(|_| bad()).and_then(|v| if v.is_finite() { Ok(v) } else { Err(bad()) })
        })
        .collect()
}

/// Like [`parse_f64_grid`] for agent counts.
pub fn parse_usize_grid(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("bad grid specification `{spec}`"));
    let spec = spec.trim();
    if spec.contains(':') {
        let parts: Vec<usize> =
            spec.split(':').map(|p| p.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if step == 0 || stop < start {
            return Err(bad());
        }
        return Ok((start..=stop).step_by(step).collect());
    }
    spec.split(',').map(|p| p.trim().parse::<usize>().map_err(|_| bad())).collect()
}

pub fn parse_opinions(spec: &str) -> Result<Vec<f64>, CliError> {
    spec.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad opinion `{}`", p.trim()))))
        .collect()
}
