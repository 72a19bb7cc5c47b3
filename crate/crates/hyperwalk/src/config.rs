//! Flat `key=value` experiment configs.
//!
//! Tokens are separated by whitespace or newlines, `#` starts a comment, and
//! a bare token such as `symmetric` means `symmetric=true`. The same syntax
//! is used for config files and for `--params`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

pub const SEED_ENV: &str = "HYPERWALK_SEED";
pub const DEFAULT_SEED: u64 = 0x5eed_2015;
pub const DEFAULT_GRID: &str = "1..30";

#[derive(Debug, Error, PartialEq)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

pub fn config_error(field: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Mc,
    Bounds,
    Cutoff,
    Glauber,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Mc => "mc",
            Mode::Bounds => "bounds",
            Mode::Cutoff => "cutoff",
            Mode::Glauber => "glauber",
        }
    }
}

impl FromStr for Mode {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "exact" => Mode::Exact,
            "mc" => Mode::Mc,
            "bounds" => Mode::Bounds,
            "cutoff" | "cutoff-profile" => Mode::Cutoff,
            "glauber" => Mode::Glauber,
            _ => return Err(config_error("mode", format!("unknown mode `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedSource {
    Explicit,
    Env,
    Default,
}

impl SeedSource {
    pub fn describe(self) -> &'static str {
        match self {
            SeedSource::Explicit => "explicit",
            SeedSource::Env => SEED_ENV,
            SeedSource::Default => "built-in default",
        }
    }
}

/// Key/value pairs in insertion-independent (sorted) order.
pub type Params = BTreeMap<String, String>;

pub fn parse_pairs(text: &str) -> Result<Params, ConfigError> {
    let mut out = Params::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        for token in line.split_whitespace() {
            let (k, v) = match token.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None => (token, "true"),
            };
            if k.is_empty() {
                return Err(config_error(token, "empty key"));
            }
            out.insert(k.to_string(), v.to_string());
        }
    }
    Ok(out)
}

/// `a..b` (inclusive), `a..b:step`, or a comma list.
pub fn parse_grid(text: &str) -> Result<Vec<u64>, ConfigError> {
    let err = |m: &str| config_error("t_grid", format!("{m} in `{text}`"));
    let int = |s: &str| s.trim().parse::<u64>().map_err(|_| err("bad integer"));
    let grid = if let Some((start, rest)) = text.split_once("..") {
        let (stop, step) = match rest.split_once(':') {
            Some((stop, step)) => (int(stop)?, int(step)?),
            None => (int(rest)?, 1),
        };
        let start = int(start)?;
        if step == 0 {
            return Err(err("step must be positive"));
        }
        if stop < start {
            return Err(err("range is empty"));
        }
        (start..=stop).step_by(step as usize).collect()
    } else {
        text.split(',').map(int).collect::<Result<Vec<_>, _>>()?
    };
    hyperwalk_core::walk::validate_grid(&grid).map_err(|e| err(&e.to_string()))?;
    Ok(grid)
}

/// A decimal or `p/q`.
pub fn parse_number(field: &str, text: &str) -> Result<f64, ConfigError> {
    let bad = || config_error(field, format!("`{text}` is not a number"));
    let x = match text.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            p / q
        }
        None => text.trim().parse().map_err(|_| bad())?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad())
    }
}

pub fn parse_list(field: &str, text: &str) -> Result<Vec<f64>, ConfigError> {
    text.split(',').map(|t| parse_number(field, t)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: String,
    /// Family parameters, e.g. `weights`, `n`, `a`, `k`, `width`, `beta`, `c`.
    pub params: Params,
    pub mode: Mode,
    pub t_grid: Vec<u64>,
    /// `None` when the grid was left to the mode's default.
    pub t_grid_text: Option<String>,
    pub trials: u64,
    pub seed: u64,
    pub seed_source: SeedSource,
    pub output: Option<PathBuf>,
}

const RESERVED: [&str; 8] = [
    "family", "mode", "t", "t_grid", "trials", "seed", "out", "output",
];

impl ExperimentConfig {
    /// Builds a config from merged key/value pairs. The seed falls back to
    /// `HYPERWALK_SEED`, then to a fixed default.
    pub fn from_pairs(pairs: &Params) -> Result<Self, ConfigError> {
        Self::from_pairs_with_env(pairs, std::env::var(SEED_ENV).ok())
    }

    pub fn from_pairs_with_env(
        pairs: &Params,
        env_seed: Option<String>,
    ) -> Result<Self, ConfigError> {
        let family = pairs
            .get("family")
            .cloned()
            .ok_or_else(|| config_error("family", "missing"))?;
        let mode: Mode = pairs
            .get("mode")
            .ok_or_else(|| config_error("mode", "missing"))?
            .parse()?;
        let t_grid_text = pairs.get("t").or_else(|| pairs.get("t_grid")).cloned();
        let t_grid = parse_grid(t_grid_text.as_deref().unwrap_or(DEFAULT_GRID))?;
        let trials = match pairs.get("trials") {
            Some(t) => t
                .parse::<u64>()
                .map_err(|_| config_error("trials", format!("`{t}` is not a count")))?,
            None if mode == Mode::Mc || mode == Mode::Cutoff => 10_000,
            None => 0,
        };
        if mode == Mode::Mc && trials == 0 {
            return Err(config_error("trials", "must be >= 1 in mc mode"));
        }
        let parse_seed = |field: &str, s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| config_error(field, format!("`{s}` is not a 64-bit seed")))
        };
        let (seed, seed_source) = match (pairs.get("seed"), env_seed) {
            (Some(s), _) => (parse_seed("seed", s)?, SeedSource::Explicit),
            (None, Some(s)) => (parse_seed(SEED_ENV, &s)?, SeedSource::Env),
            (None, None) => (DEFAULT_SEED, SeedSource::Default),
        };
        let output = pairs
            .get("out")
            .or_else(|| pairs.get("output"))
            .map(PathBuf::from);
        let params = pairs
            .iter()
            .filter(|(k, _)| !RESERVED.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(ExperimentConfig {
            family,
            params,
            mode,
            t_grid,
            t_grid_text,
            trials,
            seed,
            seed_source,
            output,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn usize_param(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.param(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| config_error(key, format!("`{v}` is not a non-negative integer")))
            })
            .transpose()
    }

    pub fn require_usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.usize_param(key)?
            .ok_or_else(|| config_error(key, format!("required by family `{}`", self.family)))
    }

    pub fn f64_param(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.param(key).map(|v| parse_number(key, v)).transpose()
    }

    pub fn list_param(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.param(key).map(|v| parse_list(key, v)).transpose()
    }

    pub fn flag(&self, key: &str) -> bool {
        matches!(self.param(key), Some("true" | "1" | "yes"))
    }

    /// Parameters as one canonical `k=v` line.
    pub fn params_line(&self) -> String {
        self.params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
