//! Flat `key=value` run configuration.
//!
//! A config file holds one `key=value` pair per line; blank lines and lines
//! starting with `#` are ignored, unknown keys are rejected, and a repeated
//! key keeps its last value. Every key has a same-named CLI flag, and flag
//! values take precedence over file values (see [`Config::or`]), which in
//! turn take precedence over each subcommand's built-in defaults.
//!
//! Keys: `dims`, `budgets` (comma-separated lists), `d`, `T`, `sigma`, `k`,
//! `h_r`, `radius`, `delta`, `x_star`, `quad`, `lin`, `trials`, `seed`,
//! `policy` (`fixed:<h>` | `chebyshev` | `gaussian` | `boundary`), `out`,
//! `format` (`csv` | `json`).

use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::StepPolicy;
use crate::harness::OutputFormat;

/// Parsed configuration; `None` means the key was not given.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    /// Dimension sweep for grid subcommands.
    pub dims: Option<Vec<usize>>,
    /// Budget sweep for grid subcommands.
    pub budgets: Option<Vec<u64>>,
    /// Single dimension for point subcommands.
    pub d: Option<usize>,
    /// Single query budget (key `T`).
    pub budget: Option<u64>,
    /// Oracle noise scale.
    pub sigma: Option<f64>,
    /// Third-derivative bound / cubic coefficient.
    pub k: Option<f64>,
    /// Boundary step for closed-form evaluation.
    pub h_r: Option<f64>,
    /// Domain half-width for experiments.
    pub radius: Option<f64>,
    /// Adversarial oracle bias.
    pub delta: Option<f64>,
    /// Probe-point coordinate, broadcast across axes.
    pub x_star: Option<f64>,
    /// Quadratic coefficient of the cubic family.
    pub quad: Option<f64>,
    /// Linear coefficient of the cubic family.
    pub lin: Option<f64>,
    /// Monte Carlo trials per cell.
    pub trials: Option<u64>,
    /// Master seed.
    pub seed: Option<u64>,
    /// Step-size rule.
    pub policy: Option<StepPolicy>,
    /// Output file path.
    pub out: Option<PathBuf>,
    /// Output file format.
    pub format: Option<OutputFormat>,
}

fn parse_scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad value for {key}: {value:?}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = value.split(',').collect();
    if items.iter().all(|item| item.trim().is_empty()) {
        return Err(Error::invalid(format!("empty list for {key}")));
    }
    items
        .into_iter()
        .filter(|item| !item.trim().is_empty())
        .map(|item| parse_scalar(key, item))
        .collect()
}

impl Config {
    /// Parses config-file text. Unknown keys and malformed values are
    /// rejected with a one-line diagnostic naming the offender.
    pub fn parse(text: &str) -> Result<Config> {
        let mut config = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!(
                    "config line {} is not key=value: {line:?}",
                    lineno + 1
                ))
            })?;
            config.set(key.trim(), value.trim())?;
        }
        Ok(config)
    }

    /// Applies one `key=value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "dims" => self.dims = Some(parse_list(key, value)?),
            "budgets" => self.budgets = Some(parse_list(key, value)?),
            "d" => self.d = Some(parse_scalar(key, value)?),
            "T" => self.budget = Some(parse_scalar(key, value)?),
            "sigma" => self.sigma = Some(parse_scalar(key, value)?),
            "k" => self.k = Some(parse_scalar(key, value)?),
            "h_r" => self.h_r = Some(parse_scalar(key, value)?),
            "radius" => self.radius = Some(parse_scalar(key, value)?),
            "delta" => self.delta = Some(parse_scalar(key, value)?),
            "x_star" => self.x_star = Some(parse_scalar(key, value)?),
            "quad" => self.quad = Some(parse_scalar(key, value)?),
            "lin" => self.lin = Some(parse_scalar(key, value)?),
            "trials" => self.trials = Some(parse_scalar(key, value)?),
            "seed" => self.seed = Some(parse_scalar(key, value)?),
            "policy" => self.policy = Some(value.parse()?),
            "out" => self.out = Some(PathBuf::from(value)),
            "format" => self.format = Some(value.parse()?),
            other => {
                return Err(Error::invalid(format!("unknown config key {other:?}")))
            }
        }
        Ok(())
    }

    /// Field-wise precedence merge: every field of `self` wins when set,
    /// falling back to `fallback` otherwise. Flags call
    /// `flag_config.or(file_config)`.
    pub fn or(self, fallback: Config) -> Config {
        Config {
            dims: self.dims.or(fallback.dims),
            budgets: self.budgets.or(fallback.budgets),
            d: self.d.or(fallback.d),
            budget: self.budget.or(fallback.budget),
            sigma: self.sigma.or(fallback.sigma),
            k: self.k.or(fallback.k),
            h_r: self.h_r.or(fallback.h_r),
            radius: self.radius.or(fallback.radius),
            delta: self.delta.or(fallback.delta),
            x_star: self.x_star.or(fallback.x_star),
            quad: self.quad.or(fallback.quad),
            lin: self.lin.or(fallback.lin),
            trials: self.trials.or(fallback.trials),
            seed: self.seed.or(fallback.seed),
            policy: self.policy.or(fallback.policy),
            out: self.out.or(fallback.out),
            format: self.format.or(fallback.format),
        }
    }
}
