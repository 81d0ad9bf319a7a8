//! Flat key = value configuration: the run-file format, flag overlaying,
//! and typed extraction into core model objects. Keys carry their units
//! (burn_in_sweeps, horizon_time) so emitted files read unambiguously.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;

use wulff_core::gibbs::{Ensemble, GibbsConfig, HamiltonianVariant};
use wulff_core::sampler::{MoveMix, Schedule};

use crate::{usage, CliResult};

/// Default master seed when neither flag nor file provides one.
pub const DEFAULT_SEED: u64 = 1;

/// An ordered set of key = value entries. Later insertions override earlier
/// ones, which is how explicit flags take precedence over a config file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses the flat format: one `key = value` per line, `#` comments,
    /// blank lines ignored. Duplicate keys are rejected (a file that says
    /// two different things should not silently half-win).
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut map = ConfigMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(usage(format!(
                    "config line {}: expected `key = value`, got {line:?}",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty()
                || !key
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
            {
                return Err(usage(format!(
                    "config line {}: key {key:?} must be lower_snake_case",
                    lineno + 1
                )));
            }
            if map.entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(usage(format!(
                    "config line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
        }
        Ok(map)
    }

    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(ConfigMap::new()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                Self::parse(&text)
            }
        }
    }

    /// The canonical emission: sorted `key = value` lines. Re-parsing the
    /// emitted text reproduces this map exactly.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn set(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Overrides `key` when a flag supplied a value.
    pub fn overlay(&mut self, key: &str, value: Option<impl Display>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Rejects any key outside the verb's vocabulary, so typos fail loudly
    /// instead of silently running defaults.
    pub fn restrict(&self, allowed: &[&str]) -> CliResult<()> {
        for key in self.entries.keys() {
            if !allowed.contains(&key.as_str()) {
                return Err(usage(format!(
                    "unknown config key {key:?}; this verb accepts: {}",
                    allowed.join(", ")
                )));
            }
        }
        Ok(())
    }

    fn parse_as<T: std::str::FromStr>(&self, key: &str, kind: &str) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|_| {
                usage(format!("config key {key:?}: {raw:?} is not {kind}"))
            }),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> CliResult<u64> {
        Ok(self.parse_as::<u64>(key, "an unsigned integer")?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> CliResult<usize> {
        Ok(self.parse_as::<usize>(key, "an unsigned integer")?.unwrap_or(default))
    }

    pub fn i64_or(&self, key: &str, default: i64) -> CliResult<i64> {
        Ok(self.parse_as::<i64>(key, "an integer")?.unwrap_or(default))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        Ok(self.parse_as::<f64>(key, "a number")?.unwrap_or(default))
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.get(key).unwrap_or(default)
    }

    /// Comma-separated list of numbers under `key`.
    pub fn f64_list(&self, key: &str) -> CliResult<Vec<f64>> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(raw) => raw
                .split(',')
                .map(|tok| {
                    let tok = tok.trim();
                    tok.parse::<f64>()
                        .map_err(|_| usage(format!("config key {key:?}: {tok:?} is not a number")))
                })
                .collect(),
        }
    }

    pub fn u64_list(&self, key: &str) -> CliResult<Vec<u64>> {
        match self.get(key) {
            None => Ok(Vec::new()),
            Some(raw) => raw
                .split(',')
                .map(|tok| {
                    let tok = tok.trim();
                    tok.parse::<u64>().map_err(|_| {
                        usage(format!("config key {key:?}: {tok:?} is not an unsigned integer"))
                    })
                })
                .collect(),
        }
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }
}

pub fn variant_label(variant: HamiltonianVariant) -> &'static str {
    match variant {
        HamiltonianVariant::BoundarySize => "boundary",
        HamiltonianVariant::BoundaryLocalTime => "boundary-local-time",
        HamiltonianVariant::ConditionedLocalTime => "conditioned",
    }
}

pub fn parse_variant(label: &str) -> CliResult<HamiltonianVariant> {
    match label {
        "boundary" => Ok(HamiltonianVariant::BoundarySize),
        "boundary-local-time" => Ok(HamiltonianVariant::BoundaryLocalTime),
        "conditioned" => Ok(HamiltonianVariant::ConditionedLocalTime),
        other => Err(usage(format!(
            "variant {other:?} unknown; expected boundary, boundary-local-time, or conditioned"
        ))),
    }
}

/// Assembles the model from the resolved map: exactly one of `steps` /
/// `horizon_time` selects the ensemble.
pub fn gibbs_from(map: &ConfigMap) -> CliResult<GibbsConfig> {
    let dim = map.usize_or("dim", 2)?;
    let beta = map.f64_or("beta", 1.0)?;
    let variant = parse_variant(map.str_or("variant", "boundary"))?;
    let ensemble = match (map.contains("steps"), map.contains("horizon_time")) {
        (true, true) => {
            return Err(usage(
                "give either steps (fixed-step ensemble) or horizon_time \
                 (continuous time), not both",
            ))
        }
        (false, false) => {
            return Err(usage(
                "an ensemble is required: set steps or horizon_time",
            ))
        }
        (true, false) => Ensemble::DiscreteSkeleton {
            steps: map.u64_or("steps", 0)?,
        },
        (false, true) => Ensemble::ContinuousTime {
            horizon: map.f64_or("horizon_time", 0.0)?,
        },
    };
    let config = GibbsConfig {
        dim,
        variant,
        ensemble,
        beta,
    };
    config.validate()?;
    Ok(config)
}

pub fn schedule_from(map: &ConfigMap) -> CliResult<Schedule> {
    let schedule = Schedule::new(
        map.u64_or("burn_in_sweeps", 500)?,
        map.u64_or("samples", 1000)?,
        map.u64_or("thinning_sweeps", 2)?,
    );
    schedule.validate()?;
    Ok(schedule)
}

pub fn mix_from(map: &ConfigMap) -> CliResult<MoveMix> {
    match map.str_or("move_mix", "default") {
        "default" => Ok(MoveMix::default()),
        "large-system" => Ok(MoveMix::large_system()),
        other => Err(usage(format!(
            "move_mix {other:?} unknown; expected default or large-system"
        ))),
    }
}

/// Writes the model back into a map (the echo side of the round trip).
pub fn echo_gibbs(map: &mut ConfigMap, config: &GibbsConfig) {
    map.set("dim", config.dim);
    map.set("beta", config.beta);
    map.set("variant", variant_label(config.variant));
    match config.ensemble {
        Ensemble::DiscreteSkeleton { steps } => map.set("steps", steps),
        Ensemble::ContinuousTime { horizon } => map.set("horizon_time", horizon),
    }
}
