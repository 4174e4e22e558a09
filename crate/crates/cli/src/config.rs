//! Flat key = value experiment configuration.
//!
//! One human-editable file per experiment; CLI flags override file entries.
//! Every read validates and names the offending key on failure.

use std::collections::BTreeMap;
use std::path::Path;

use schlab_core::operator::Model;
use schlab_core::rng::OmegaDistribution;
use schlab_core::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn new() -> Self {
        Config::default()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::invalid("config", format!("cannot read {}: {e}", path.display()))
        })?;
        let mut cfg = Config::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(
                    "config",
                    format!("line {}: expected `key = value`, got `{raw}`", lineno + 1),
                )
            })?;
            cfg.set(key.trim(), value.trim());
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Apply `key=value` override strings (from CLI flags).
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<()> {
        for item in overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                Error::invalid("set", format!("expected key=value, got `{item}`"))
            })?;
            self.set(key.trim(), value.trim());
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::invalid(key, "missing required key"))
    }

    pub fn get_f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| Error::invalid(key, format!("not a number: `{s}`"))),
        }
    }

    pub fn get_usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse::<usize>()
                .map_err(|_| Error::invalid(key, format!("not an integer: `{s}`"))),
        }
    }

    pub fn get_u64(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(s) => s
                .parse::<u64>()
                .map_err(|_| Error::invalid(key, format!("not an integer: `{s}`"))),
        }
    }

    pub fn get_list_f64(&self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(key, format!("bad list element `{p}`")))
                })
                .collect(),
        }
    }

    pub fn get_list_usize(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some(s) => s
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::invalid(key, format!("bad list element `{p}`")))
                })
                .collect(),
        }
    }

    pub fn model(&self, default: Model) -> Result<Model> {
        match self.get("model") {
            None => Ok(default),
            Some(s) => Model::parse(s),
        }
    }

    pub fn omega(&self, default: OmegaDistribution) -> Result<OmegaDistribution> {
        match self.get("omega") {
            None => Ok(default),
            Some(s) => OmegaDistribution::parse(s),
        }
    }

    /// Energy with the |E| < 2 validation attached to the key name.
    pub fn energy(&self, default: f64) -> Result<f64> {
        let e = self.get_f64("E", default)?;
        if e.abs() >= 2.0 {
            return Err(Error::invalid("E", format!("|E| must be < 2, got {e}")));
        }
        Ok(e)
    }

    pub fn dt(&self, default: f64) -> Result<f64> {
        let dt = self.get_f64("dt", default)?;
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
        }
        Ok(dt)
    }

    pub fn paths(&self, default: usize) -> Result<usize> {
        let p = self.get_usize("paths", default)?;
        if p == 0 {
            return Err(Error::invalid("paths", "must be >= 1"));
        }
        Ok(p)
    }

    /// Stable hash of everything that affects results. Output-layout and
    /// scheduling keys are excluded: worker count never changes a report.
    pub fn result_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for (k, v) in &self.entries {
            if k == "out_dir" || k == "workers" {
                continue;
            }
            for b in k.bytes().chain([b'=']).chain(v.bytes()).chain([b';']) {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}
