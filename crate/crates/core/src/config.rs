//! Flat `key = value` run configuration. `#` starts a comment.

use std::path::Path;

use crate::error::{Error, Result};
use crate::swsft::{FourierBackend, SymmetryPath};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub resolutions: Option<Vec<usize>>,
    pub backends: Option<Vec<FourierBackend>>,
    pub paths: Option<Vec<SymmetryPath>>,
    pub filter: Option<String>,
    pub powers: Option<Vec<f64>>,
    pub vocabulary: Option<Vec<String>>,
    pub output: Option<String>,
    pub repetitions: Option<usize>,
    pub warmup: Option<usize>,
    pub threads: Option<usize>,
}

fn list<T>(value: &str, line: usize, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(v).ok_or_else(|| Error::Config(format!("line {line}: cannot parse {v:?}"))))
        .collect()
}

fn single<T: std::str::FromStr>(value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("line {line}: cannot parse {value:?}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected key = value, found {content:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "seed" => cfg.seed = Some(single(value, line)?),
                "resolution" | "resolutions" => cfg.resolutions = Some(list(value, line, |v| v.parse().ok())?),
                "backend" | "backends" => cfg.backends = Some(list(value, line, |v| v.parse().ok())?),
                "path" | "paths" => cfg.paths = Some(list(value, line, |v| v.parse().ok())?),
                "filter" => cfg.filter = Some(value.to_string()),
                "powers" => cfg.powers = Some(list(value, line, |v| v.parse().ok())?),
                "vocabulary" => cfg.vocabulary = Some(list(value, line, |v| Some(v.to_string()))?),
                "output" => cfg.output = Some(value.to_string()),
                "repetitions" => cfg.repetitions = Some(single(value, line)?),
                "warmup" => cfg.warmup = Some(single(value, line)?),
                "threads" => cfg.threads = Some(single(value, line)?),
                other => return Err(Error::Config(format!("line {line}: unknown key {other:?}"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fields set in `overrides` win.
    pub fn merged(self, overrides: RunConfig) -> Self {
        Self {
            seed: overrides.seed.or(self.seed),
            resolutions: overrides.resolutions.or(self.resolutions),
            backends: overrides.backends.or(self.backends),
            paths: overrides.paths.or(self.paths),
            filter: overrides.filter.or(self.filter),
            powers: overrides.powers.or(self.powers),
            vocabulary: overrides.vocabulary.or(self.vocabulary),
            output: overrides.output.or(self.output),
            repetitions: overrides.repetitions.or(self.repetitions),
            warmup: overrides.warmup.or(self.warmup),
            threads: overrides.threads.or(self.threads),
        }
    }
}
