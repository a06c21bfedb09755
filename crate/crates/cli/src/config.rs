//! Run configuration: defaults, then a flat `key = value` file, then flags.

use std::path::PathBuf;
use std::str::FromStr;

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(CliError::Config(format!("format must be json or csv, got '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub cap: Option<usize>,
}

pub const KEYS: [&str; 7] = ["seed", "jobs", "format", "output", "tol", "max_iters", "cap"];

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_flat(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got '{line}'", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(CliError::Config(format!("line {}: empty key or value", n + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Config(format!("bad value '{v}' for {key}")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), CliError> {
        match key {
            "seed" => self.seed = parse(key, v)?,
            "jobs" => self.jobs = Some(parse(key, v)?),
            "format" => self.format = v.parse()?,
            "output" => self.output = Some(PathBuf::from(v)),
            "tol" => {
                let t: f64 = parse(key, v)?;
                if !(t > 0.0 && t.is_finite()) {
                    return Err(CliError::Config(format!("tol must be positive, got {v}")));
                }
                self.tol = Some(t);
            }
            "max_iters" => self.max_iters = Some(parse(key, v)?),
            "cap" => self.cap = Some(parse(key, v)?),
            other => {
                return Err(CliError::Config(format!(
                    "unknown key '{other}' (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (k, v) in parse_flat(text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_file() {
        let mut c = RunConfig::default();
        c.apply_text("# run\nseed = 7\n\nformat=csv  # inline\ntol = 1e-6\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.format, Format::Csv);
        assert_eq!(c.tol, Some(1e-6));
        assert!(matches!(c.apply_text("seed 7"), Err(CliError::Config(_))));
        assert!(matches!(c.apply_text("speed = 7"), Err(CliError::Config(_))));
        assert!(matches!(c.apply_text("seed = -1"), Err(CliError::Config(_))));
        assert!(matches!(c.apply_text("tol = 0"), Err(CliError::Config(_))));
    }
}
