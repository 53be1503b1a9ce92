//! Run settings: built-in defaults, overlaid by a flat `key = value` config
//! file, overlaid by command-line flags. Each key resolves independently.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

/// Output rendering selected by `--format` or the `format` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format {other:?} (expected csv or json)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// Fully resolved run settings. `format` stays unset unless the user chose
/// one, because each command has its own natural default (tables via csv for
/// scan, json elsewhere).
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    /// Atoms (value, probability) of the coupling distribution.
    pub support: Vec<(f64, f64)>,
    pub seed: u64,
    pub delta: f64,
    pub m_max: u64,
    pub tol_f: f64,
    pub grid_step: f64,
    pub steps: u64,
    pub reorth_every: u64,
    pub format: Option<OutputFormat>,
    pub flag_threshold: f64,
    pub bisect_width: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            support: vec![(0.0, 0.5), (1.0, 0.5)],
            seed: 7,
            delta: 0.4,
            m_max: 1 << 24,
            tol_f: 1e-12,
            grid_step: 0.01,
            steps: 100_000,
            reorth_every: 10,
            format: None,
            flag_threshold: 1e-4,
            bisect_width: 1e-6,
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "support",
    "seed",
    "delta",
    "m_max",
    "tol_f",
    "grid_step",
    "steps",
    "reorth_every",
    "format",
    "flag_threshold",
    "bisect_width",
];

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(format!("line {}: unknown key {key:?}", lineno + 1));
        }
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}

/// `value:prob` pairs separated by commas, e.g. `0:0.5,1:0.5`.
pub fn parse_support(s: &str) -> Result<Vec<(f64, f64)>, String> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let (v, p) = part
            .split_once(':')
            .ok_or_else(|| format!("support atom {part:?}: expected value:probability"))?;
        let v: f64 = v.trim().parse().map_err(|e| format!("support value {v:?}: {e}"))?;
        let p: f64 = p.trim().parse().map_err(|e| format!("support probability {p:?}: {e}"))?;
        out.push((v, p));
    }
    Ok(out)
}

fn get<T, F>(map: &BTreeMap<String, String>, key: &str, parse: F, into: &mut T) -> Result<(), String>
where
    F: FnOnce(&str) -> Result<T, String>,
{
    if let Some(raw) = map.get(key) {
        *into = parse(raw)?;
    }
    Ok(())
}

fn num<T: std::str::FromStr>(raw: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    raw.parse().map_err(|e| format!("{raw:?}: {e}"))
}

impl Settings {
    /// Overlays config-file keys onto these settings.
    pub fn apply_file(&mut self, map: &BTreeMap<String, String>) -> Result<(), String> {
        get(map, "support", |s| parse_support(s), &mut self.support)?;
        get(map, "seed", num::<u64>, &mut self.seed)?;
        get(map, "delta", num::<f64>, &mut self.delta)?;
        get(map, "m_max", num::<u64>, &mut self.m_max)?;
        get(map, "tol_f", num::<f64>, &mut self.tol_f)?;
        get(map, "grid_step", num::<f64>, &mut self.grid_step)?;
        get(map, "steps", num::<u64>, &mut self.steps)?;
        get(map, "reorth_every", num::<u64>, &mut self.reorth_every)?;
        if let Some(raw) = map.get("format") {
            self.format = Some(OutputFormat::parse(raw)?);
        }
        get(map, "flag_threshold", num::<f64>, &mut self.flag_threshold)?;
        get(map, "bisect_width", num::<f64>, &mut self.bisect_width)?;
        Ok(())
    }

    /// Rejects values the pipeline cannot run with.
    pub fn validate(&self) -> Result<(), String> {
        if self.support.is_empty() {
            return Err("support must contain at least one atom".into());
        }
        let mut sum = 0.0;
        for &(_, p) in &self.support {
            if !(p > 0.0) {
                return Err("support probabilities must be positive".into());
            }
            sum += p;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(format!("support probabilities sum to {sum}, expected 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.m_max < 16 {
            return Err(format!("m_max must be at least 16, got {}", self.m_max));
        }
        if !(self.tol_f > 0.0) {
            return Err(format!("tol_f must be positive, got {}", self.tol_f));
        }
        if !(self.grid_step > 0.0) {
            return Err(format!("grid_step must be positive, got {}", self.grid_step));
        }
        if self.steps < 10_000 {
            return Err(format!("steps must be at least 10000, got {}", self.steps));
        }
        if !(1..=100).contains(&self.reorth_every) {
            return Err(format!(
                "reorth_every must lie in 1..=100, got {}",
                self.reorth_every
            ));
        }
        if !(self.flag_threshold > 0.0) {
            return Err(format!(
                "flag_threshold must be positive, got {}",
                self.flag_threshold
            ));
        }
        if !(self.bisect_width > 0.0) {
            return Err(format!(
                "bisect_width must be positive, got {}",
                self.bisect_width
            ));
        }
        Ok(())
    }
}

/// Which config file to read: explicit flag, then the LYAP_CONFIG variable,
/// then ./lyap.conf if present. Explicit paths must exist; the fallback is
/// optional.
pub fn resolve_config_path(flag: Option<&Path>) -> Result<Option<PathBuf>, String> {
    if let Some(p) = flag {
        if !p.exists() {
            return Err(format!("config file {} not found", p.display()));
        }
        return Ok(Some(p.to_path_buf()));
    }
    if let Ok(env_path) = std::env::var("LYAP_CONFIG") {
        let p = PathBuf::from(env_path);
        if !p.exists() {
            return Err(format!("LYAP_CONFIG file {} not found", p.display()));
        }
        return Ok(Some(p));
    }
    let fallback = PathBuf::from("lyap.conf");
    if fallback.exists() {
        return Ok(Some(fallback));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let map = parse_file("# full line\nseed = 9 # trailing\n\n  delta=0.3\n").unwrap();
        assert_eq!(map.get("seed").unwrap(), "9");
        assert_eq!(map.get("delta").unwrap(), "0.3");
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(parse_file("sedd = 9").is_err());
        assert!(parse_file("just words").is_err());
    }

    #[test]
    fn support_string_round_trips() {
        let s = parse_support("0:0.5, 1:0.5").unwrap();
        assert_eq!(s, vec![(0.0, 0.5), (1.0, 0.5)]);
        assert!(parse_support("0;0.5").is_err());
    }

    #[test]
    fn file_overlays_defaults() {
        let mut s = Settings::default();
        let map = parse_file("seed = 42\nsteps = 20000\nformat = json\n").unwrap();
        s.apply_file(&map).unwrap();
        assert_eq!(s.seed, 42);
        assert_eq!(s.steps, 20_000);
        assert_eq!(s.format, Some(OutputFormat::Json));
        assert_eq!(s.delta, 0.4); // untouched default
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut s = Settings::default();
        s.delta = 1.5;
        assert!(s.validate().is_err());
        let mut s = Settings::default();
        s.support = vec![(0.0, 0.7), (1.0, 0.7)];
        assert!(s.validate().is_err());
        let mut s = Settings::default();
        s.steps = 5;
        assert!(s.validate().is_err());
        assert!(Settings::default().validate().is_ok());
    }
}
