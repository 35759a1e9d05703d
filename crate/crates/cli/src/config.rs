//! Flat `key = value` configuration files and the resolved campaign settings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lhs_core::conic::SolverConfig;
use lhs_core::geometry::{random_directions_from, solid_directions, MeasurementSet, Solid};
use lhs_core::lhs::LhsMode;
use lhs_core::RngStream;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Stream id reserved for drawing a campaign's random measurement set; job
/// streams count up from zero.
pub const SET_STREAM: u64 = u64::MAX;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

fn normalize_key(k: &str) -> String {
    k.trim().replace('_', "-").to_ascii_lowercase()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::BadInput(format!("config line {}: expected `key = value`, got {raw:?}", n + 1)));
            };
            let key = normalize_key(k);
            if key.is_empty() {
                return Err(CliError::BadInput(format!("config line {}: empty key", n + 1)));
            }
            values.insert(key, v.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::BadInput(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(&normalize_key(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| v.parse::<T>().map_err(|e| CliError::BadInput(format!("config key {key} = {v:?}: {e}"))))
            .transpose()
    }

    /// `flag` if given, else the config value, else `default`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match flag {
            Some(v) => Ok(v),
            None => Ok(self.get(key)?.unwrap_or(default)),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }
}

/// A named solid or `random-m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SetChoice {
    Solid(Solid),
    Random { m: usize },
}

impl FromStr for SetChoice {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        if let Some(m) = s.strip_prefix("random-") {
            let m = m.parse().map_err(|_| CliError::BadInput(format!("bad measurement count in {s:?}")))?;
            return Ok(SetChoice::Random { m });
        }
        Ok(SetChoice::Solid(s.parse()?))
    }
}

impl std::fmt::Display for SetChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SetChoice::Solid(s) => f.write_str(s.name()),
            SetChoice::Random { m } => write!(f, "random-{m}"),
        }
    }
}

impl SetChoice {
    pub fn build(&self, seed: u64) -> Result<MeasurementSet> {
        Ok(match self {
            SetChoice::Solid(s) => solid_directions(*s),
            SetChoice::Random { m } => random_directions_from(*m, &mut RngStream::new(seed, SET_STREAM))?,
        })
    }
}

pub fn parse_mode(s: &str) -> Result<LhsMode> {
    match s {
        "projective" | "multipartite" => Ok(LhsMode::Projective),
        "povm" => Ok(LhsMode::povm_default()),
        other => Err(CliError::BadInput(format!("unknown mode {other:?} (projective or povm)"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CampaignKind {
    Volume,
    Bisection,
    Tables,
    Generator,
    Gme,
}

#[derive(Clone, Debug)]
pub struct CampaignConfig {
    pub kind: CampaignKind,
    pub set: SetChoice,
    pub mode: LhsMode,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub solver: SolverConfig,
    pub out: PathBuf,
}

impl CampaignConfig {
    pub fn new(kind: CampaignKind, set: SetChoice, samples: usize, out: impl Into<PathBuf>) -> Self {
        Self {
            kind,
            set,
            mode: LhsMode::Projective,
            samples,
            seed: 1,
            workers: 1,
            solver: SolverConfig::default(),
            out: out.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers < 1 {
            return Err(CliError::BadInput("worker count must be at least 1".into()));
        }
        if self.samples < 1 {
            return Err(CliError::BadInput("sample count must be at least 1".into()));
        }
        self.solver.validate()?;
        Ok(())
    }

    pub fn metadata(&self) -> CampaignMetadata {
        CampaignMetadata {
            kind: self.kind,
            set: self.set.to_string(),
            mode: self.mode.name().to_string(),
            samples: self.samples,
            seed: self.seed,
            workers: self.workers,
            solver: self.solver,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CampaignMetadata {
    pub kind: CampaignKind,
    pub set: String,
    pub mode: String,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub solver: SolverConfig,
    pub version: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_key_values_and_comments() {
        let cfg =
            ConfigFile::parse("# campaign\nseed = 7\n\nworkers=2 # inline\ntol_feas = 1e-6\nsolid = icosahedron\n")
                .unwrap();
        assert_eq!(cfg.get::<u64>("seed").unwrap(), Some(7));
        assert_eq!(cfg.get::<usize>("workers").unwrap(), Some(2));
        assert_eq!(cfg.get::<f64>("tol-feas").unwrap(), Some(1e-6));
        assert_eq!(cfg.raw("solid"), Some("icosahedron"));
        assert_eq!(cfg.get::<u64>("missing").unwrap(), None);
        assert_eq!(cfg.pick(Some(3u64), "seed", 1).unwrap(), 3);
        assert_eq!(cfg.pick(None, "seed", 1u64).unwrap(), 7);
        assert_eq!(cfg.pick(None, "other", 1u64).unwrap(), 1);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(ConfigFile::parse("seed 7"), Err(CliError::BadInput(_))));
        assert!(matches!(ConfigFile::parse(" = 7"), Err(CliError::BadInput(_))));
        let cfg = ConfigFile::parse("seed = x").unwrap();
        assert!(matches!(cfg.get::<u64>("seed"), Err(CliError::BadInput(_))));
    }

    #[test]
    fn set_choices() {
        assert_eq!("icosahedron".parse::<SetChoice>().unwrap(), SetChoice::Solid(Solid::Icosahedron));
        assert_eq!("random-6".parse::<SetChoice>().unwrap(), SetChoice::Random { m: 6 });
        assert!("random-x".parse::<SetChoice>().is_err());
        assert!("tetrahedron".parse::<SetChoice>().is_err());
        let a = SetChoice::Random { m: 6 }.build(5).unwrap();
        let b = SetChoice::Random { m: 6 }.build(5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 6);
    }

    #[test]
    fn campaign_config_guards() {
        let mut cfg = CampaignConfig::new(CampaignKind::Volume, SetChoice::Solid(Solid::Icosahedron), 10, "out");
        assert!(cfg.validate().is_ok());
        cfg.workers = 0;
        assert!(cfg.validate().is_err());
        cfg.workers = 1;
        cfg.samples = 0;
        assert!(cfg.validate().is_err());
    }
}
