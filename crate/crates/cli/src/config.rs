//! Run configuration, as parsed from flags and as echoed in manifests.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use snp_core::cluster::DEFAULT_CLUSTERS;
use snp_core::io::Format;

use crate::error::{CliError, CliResult};

/// `--pool name=path` (one dataset, renamed) or `--pool path` (a pool file
/// whose dataset names are kept).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSource {
    pub name: Option<String>,
    pub path: PathBuf,
}

impl FromStr for PoolSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once('=') {
            Some((name, path)) if !name.is_empty() && !path.is_empty() => Ok(Self {
                name: Some(name.to_string()),
                path: PathBuf::from(path),
            }),
            Some(_) => Err(format!("expected <name>=<path>, got {s:?}")),
            None if !s.is_empty() => Ok(Self {
                name: None,
                path: PathBuf::from(s),
            }),
            None => Err("empty pool argument".to_string()),
        }
    }
}

/// An absolute count or a percentage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Amount {
    Count(usize),
    Percent(f64),
}

impl Amount {
    /// `floor(p% of total)`, at least 1.
    pub fn resolve(self, total: usize) -> usize {
        match self {
            Amount::Count(n) => n,
            Amount::Percent(p) => (((p / 100.0) * total as f64).floor() as usize).max(1),
        }
    }
}

impl FromStr for Amount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if let Some(p) = s.strip_suffix('%') {
            let p: f64 = p
                .trim()
                .parse()
                .map_err(|_| format!("{s:?} is not a percentage"))?;
            if !(p > 0.0 && p <= 100.0) {
                return Err(format!("percentage {s} must be in (0, 100]"));
            }
            Ok(Amount::Percent(p))
        } else {
            let n: usize = s.parse().map_err(|_| format!("{s:?} is not a count"))?;
            if n == 0 {
                return Err("count must be at least 1".to_string());
            }
            Ok(Amount::Count(n))
        }
    }
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Amount::Count(n) => write!(f, "{n}"),
            Amount::Percent(p) => write!(f, "{p}%"),
        }
    }
}

impl TryFrom<String> for Amount {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Amount> for String {
    fn from(a: Amount) -> String {
        a.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetSpec {
    pub ids: Amount,
    pub images: Amount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Seeds {
    pub cluster: u64,
    pub ids: u64,
    pub fps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub pools: Vec<PoolSource>,
    pub target: PathBuf,
    /// Input format override; `None` infers it from each file's extension.
    pub format: Option<String>,
    pub clusters: usize,
    /// Absent for a search-only run.
    pub budget: Option<BudgetSpec>,
    pub seeds: Seeds,
    /// Reuse the search stage recorded in an earlier manifest.
    pub from_manifest: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(pools: Vec<PoolSource>, target: impl Into<PathBuf>) -> Self {
        Self {
            pools,
            target: target.into(),
            format: None,
            clusters: DEFAULT_CLUSTERS,
            budget: None,
            seeds: Seeds::default(),
            from_manifest: None,
        }
    }

    pub fn input_format(&self, path: &Path) -> CliResult<Format> {
        match &self.format {
            Some(f) => f.parse().map_err(|e: snp_core::Error| CliError::config(e.to_string())),
            None => Ok(Format::from_path(path)),
        }
    }

    /// Checks everything that can be checked before reading data.
    pub fn validate(&self) -> CliResult<()> {
        if self.pools.is_empty() {
            return Err(CliError::config("at least one --pool is required"));
        }
        if self.clusters == 0 {
            return Err(CliError::config("--clusters must be at least 1"));
        }
        if let Some(f) = &self.format {
            f.parse::<Format>()
                .map_err(|e| CliError::config(e.to_string()))?;
        }
        let inputs = self
            .pools
            .iter()
            .map(|p| &p.path)
            .chain(std::iter::once(&self.target))
            .chain(self.from_manifest.as_ref());
        for path in inputs {
            require_file(path)?;
        }
        if let Some(BudgetSpec {
            ids: Amount::Count(n),
            images: Amount::Count(m),
        }) = self.budget
        {
            if m < n {
                return Err(CliError::config(format!(
                    "image budget {m} is smaller than identity budget {n}; every kept identity needs an image"
                )));
            }
        }
        Ok(())
    }
}

pub fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "input file not found: {}",
            path.display()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pool_sources() {
        let named: PoolSource = "market=data/m.csv".parse().unwrap();
        assert_eq!(named.name.as_deref(), Some("market"));
        let bare: PoolSource = "pool.snpe".parse().unwrap();
        assert_eq!(bare.name, None);
        assert!("=x".parse::<PoolSource>().is_err());
    }

    #[test]
    fn amounts() {
        assert_eq!("12".parse::<Amount>().unwrap(), Amount::Count(12));
        assert_eq!("2%".parse::<Amount>().unwrap(), Amount::Percent(2.0));
        assert!("0".parse::<Amount>().is_err());
        assert!("150%".parse::<Amount>().is_err());
        assert_eq!(Amount::Percent(2.0).resolve(15_060), 301);
        assert_eq!(Amount::Percent(1.0).resolve(10), 1);
        assert_eq!(Amount::Percent(100.0).resolve(37), 37);
        let json = serde_json::to_string(&Amount::Percent(5.0)).unwrap();
        assert_eq!(json, "\"5%\"");
    }
}
