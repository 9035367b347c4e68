//! Flat `key = value` run configuration shared by config files and flags.

use num_bigint::BigInt;
use num_rational::BigRational;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::str::FromStr;

use crate::enumerate::{EnumConfig, Mode, StreamOrdering};
use crate::error::{Error, Result};
use crate::types::{Decomposition, NormKind, NormSpec, Params, Precision, Setup, Target};

/// Every key a run configuration may carry.
pub const KNOWN_KEYS: &[&str] = &[
    "m",
    "n",
    "norms",
    "eps",
    "eta",
    "j",
    "moduli",
    "theta",
    "theta_seed",
    "theta_seeds",
    "precision",
    "T",
    "T_list",
    "mode",
    "s",
    "ordering",
    "workers",
    "chunk",
    "format",
    "out",
    "seed",
    "constraint",
    "shift",
    "W",
    "grid_step",
    "flow_time",
    "ks_threshold",
    "chi_alpha",
    "tolerance",
];

/// Ordered key-value settings. Later assignments override earlier ones, so
/// flags applied after a file win.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

fn canonical_key(key: &str) -> Result<String> {
    let k = key.trim().trim_start_matches('-').replace('-', "_");
    let k = if k.eq_ignore_ascii_case("t") {
        "T".to_string()
    } else if k.eq_ignore_ascii_case("t_list") {
        "T_list".to_string()
    } else if k.eq_ignore_ascii_case("w") {
        "W".to_string()
    } else {
        k
    };
    if KNOWN_KEYS.contains(&k.as_str()) {
        Ok(k)
    } else {
        Err(Error::Config(format!("unknown key `{key}`")))
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| {
            x.parse()
                .map_err(|e| Error::Config(format!("{key}: bad value `{x}`: {e}")))
        })
        .collect()
}

impl RunConfig {
    pub fn new() -> Self {
        RunConfig::default()
    }

    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(k, v.trim())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        self.entries.insert(canonical_key(key)?, value.into());
        Ok(())
    }

    pub fn merge(&mut self, other: &RunConfig) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.entries
    }

    /// Canonical text form: sorted `key=value` lines.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// SHA-256 of the canonical form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|e| Error::Config(format!("{key}: bad value `{v}`: {e}")))
            })
            .transpose()
    }

    pub fn parsed_or<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }

    pub fn seed(&self) -> Result<u64> {
        self.parsed_or("seed", 0)
    }

    pub fn t(&self) -> Result<f64> {
        self.parsed::<f64>("T")?
            .ok_or_else(|| Error::Config("missing T".into()))
    }

    pub fn decomposition(&self) -> Result<Decomposition> {
        let m = self.list("m")?.unwrap_or_else(|| vec![1]);
        let n = self.list("n")?.unwrap_or_else(|| vec![1]);
        Decomposition::new(m, n)
    }

    pub fn setup(&self) -> Result<Setup> {
        let dec = self.decomposition()?;
        let norms = match self.list::<NormKind>("norms")? {
            None => NormSpec::uniform(NormKind::Sup, &dec),
            Some(v) if v.len() == 1 => NormSpec::uniform(v[0], &dec),
            Some(v) => NormSpec::new(v, &dec)?,
        };
        let eps = self.parsed_or("eps", 0.5)?;
        let etas = match self.list::<f64>("eta")? {
            None => vec![0.4; dec.k()],
            Some(v) if v.len() == 1 => vec![v[0]; dec.k()],
            Some(v) => v,
        };
        let j = self.parsed_or("j", dec.d())?;
        let moduli = self.list("moduli")?.unwrap_or_default();
        Setup::new(dec, norms, Params::new(eps, etas, j).with_moduli(moduli))
    }

    pub fn precision(&self) -> Result<Precision> {
        self.parsed_or("precision", Precision::Standard)
    }

    /// Explicit `theta` entries (floats or `a/b` rationals, row-major) or a
    /// seeded random target.
    pub fn target(&self) -> Result<Target> {
        let dec = self.decomposition()?;
        let (rows, cols) = (dec.m(), dec.n());
        if let Some(text) = self.get("theta") {
            let items: Vec<&str> = text.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
            if items.iter().any(|x| x.contains('/')) {
                let values = items
                    .iter()
                    .map(|x| parse_rational(x))
                    .collect::<Result<Vec<_>>>()?;
                return Target::from_rationals(rows, cols, values);
            }
            let values = parse_list::<f64>("theta", text)?;
            return Target::from_f64(rows, cols, &values);
        }
        let seed = match self.parsed("theta_seed")? {
            Some(s) => s,
            None => self.seed()?,
        };
        Ok(Target::random(rows, cols, self.precision()?, seed))
    }

    pub fn enum_config(&self) -> Result<EnumConfig> {
        let mut cfg = EnumConfig::new(self.t()?, self.parsed_or("mode", Mode::Epsilon)?)
            .with_divisor(self.parsed_or("s", 1)?)
            .with_workers(self.parsed_or("workers", 0)?);
        cfg.ordering = self.parsed_or("ordering", StreamOrdering::IncreasingQ)?;
        if let Some(c) = self.parsed("chunk")? {
            cfg = cfg.with_chunk_size(c);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let (a, b) = s.split_once('/').unwrap_or((s, "1"));
    let parse = |x: &str| {
        x.trim()
            .parse::<BigInt>()
            .map_err(|e| Error::Config(format!("bad integer `{x}`: {e}")))
    };
    let den = parse(b)?;
    if den == BigInt::from(0) {
        return Err(Error::Config("zero denominator".into()));
    }
    Ok(BigRational::new(parse(a)?, den))
}
