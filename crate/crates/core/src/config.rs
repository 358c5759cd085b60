//! Run configuration: defaults, a key=value file format and validation.
//!
//! Keys are case-insensitive and '-' and '_' are interchangeable, so
//! `max-L`, `max_l` and `MAX_L` name the same setting. Blank lines and lines
//! starting with '#' are ignored.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Spin;
use crate::scalar::PrecisionMode;

pub const DEFAULT_DIGITS: u32 = 80;
pub const DEFAULT_MAX_L: usize = 6;
pub const DEFAULT_SEED: u64 = 20240101;
pub const DEFAULT_TRUNCATION: usize = 40;
/// Largest charge order reachable in double precision.
pub const MAX_DOUBLE_ORDER: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundaries {
    Plus,
    Minus,
    Both,
}

impl Boundaries {
    pub fn spins(self) -> Vec<Spin> {
        match self {
            Boundaries::Plus => vec![Spin::Plus],
            Boundaries::Minus => vec![Spin::Minus],
            Boundaries::Both => vec![Spin::Plus, Spin::Minus],
        }
    }
}

impl std::str::FromStr for Boundaries {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" | "+" | "plus" => Ok(Boundaries::Plus),
            "-1" | "-" | "minus" => Ok(Boundaries::Minus),
            "both" => Ok(Boundaries::Both),
            other => Err(Error::Config(format!("boundary spin must be +1, -1 or both, got '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Config {
    /// Single strip width; when unset the suites sweep their own L range,
    /// capped by `max_l`.
    #[serde(rename = "L")]
    pub l: Option<usize>,
    #[serde(rename = "maxL")]
    pub max_l: usize,
    pub b: Boundaries,
    pub x: Option<f64>,
    pub u: Option<f64>,
    /// Highest charge order; suites choose their own when unset.
    pub orders: Option<usize>,
    pub precision: PrecisionMode,
    pub digits: u32,
    /// Overrides the per-check tolerances.
    pub tolerance: Option<f64>,
    pub seed: u64,
    /// Highest power of q kept in character series.
    pub truncation: usize,
    pub timings: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            l: None,
            max_l: DEFAULT_MAX_L,
            b: Boundaries::Both,
            x: None,
            u: None,
            orders: None,
            precision: PrecisionMode::Double,
            digits: DEFAULT_DIGITS,
            tolerance: None,
            seed: DEFAULT_SEED,
            truncation: DEFAULT_TRUNCATION,
            timings: false,
        }
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("invalid value '{v}' for {key}")))
}

/// Parses `key = value` lines into ordered pairs.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected key=value", n + 1)));
        };
        out.push((normalize_key(k), v.trim().to_string()));
    }
    Ok(out)
}

impl Config {
    /// Sets one key; unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = normalize_key(key);
        match key.as_str() {
            "l" => self.l = Some(parse(&key, value)?),
            "max_l" => self.max_l = parse(&key, value)?,
            "b" => self.b = parse(&key, value)?,
            "x" => self.x = Some(parse(&key, value)?),
            "u" => self.u = Some(parse(&key, value)?),
            "orders" => self.orders = Some(parse(&key, value)?),
            "precision" => {
                self.precision = value.trim().parse().map_err(|_| Error::Config(format!("invalid precision '{value}'")))?
            }
            "digits" => self.digits = parse(&key, value)?,
            "tolerance" => self.tolerance = Some(parse(&key, value)?),
            "seed" => self.seed = parse(&key, value)?,
            "truncation" => self.truncation = parse(&key, value)?,
            "timings" => self.timings = parse(&key, value)?,
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn from_key_values(text: &str) -> Result<Config> {
        let mut c = Config::default();
        for (k, v) in parse_key_values(text)? {
            c.set(&k, &v)?;
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.l {
            if l > crate::lattice::DEFAULT_MAX_L {
                return Err(Error::Config(format!("L = {l} above the supported maximum {}", crate::lattice::DEFAULT_MAX_L)));
            }
        }
        if self.max_l == 0 || self.max_l > crate::lattice::DEFAULT_MAX_L {
            return Err(Error::Config(format!("max-L must lie in 1..={}", crate::lattice::DEFAULT_MAX_L)));
        }
        if let Some(x) = self.x {
            if !(x.abs() > 1.0) || !x.is_finite() {
                return Err(Error::Config(format!("x = {x} must satisfy |x| > 1")));
            }
        }
        if let Some(u) = self.u {
            if !(u > 0.0 && u < std::f64::consts::FRAC_PI_8) {
                return Err(Error::Config(format!("u = {u} must lie in (0, pi/8)")));
            }
        }
        if self.x.is_some() && self.u.is_some() {
            return Err(Error::Config("give either x or u, not both".into()));
        }
        if let Some(n) = self.orders {
            if n == 0 || n > 15 {
                return Err(Error::Config(format!("orders = {n} must lie in 1..=15")));
            }
            if n > MAX_DOUBLE_ORDER && self.precision == PrecisionMode::Double {
                return Err(Error::Config(format!("orders above {MAX_DOUBLE_ORDER} need --precision extended")));
            }
        }
        if self.precision == PrecisionMode::Extended && self.digits < 30 {
            return Err(Error::Config(format!("extended precision needs at least 30 digits, got {}", self.digits)));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                return Err(Error::Config(format!("tolerance must be positive, got {t}")));
            }
        }
        Ok(())
    }

    /// The spectral point requested on the command line, as x.
    pub fn requested_x(&self) -> Option<f64> {
        self.x.or_else(|| self.u.map(|u| 1.0 / (4.0 * u).sin()))
    }

    /// Strip widths between `lo` and `hi` (inclusive), or the single
    /// requested L.
    pub fn widths(&self, lo: usize, hi: usize) -> Vec<usize> {
        match self.l {
            Some(l) => vec![l],
            None => (lo..=hi.min(self.max_l)).collect(),
        }
    }

    pub fn tolerance_or(&self, default: f64) -> f64 {
        self.tolerance.unwrap_or(default)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is serializable")
    }
}
