use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::channel::SystemConfig;
use crate::error::{Error, Result};

/// Receiver under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    FullRank,
    Jio,
    MmseBound,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::FullRank, Scheme::Jio, Scheme::MmseBound];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::FullRank => "full_rank",
            Scheme::Jio => "jio",
            Scheme::MmseBound => "mmse_bound",
        }
    }

    /// Only the JIO receiver depends on the rank.
    pub fn uses_rank(self) -> bool {
        self == Scheme::Jio
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.name() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown scheme '{s}' (expected full_rank, jio or mmse_bound)")))
    }
}

/// Everything that defines an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub schemes: Vec<Scheme>,
    /// Rank of the JIO receiver outside the rank sweep.
    pub rank: usize,
    pub ranks: Vec<usize>,
    pub snrs: Vec<f64>,
    pub n_runs: usize,
    pub base_seed: u64,
    pub lambda_full_rank: f64,
    pub lambda_jio: f64,
    /// Diagonal loading of every inverse initialization.
    pub delta: f64,
    /// Symbols per window of the convergence curve.
    pub conv_window: usize,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            system: SystemConfig::default(),
            schemes: Scheme::ALL.to_vec(),
            rank: 4,
            ranks: (1..=8).collect(),
            snrs: vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0],
            n_runs: 100,
            base_seed: 1,
            lambda_full_rank: 0.998,
            lambda_jio: 0.998,
            delta: 0.01,
            conv_window: 50,
            out: PathBuf::from("results"),
        }
    }
}

const KEYS: [&str; 19] = [
    "n_tx",
    "n_rx",
    "window_len",
    "n_paths",
    "snr_db",
    "symbol_variance",
    "packet_len",
    "train_len",
    "schemes",
    "rank",
    "ranks",
    "snrs",
    "n_runs",
    "base_seed",
    "lambda_full_rank",
    "lambda_jio",
    "delta",
    "conv_window",
    "out",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value for {key}: '{value}'")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|v| !v.trim().is_empty())
        .map(|v| parse_value(key, v))
        .collect()
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    /// Parse flat `key = value` text; `#` starts a comment. Keys not set
    /// keep their defaults; unknown or repeated keys are errors.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, found '{raw}'", no + 1)))?;
            let key = key.trim();
            if seen.contains(&key) {
                return Err(Error::Config(format!("line {}: key '{key}' given twice", no + 1)));
            }
            seen.push(key);
            cfg.set(key, value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.system;
        match key {
            "n_tx" => s.n_tx = parse_value(key, value)?,
            "n_rx" => s.n_rx = parse_value(key, value)?,
            "window_len" => s.window_len = parse_value(key, value)?,
            "n_paths" => s.n_paths = parse_value(key, value)?,
            "snr_db" => s.snr_db = parse_value(key, value)?,
            "symbol_variance" => s.symbol_variance = parse_value(key, value)?,
            "packet_len" => s.packet_len = parse_value(key, value)?,
            "train_len" => s.train_len = parse_value(key, value)?,
            "schemes" => self.schemes = parse_list(key, value)?,
            "rank" => self.rank = parse_value(key, value)?,
            "ranks" => self.ranks = parse_list(key, value)?,
            "snrs" => self.snrs = parse_list(key, value)?,
            "n_runs" => self.n_runs = parse_value(key, value)?,
            "base_seed" => self.base_seed = parse_value(key, value)?,
            "lambda_full_rank" => self.lambda_full_rank = parse_value(key, value)?,
            "lambda_jio" => self.lambda_jio = parse_value(key, value)?,
            "delta" => self.delta = parse_value(key, value)?,
            "conv_window" => self.conv_window = parse_value(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => {
                return Err(Error::Config(format!(
                    "unknown key '{key}' (known keys: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let cfg_err = |msg: String| Err(Error::Config(msg));
        if self.system.packet_len <= self.system.train_len {
            return cfg_err("packet_len must exceed train_len so that a payload exists".into());
        }
        if self.n_runs == 0 {
            return cfg_err("n_runs must be at least 1".into());
        }
        if self.schemes.is_empty() {
            return cfg_err("schemes must not be empty".into());
        }
        if self.ranks.is_empty() {
            return cfg_err("ranks must not be empty".into());
        }
        if self.snrs.is_empty() {
            return cfg_err("snrs must not be empty".into());
        }
        if let Some(snr) = self.snrs.iter().find(|s| !s.is_finite()) {
            return cfg_err(format!("snrs must be finite, got {snr}"));
        }
        let max = self.system.obs_len();
        for &rank in self.ranks.iter().chain(std::iter::once(&self.rank)) {
            if rank == 0 || rank > max {
                return Err(Error::InvalidRank { rank, max });
            }
        }
        for (name, lambda) in [("lambda_full_rank", self.lambda_full_rank), ("lambda_jio", self.lambda_jio)] {
            if !(lambda > 0.0 && lambda <= 1.0) {
                return cfg_err(format!("{name} must lie in (0, 1], got {lambda}"));
            }
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return cfg_err(format!("delta must be positive, got {}", self.delta));
        }
        if self.conv_window == 0 {
            return cfg_err("conv_window must be at least 1".into());
        }
        Ok(())
    }

    /// Canonical `key=value` listing of every field, in a fixed order.
    pub fn to_text(&self) -> String {
        let mut out = self.canonical_results_text();
        let _ = writeln!(out, "out={}", self.out.display());
        out
    }

    /// Every field that can change a result; `out` is excluded.
    fn canonical_results_text(&self) -> String {
        let s = &self.system;
        let mut out = String::new();
        let fields: [(&str, String); 18] = [
            ("n_tx", s.n_tx.to_string()),
            ("n_rx", s.n_rx.to_string()),
            ("window_len", s.window_len.to_string()),
            ("n_paths", s.n_paths.to_string()),
            ("snr_db", s.snr_db.to_string()),
            ("symbol_variance", s.symbol_variance.to_string()),
            ("packet_len", s.packet_len.to_string()),
            ("train_len", s.train_len.to_string()),
            ("schemes", join(&self.schemes)),
            ("rank", self.rank.to_string()),
            ("ranks", join(&self.ranks)),
            ("snrs", join(&self.snrs)),
            ("n_runs", self.n_runs.to_string()),
            ("base_seed", self.base_seed.to_string()),
            ("lambda_full_rank", self.lambda_full_rank.to_string()),
            ("lambda_jio", self.lambda_jio.to_string()),
            ("delta", self.delta.to_string()),
            ("conv_window", self.conv_window.to_string()),
        ];
        for (k, v) in fields {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical listing of all
    /// result-affecting fields.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_results_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
