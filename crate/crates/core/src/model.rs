//! Shared system parameters, the key/value config format and the
//! reproducible random-stream contract.
//!
//! Every stochastic operation in the crate draws from an [`RngStream`].
//! A stream is fully determined by `(seed, stream_id)`, so any trial can be
//! replayed in isolation and parallel execution order never affects results.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Scalar parameters of the end-to-end system.
///
/// Counts are carried as `f64` in downstream math even where they are
/// sampled as integers.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of receptor types `R`.
    pub num_receptors: usize,
    /// Number of molecule types `Q`.
    pub num_molecules: usize,
    /// Alphabet size `M` (number of distinct mixtures).
    pub num_mixtures: usize,
    /// Molecules contained in one released mixture.
    pub molecules_per_release: usize,
    /// Channel gain per molecule type, each a fraction in `[0, 1]`.
    pub channel_gain: Vec<f64>,
    /// Mean of the Poisson baseline noise, shared by all receptor types.
    pub noise_mean: f64,
    /// Receptor activation threshold.
    pub activation_threshold: f64,
    /// Normalized reconstruction error parameter (epsilon).
    pub recon_error_eps: f64,
    /// Normalized deviation parameter (delta).
    pub deviation_delta: f64,
    pub master_seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_receptors: 10,
            num_molecules: 20,
            num_mixtures: 16,
            molecules_per_release: 5000,
            channel_gain: vec![0.01; 20],
            noise_mean: 10.0,
            activation_threshold: 5.0,
            recon_error_eps: 1.0,
            deviation_delta: 1.0,
            master_seed: 0,
        }
    }
}

impl SystemConfig {
    /// Sets both reconstruction parameters to one value.
    pub fn with_eps_delta(mut self, value: f64) -> Self {
        self.recon_error_eps = value;
        self.deviation_delta = value;
        self
    }

    /// Parses the model keys of a config file; absent keys keep their
    /// defaults. The result is validated.
    pub fn from_config(file: &ConfigFile) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        if let Some(e) = file.entry("R") {
            cfg.num_receptors = e.parse_usize()?;
        }
        if let Some(e) = file.entry("Q") {
            cfg.num_molecules = e.parse_usize()?;
        }
        if let Some(e) = file.entry("M") {
            cfg.num_mixtures = e.parse_usize()?;
        }
        if let Some(e) = file.entry("N_rls") {
            cfg.molecules_per_release = e.parse_usize()?;
        }
        if let Some(e) = file.entry("lambda") {
            cfg.noise_mean = e.parse_f64()?;
        }
        if let Some(e) = file.entry("x_thr") {
            cfg.activation_threshold = e.parse_f64()?;
        }
        if let Some(e) = file.entry("eps") {
            cfg.recon_error_eps = e.parse_f64()?;
        }
        if let Some(e) = file.entry("delta") {
            cfg.deviation_delta = e.parse_f64()?;
        }
        if let Some(e) = file.entry("seed") {
            cfg.master_seed = e
                .value
                .parse()
                .map_err(|_| Error::parse(e.line, format!("`seed`: expected u64, got `{}`", e.value)))?;
        }
        cfg.channel_gain = match file.entry("v") {
            Some(e) => {
                let values = e.parse_f64_list()?;
                if values.len() == 1 {
                    vec![values[0]; cfg.num_molecules]
                } else {
                    values
                }
            }
            None => vec![0.01; cfg.num_molecules],
        };
        validate_config(cfg)
    }

    /// Renders the model keys in config-file form.
    pub fn to_config_string(&self) -> String {
        let v = if self.channel_gain.windows(2).all(|w| w[0] == w[1]) && !self.channel_gain.is_empty() {
            format!("{}", self.channel_gain[0])
        } else {
            join_f64(&self.channel_gain)
        };
        format!(
            "R = {}\nQ = {}\nM = {}\nN_rls = {}\nv = {}\nlambda = {}\nx_thr = {}\neps = {}\ndelta = {}\nseed = {}\n",
            self.num_receptors,
            self.num_molecules,
            self.num_mixtures,
            self.molecules_per_release,
            v,
            self.noise_mean,
            self.activation_threshold,
            self.recon_error_eps,
            self.deviation_delta,
            self.master_seed
        )
    }
}

fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// Checks every invariant of a candidate config. Values are never clamped;
/// an accepted config is returned unchanged.
pub fn validate_config(raw: SystemConfig) -> Result<SystemConfig> {
    for (name, value) in [
        ("R", raw.num_receptors),
        ("Q", raw.num_molecules),
        ("M", raw.num_mixtures),
        ("N_rls", raw.molecules_per_release),
    ] {
        if value < 1 {
            return Err(Error::NonPositiveDimension { name, value });
        }
    }
    if raw.channel_gain.len() != raw.num_molecules {
        return Err(Error::DimensionMismatch {
            context: "channel gain vector",
            expected: raw.num_molecules,
            actual: raw.channel_gain.len(),
        });
    }
    if let Some((q, v)) = raw
        .channel_gain
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && (0.0..=1.0).contains(*v)))
    {
        return Err(Error::OutOfRange {
            name: "v",
            reason: format!("v[{q}] = {v} is not a fraction in [0, 1]"),
        });
    }
    for (name, value) in [
        ("lambda", raw.noise_mean),
        ("x_thr", raw.activation_threshold),
    ] {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::OutOfRange {
                name,
                reason: format!("{value} must be finite and nonnegative"),
            });
        }
    }
    for (name, value) in [("eps", raw.recon_error_eps), ("delta", raw.deviation_delta)] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::OutOfRange {
                name,
                reason: format!("{value} must be finite and positive"),
            });
        }
    }
    Ok(raw)
}

/// One `key = value` line of a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEntry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

impl ConfigEntry {
    pub fn parse_usize(&self) -> Result<usize> {
        self.value.parse().map_err(|_| {
            Error::parse(
                self.line,
                format!("`{}`: expected a nonnegative integer, got `{}`", self.key, self.value),
            )
        })
    }

    pub fn parse_f64(&self) -> Result<f64> {
        parse_real(&self.value).ok_or_else(|| {
            Error::parse(
                self.line,
                format!("`{}`: expected a number, got `{}`", self.key, self.value),
            )
        })
    }

    pub fn parse_f64_list(&self) -> Result<Vec<f64>> {
        self.value
            .split(',')
            .map(|tok| {
                parse_real(tok.trim()).ok_or_else(|| {
                    Error::parse(
                        self.line,
                        format!("`{}`: bad list element `{}`", self.key, tok.trim()),
                    )
                })
            })
            .collect()
    }
}

fn parse_real(s: &str) -> Option<f64> {
    s.parse::<f64>().ok()
}

/// A parsed `key = value` text file. `#` starts a comment; blank lines are
/// ignored; a key may appear only once.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: Vec<ConfigEntry>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<ConfigEntry> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::parse(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(line, "empty key"));
            }
            if entries.iter().any(|e| e.key == key) {
                return Err(Error::parse(line, format!("duplicate key `{key}`")));
            }
            entries.push(ConfigEntry {
                key: key.to_string(),
                value: value.trim().to_string(),
                line,
            });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn entry(&self, key: &str) -> Option<&ConfigEntry> {
        self.entries.iter().find(|e| e.key == key)
    }

    pub fn entries(&self) -> &[ConfigEntry] {
        &self.entries
    }

    /// Sets `key`, replacing any existing value. Used for command-line
    /// overrides; the entry keeps the line of the value it replaces, or 0.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        let value = value.into();
        match self.entries.iter_mut().find(|e| e.key == key) {
            Some(e) => e.value = value,
            None => self.entries.push(ConfigEntry {
                key: key.to_string(),
                value,
                line: 0,
            }),
        }
    }

    /// Rejects any key not in `allowed`.
    pub fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.entries.iter().find(|e| !allowed.contains(&e.key.as_str())) {
            Some(e) => Err(Error::parse(e.line, format!("unknown key `{}`", e.key))),
            None => Ok(()),
        }
    }
}

/// Keys understood by [`SystemConfig::from_config`].
pub const MODEL_KEYS: &[&str] = &[
    "R", "Q", "M", "N_rls", "v", "lambda", "x_thr", "eps", "delta", "seed",
];

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Instantiates the generator. ChaCha keeps a 64-bit stream counter
    /// separate from the key, so distinct `stream_id`s under one seed never
    /// overlap.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A child stream keyed by `key`, independent of its parent and of the
    /// parent's siblings.
    pub fn substream(&self, key: u64) -> RngStream {
        RngStream {
            seed: splitmix64(self.seed ^ splitmix64(self.stream_id.wrapping_add(0x632B_E59B_D9B4_E019))),
            stream_id: key,
        }
    }
}

/// Stream for trial `trial_index` under `master_seed`.
pub fn derive_stream(master_seed: u64, trial_index: u64) -> RngStream {
    RngStream::new(master_seed, trial_index)
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
