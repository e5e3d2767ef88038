//! Parameter sweeps over the detection pipeline, with CSV and SVG output.
//!
//! A sweep varies one parameter over a list of values. It can optionally be
//! repeated for several series, each applying a fixed set of overrides to
//! the base config. Every point draws its trials from a stream keyed by the
//! swept value itself. The same value therefore sees the same trial
//! randomness in every series, whatever other values are swept.

mod csv;
mod plot;

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use csv::{emit_csv, format_csv, parse_csv, CSV_HEADER};
pub use plot::{emit_plot, render_svg};

use crate::affinity::{reference_affinity_fixture, AffinityMatrix};
use crate::detection::{run_trial_outcomes, summarize};
use crate::error::{Error, Result};
use crate::mixture::{build_mixture_matrix, MixtureMatrix};
use crate::model::{derive_stream, splitmix64, validate_config, ConfigFile, SystemConfig, MODEL_KEYS};

/// Smallest trial count accepted per sweep point.
pub const MIN_TRIALS_PER_POINT: usize = 100;
/// Stream id used for alphabet generation, kept apart from trial streams.
const ALPHABET_STREAM: u64 = u64::MAX;

/// Keys a sweep config may use in addition to [`MODEL_KEYS`].
pub const SWEEP_KEYS: &[&str] = &[
    "sweep",
    "values",
    "trials",
    "n_mix",
    "alphabet_seed",
    "alphabet",
    "affinity",
    "series",
    "timing",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepVariable {
    /// Sets eps and delta together.
    EpsDelta,
    NRls,
    Lambda,
    XThr,
    AlphabetSize,
}

impl SweepVariable {
    pub const ALL: [SweepVariable; 5] = [
        SweepVariable::EpsDelta,
        SweepVariable::NRls,
        SweepVariable::Lambda,
        SweepVariable::XThr,
        SweepVariable::AlphabetSize,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::EpsDelta => "eps_delta",
            SweepVariable::NRls => "N_rls",
            SweepVariable::Lambda => "lambda",
            SweepVariable::XThr => "x_thr",
            SweepVariable::AlphabetSize => "alphabet_size",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == name)
            .ok_or_else(|| Error::OutOfRange {
                name: "sweep",
                reason: format!(
                    "unknown variable `{name}`, expected one of eps_delta, N_rls, lambda, x_thr, alphabet_size"
                ),
            })
    }

    /// Returns `cfg` with this variable set to `value`, validated.
    pub fn apply(&self, cfg: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut out = cfg.clone();
        match self {
            SweepVariable::EpsDelta => out = out.with_eps_delta(value),
            SweepVariable::NRls => out.molecules_per_release = as_count(self.name(), value)?,
            SweepVariable::Lambda => out.noise_mean = value,
            SweepVariable::XThr => out.activation_threshold = value,
            SweepVariable::AlphabetSize => out.num_mixtures = as_count(self.name(), value)?,
        }
        validate_config(out)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn as_count(name: &'static str, value: f64) -> Result<usize> {
    if value.is_finite() && value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
        Ok(value as usize)
    } else {
        Err(Error::OutOfRange {
            name,
            reason: format!("{value} is not a nonnegative integer"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AlphabetSource {
    /// Random alphabet; a smaller alphabet is a prefix of a larger one drawn
    /// with the same seed.
    Generated { n_mix: usize, seed: u64 },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum AffinitySource {
    /// The shipped 10 x 20 reference matrix.
    Fixture,
    File(PathBuf),
}

/// One repetition of the sweep with fixed overrides on the base config.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSpec {
    pub label: String,
    pub overrides: Vec<(SweepVariable, f64)>,
}

impl SeriesSpec {
    /// Parses `name=value` pairs separated by whitespace, or `base` for no
    /// overrides. The label is the text itself.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let mut overrides = Vec::new();
        if text != "base" {
            for pair in text.split_whitespace() {
                let (name, value) = pair.split_once('=').ok_or_else(|| Error::OutOfRange {
                    name: "series",
                    reason: format!("expected `name=value`, got `{pair}`"),
                })?;
                let value: f64 = value.parse().map_err(|_| Error::OutOfRange {
                    name: "series",
                    reason: format!("`{value}` is not a number"),
                })?;
                overrides.push((SweepVariable::parse(name)?, value));
            }
        }
        if overrides.is_empty() && text != "base" {
            return Err(Error::OutOfRange {
                name: "series",
                reason: "empty series entry".into(),
            });
        }
        Ok(Self {
            label: text.split_whitespace().collect::<Vec<_>>().join(" "),
            overrides,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub trials_per_point: usize,
    pub base_config: SystemConfig,
    pub alphabet_source: AlphabetSource,
    pub affinity_source: AffinitySource,
    /// Empty for a single unnamed series.
    pub series: Vec<SeriesSpec>,
    /// Record mean solver wall time per point. Off by default because it
    /// makes the CSV run-dependent.
    pub timing: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::OutOfRange {
                name: "values",
                reason: "at least one sweep value is required".into(),
            });
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::OutOfRange {
                name: "values",
                reason: format!("{v} is not finite"),
            });
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::OutOfRange {
                name: "values",
                reason: "sweep values must be strictly increasing".into(),
            });
        }
        if self.trials_per_point < MIN_TRIALS_PER_POINT {
            return Err(Error::OutOfRange {
                name: "trials",
                reason: format!("{} < {MIN_TRIALS_PER_POINT}", self.trials_per_point),
            });
        }
        for (i, s) in self.series.iter().enumerate() {
            if self.series[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::OutOfRange {
                    name: "series",
                    reason: format!("duplicate series `{}`", s.label),
                });
            }
            if s.overrides.iter().any(|(v, _)| *v == self.variable) {
                return Err(Error::OutOfRange {
                    name: "series",
                    reason: format!("series `{}` overrides the swept variable", s.label),
                });
            }
        }
        let varies_size = self.variable == SweepVariable::AlphabetSize
            || self
                .series
                .iter()
                .any(|s| s.overrides.iter().any(|(v, _)| *v == SweepVariable::AlphabetSize));
        if varies_size && matches!(self.alphabet_source, AlphabetSource::File(_)) {
            return Err(Error::Precondition(
                "alphabet_size cannot vary when the alphabet is read from a file".into(),
            ));
        }
        validate_config(self.base_config.clone())?;
        Ok(())
    }

    /// Reads a sweep config. Relative paths are resolved against `base_dir`.
    pub fn from_config(file: &ConfigFile, base_dir: &Path) -> Result<Self> {
        let allowed: Vec<&str> = MODEL_KEYS.iter().chain(SWEEP_KEYS).copied().collect();
        file.check_keys(&allowed)?;
        let base_config = SystemConfig::from_config(file)?;
        let required = |key: &'static str| {
            file.entry(key).ok_or_else(|| Error::Precondition(format!("sweep config is missing `{key}`")))
        };
        let variable = SweepVariable::parse(&required("sweep")?.value)?;
        let values = required("values")?.parse_f64_list()?;
        let trials_per_point = match file.entry("trials") {
            Some(e) => e.parse_usize()?,
            None => 1000,
        };
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        let alphabet_source = match file.entry("alphabet") {
            Some(e) => {
                if file.entry("n_mix").is_some() || file.entry("alphabet_seed").is_some() {
                    return Err(Error::parse(e.line, "`alphabet` excludes `n_mix` and `alphabet_seed`"));
                }
                AlphabetSource::File(resolve(&e.value))
            }
            None => AlphabetSource::Generated {
                n_mix: match file.entry("n_mix") {
                    Some(e) => e.parse_usize()?,
                    None => 3,
                },
                seed: match file.entry("alphabet_seed") {
                    Some(e) => e
                        .value
                        .parse()
                        .map_err(|_| Error::parse(e.line, format!("`alphabet_seed`: expected u64, got `{}`", e.value)))?,
                    None => base_config.master_seed,
                },
            },
        };
        let affinity_source = match file.entry("affinity") {
            None => AffinitySource::Fixture,
            Some(e) if e.value == "fixture" => AffinitySource::Fixture,
            Some(e) => AffinitySource::File(resolve(&e.value)),
        };
        let series = match file.entry("series") {
            None => Vec::new(),
            Some(e) => e
                .value
                .split(';')
                .map(SeriesSpec::parse)
                .collect::<Result<_>>()
                .map_err(|err| Error::parse(e.line, err.to_string()))?,
        };
        let timing = match file.entry("timing") {
            None => false,
            Some(e) => match e.value.as_str() {
                "true" => true,
                "false" => false,
                other => return Err(Error::parse(e.line, format!("`timing`: expected true or false, got `{other}`"))),
            },
        };
        let spec = Self {
            variable,
            values,
            trials_per_point,
            base_config,
            alphabet_source,
            affinity_source,
            series,
            timing,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = ConfigFile::load(path)?;
        Self::from_config(&file, path.parent().unwrap_or(Path::new(".")))
    }

    fn series_or_base(&self) -> Vec<SeriesSpec> {
        if self.series.is_empty() {
            vec![SeriesSpec {
                label: String::new(),
                overrides: Vec::new(),
            }]
        } else {
            self.series.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub p_e: f64,
    pub ci_halfwidth: f64,
    pub infeasible_fraction: f64,
    pub mean_solve_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesResult {
    /// Empty for the single series of a plain sweep.
    pub label: String,
    pub rows: Vec<SweepRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: String,
    pub series: Vec<SeriesResult>,
}

impl SweepResult {
    pub fn is_empty(&self) -> bool {
        self.series.iter().all(|s| s.rows.is_empty())
    }
}

/// Stream key for a sweep point.
pub fn point_key(value: f64) -> u64 {
    // Normalize -0.0 so that equal values share a stream.
    splitmix64((value + 0.0).to_bits())
}

pub fn load_affinity(source: &AffinitySource) -> Result<AffinityMatrix> {
    match source {
        AffinitySource::Fixture => Ok(reference_affinity_fixture()),
        AffinitySource::File(p) => AffinityMatrix::load(p),
    }
}

/// The alphabet for a given config under `source`.
pub fn alphabet_for(source: &AlphabetSource, cfg: &SystemConfig) -> Result<MixtureMatrix> {
    let m = match source {
        AlphabetSource::Generated { n_mix, seed } => build_mixture_matrix(
            cfg.num_molecules,
            cfg.num_mixtures,
            *n_mix,
            &mut derive_stream(*seed, ALPHABET_STREAM).rng(),
        )?,
        AlphabetSource::File(p) => MixtureMatrix::load(p)?,
    };
    if m.num_molecules() != cfg.num_molecules || m.num_mixtures() != cfg.num_mixtures {
        return Err(Error::Precondition(format!(
            "alphabet is {}x{}, config expects Q={} and M={}",
            m.num_molecules(),
            m.num_mixtures(),
            cfg.num_molecules,
            cfg.num_mixtures
        )));
    }
    Ok(m)
}

/// Runs every point of every series on the current rayon pool. Output order
/// follows series and value order irrespective of scheduling.
pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let affinity = load_affinity(&spec.affinity_source)?;
    let base = &spec.base_config;
    if affinity.num_receptors() != base.num_receptors || affinity.num_molecules() != base.num_molecules {
        return Err(Error::Precondition(format!(
            "affinity matrix is {}x{}, config expects R={} and Q={}",
            affinity.num_receptors(),
            affinity.num_molecules(),
            base.num_receptors,
            base.num_molecules
        )));
    }
    let mut base = base.clone();
    if let AlphabetSource::File(p) = &spec.alphabet_source {
        base.num_mixtures = MixtureMatrix::load(p)?.num_mixtures();
    }

    let series = spec.series_or_base();
    let mut points = Vec::new();
    for (si, s) in series.iter().enumerate() {
        let mut cfg = base.clone();
        for (var, value) in &s.overrides {
            cfg = var.apply(&cfg, *value)?;
        }
        for &value in &spec.values {
            points.push((si, value, spec.variable.apply(&cfg, value)?));
        }
    }

    let mut alphabets: HashMap<usize, MixtureMatrix> = HashMap::new();
    for (_, _, cfg) in &points {
        if let Entry::Vacant(slot) = alphabets.entry(cfg.num_mixtures) {
            slot.insert(alphabet_for(&spec.alphabet_source, cfg)?);
        }
    }

    let rows: Vec<(usize, SweepRow)> = points
        .par_iter()
        .map(|(si, value, cfg)| {
            let mixtures = &alphabets[&cfg.num_mixtures];
            let stream = derive_stream(cfg.master_seed, point_key(*value));
            let outcomes = run_trial_outcomes(cfg, &affinity, mixtures, spec.trials_per_point, stream)?;
            let est = summarize(&outcomes);
            Ok((
                *si,
                SweepRow {
                    value: *value,
                    p_e: est.p_e,
                    ci_halfwidth: est.ci_halfwidth,
                    infeasible_fraction: est.infeasible_fraction(),
                    mean_solve_ms: spec.timing.then_some(est.mean_solve_ms),
                },
            ))
        })
        .collect::<Result<_>>()?;

    let mut out: Vec<SeriesResult> = series
        .iter()
        .map(|s| SeriesResult {
            label: s.label.clone(),
            rows: Vec::new(),
        })
        .collect();
    for (si, row) in rows {
        out[si].rows.push(row);
    }
    Ok(SweepResult {
        variable: spec.variable.name().to_string(),
        series: out,
    })
}
