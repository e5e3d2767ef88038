//! End-to-end channel: release, Poisson propagation and thresholded
//! receptor-array reception.
//!
//! ```text
//! u = N_rls * M s            (released counts per molecule type)
//! x ~ Pois(diag(v) u)        (counts reaching the receiver)
//! y = relu(A x + n - x_thr)  with n_r ~ Pois(lambda)
//! ```
//!
//! Mixture and molecule indices are zero-based.

use std::fmt::Write as _;

use rand::Rng;

use crate::affinity::AffinityMatrix;
use crate::error::{Error, Result};
use crate::mixture::{MixtureMatrix, TransmitSignal};
use crate::model::SystemConfig;
use crate::poisson::sample_poisson;

/// Received array signal with its activated / non-activated partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayObservation {
    pub y: Vec<f64>,
    /// Receptors with `y_r > 0`, ascending.
    pub activated: Vec<usize>,
    /// Receptors with `y_r == 0`, ascending.
    pub non_activated: Vec<usize>,
    /// Transmitted mixture. Simulation metadata; recovery never reads it.
    pub ground_truth_mixture: Option<usize>,
}

impl ArrayObservation {
    /// Partitions receptors by strict positivity of `y`.
    pub fn from_signal(y: Vec<f64>, ground_truth_mixture: Option<usize>) -> Result<Self> {
        if let Some(v) = y.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::OutOfRange {
                name: "y",
                reason: format!("array signal entry {v} must be finite and nonnegative"),
            });
        }
        let (activated, non_activated) = (0..y.len()).partition(|&r| y[r] > 0.0);
        Ok(Self {
            y,
            activated,
            non_activated,
            ground_truth_mixture,
        })
    }

    pub fn num_receptors(&self) -> usize {
        self.y.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeCounts {
    /// Released molecules per type.
    pub released: Vec<f64>,
    /// Molecules reaching the receiver per type (integer valued).
    pub received: Vec<f64>,
}

/// `u = N_rls * M s`.
pub fn release(signal: &TransmitSignal, mixtures: &MixtureMatrix, molecules_per_release: usize) -> Result<Vec<f64>> {
    if signal.len() != mixtures.num_mixtures() {
        return Err(Error::DimensionMismatch {
            context: "release: transmit signal length",
            expected: mixtures.num_mixtures(),
            actual: signal.len(),
        });
    }
    let n = molecules_per_release as f64;
    let mut u = vec![0.0; mixtures.num_molecules()];
    for m in signal.active() {
        for (q, frac) in mixtures.entries().column(m).iter().enumerate() {
            u[q] += n * frac;
        }
    }
    Ok(u)
}

/// Independent `x_q ~ Pois(v_q u_q)`.
pub fn propagate<R: Rng + ?Sized>(released: &[f64], channel_gain: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if released.len() != channel_gain.len() {
        return Err(Error::DimensionMismatch {
            context: "propagate: channel gain length",
            expected: released.len(),
            actual: channel_gain.len(),
        });
    }
    Ok(released
        .iter()
        .zip(channel_gain)
        .map(|(u, v)| sample_poisson(u * v, rng) as f64)
        .collect())
}

/// Shifted ReLU receptor activation.
#[inline]
pub fn activation_fn(z: f64, x_thr: f64) -> f64 {
    if z >= x_thr {
        z - x_thr
    } else {
        0.0
    }
}

/// Noisy thresholded array response to received counts `x`.
pub fn receive<R: Rng + ?Sized>(
    received: &[f64],
    affinity: &AffinityMatrix,
    noise_mean: f64,
    x_thr: f64,
    rng: &mut R,
) -> Result<ArrayObservation> {
    let a = affinity.entries();
    if received.len() != a.ncols() {
        return Err(Error::DimensionMismatch {
            context: "receive: molecule count length",
            expected: a.ncols(),
            actual: received.len(),
        });
    }
    let y = (0..a.nrows())
        .map(|r| {
            let drive: f64 = a.row(r).iter().zip(received).map(|(a, x)| a * x).sum();
            let noise = sample_poisson(noise_mean, rng) as f64;
            activation_fn(drive + noise, x_thr)
        })
        .collect();
    ArrayObservation::from_signal(y, None)
}

/// One transmission of mixture `mixture_index` through the whole channel,
/// returning the intermediate counts too.
pub fn simulate_snapshot_traced<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    affinity: &AffinityMatrix,
    mixtures: &MixtureMatrix,
    mixture_index: usize,
    rng: &mut R,
) -> Result<(MoleculeCounts, ArrayObservation)> {
    if affinity.num_molecules() != mixtures.num_molecules() {
        return Err(Error::DimensionMismatch {
            context: "affinity vs mixture molecule types",
            expected: affinity.num_molecules(),
            actual: mixtures.num_molecules(),
        });
    }
    let signal = TransmitSignal::single(mixture_index, mixtures.num_mixtures())?;
    let released = release(&signal, mixtures, cfg.molecules_per_release)?;
    let received = propagate(&released, &cfg.channel_gain, rng)?;
    let mut obs = receive(&received, affinity, cfg.noise_mean, cfg.activation_threshold, rng)?;
    obs.ground_truth_mixture = Some(mixture_index);
    Ok((MoleculeCounts { released, received }, obs))
}

pub fn simulate_snapshot<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    affinity: &AffinityMatrix,
    mixtures: &MixtureMatrix,
    mixture_index: usize,
    rng: &mut R,
) -> Result<ArrayObservation> {
    simulate_snapshot_traced(cfg, affinity, mixtures, mixture_index, rng).map(|(_, obs)| obs)
}

/// Header of the per-trial trace CSV.
pub fn trace_header(num_molecules: usize, num_receptors: usize) -> String {
    let mut h = String::from("trial_id,mixture_index");
    for q in 0..num_molecules {
        let _ = write!(h, ",x{q}");
    }
    for r in 0..num_receptors {
        let _ = write!(h, ",y{r}");
    }
    h
}

/// One trace CSV row: `trial_id, mixture_index, x..., y...`.
pub fn trace_line(trial_id: u64, counts: &MoleculeCounts, obs: &ArrayObservation) -> String {
    let mut line = format!(
        "{trial_id},{}",
        obs.ground_truth_mixture.map(|m| m.to_string()).unwrap_or_default()
    );
    for v in counts.received.iter().chain(&obs.y) {
        let _ = write!(line, ",{v}");
    }
    line
}
