//! Peak detection on recovered mixture weights and Monte Carlo error
//! estimation.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::affinity::AffinityMatrix;
use crate::channel::simulate_snapshot;
use crate::error::{Error, Result};
use crate::mixture::MixtureMatrix;
use crate::model::{RngStream, SystemConfig};
use crate::recovery::{build_op2, solve, SolveSettings, SolveStatus};

/// z for a two-sided 95% normal interval.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub s_hat: Vec<bool>,
    pub detected_index: usize,
    /// More than one entry attained the maximum.
    pub tied: bool,
    /// Set once the transmitted mixture is known.
    pub correct: Option<bool>,
}

impl DetectionResult {
    pub fn with_ground_truth(mut self, truth: usize) -> Self {
        self.correct = Some(self.detected_index == truth);
        self
    }
}

/// One-hot at the (first) argmax of `w_hat`.
pub fn peak_detect(w_hat: &[f64]) -> Result<DetectionResult> {
    if w_hat.is_empty() {
        return Err(Error::EmptyVector);
    }
    let mut best = 0;
    for (m, v) in w_hat.iter().enumerate().skip(1) {
        if *v > w_hat[best] {
            best = m;
        }
    }
    let tied = w_hat.iter().filter(|v| **v == w_hat[best]).count() > 1;
    let mut s_hat = vec![false; w_hat.len()];
    s_hat[best] = true;
    Ok(DetectionResult {
        s_hat,
        detected_index: best,
        tied,
        correct: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEstimate {
    pub p_e: f64,
    pub errors: usize,
    pub trials: usize,
    /// Half-width of the 95% interval (Wilson when fewer than 5 errors).
    pub ci_halfwidth: f64,
    /// Trials whose solve did not return `Optimal`.
    pub non_optimal: usize,
    /// Trials certified infeasible (a subset of `non_optimal`).
    pub infeasible: usize,
    /// Wall-clock solver time per trial, in milliseconds.
    pub mean_solve_ms: f64,
}

impl ErrorEstimate {
    pub fn from_counts(errors: usize, trials: usize) -> Self {
        let p = errors as f64 / trials as f64;
        Self {
            p_e: p,
            errors,
            trials,
            ci_halfwidth: ci_halfwidth(errors, trials),
            non_optimal: 0,
            infeasible: 0,
            mean_solve_ms: 0.0,
        }
    }

    pub fn infeasible_fraction(&self) -> f64 {
        self.infeasible as f64 / self.trials as f64
    }
}

pub fn ci_halfwidth(errors: usize, trials: usize) -> f64 {
    let n = trials as f64;
    let p = errors as f64 / n;
    if errors < 5 {
        let z2 = Z95 * Z95;
        Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
    } else {
        Z95 * (p * (1.0 - p) / n).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub transmitted: usize,
    pub detected: Option<DetectionResult>,
    pub status: SolveStatus,
    pub solve_ms: f64,
}

impl TrialOutcome {
    pub fn is_error(&self) -> bool {
        !matches!(&self.detected, Some(d) if d.correct == Some(true))
    }
}

/// One seeded trial: uniform mixture draw, channel snapshot, alphabet-aware
/// recovery and peak detection. `detected` is `None` when the solve gave no
/// usable weights.
pub fn run_trial(
    cfg: &SystemConfig,
    affinity: &AffinityMatrix,
    mixtures: &MixtureMatrix,
    stream: RngStream,
) -> Result<TrialOutcome> {
    let mut rng = stream.rng();
    let transmitted = rng.random_range(0..mixtures.num_mixtures());
    let obs = simulate_snapshot(cfg, affinity, mixtures, transmitted, &mut rng)?;
    let program = build_op2(&obs, affinity, mixtures, cfg)?;
    let start = Instant::now();
    let sol = solve(&program, &SolveSettings::default())?;
    let solve_ms = start.elapsed().as_secs_f64() * 1e3;
    let detected = match (&sol.status, &sol.w_hat) {
        (SolveStatus::Optimal | SolveStatus::Inaccurate, Some(w)) => Some(peak_detect(w)?.with_ground_truth(transmitted)),
        _ => None,
    };
    Ok(TrialOutcome {
        transmitted,
        detected,
        status: sol.status,
        solve_ms,
    })
}

/// Per-trial outcomes for trials `0..num_trials`, each on
/// `stream.substream(trial)`. Runs on the current rayon pool; the result
/// order is the trial order.
pub fn run_trial_outcomes(
    cfg: &SystemConfig,
    affinity: &AffinityMatrix,
    mixtures: &MixtureMatrix,
    num_trials: usize,
    stream: RngStream,
) -> Result<Vec<TrialOutcome>> {
    if num_trials == 0 {
        return Err(Error::Precondition("num_trials must be at least 1".into()));
    }
    (0..num_trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, affinity, mixtures, stream.substream(t)))
        .collect()
}

pub fn summarize(outcomes: &[TrialOutcome]) -> ErrorEstimate {
    let errors = outcomes.iter().filter(|o| o.is_error()).count();
    let mut est = ErrorEstimate::from_counts(errors, outcomes.len());
    est.non_optimal = outcomes.iter().filter(|o| o.status != SolveStatus::Optimal).count();
    est.infeasible = outcomes.iter().filter(|o| o.status == SolveStatus::Infeasible).count();
    est.mean_solve_ms = outcomes.iter().map(|o| o.solve_ms).sum::<f64>() / outcomes.len() as f64;
    est
}

/// Monte Carlo detection error probability. Infeasible and
/// `MaxIterations` solves count as errors; `Inaccurate` ones are still
/// peak-detected.
pub fn run_trials(
    cfg: &SystemConfig,
    affinity: &AffinityMatrix,
    mixtures: &MixtureMatrix,
    num_trials: usize,
    stream: RngStream,
) -> Result<ErrorEstimate> {
    Ok(summarize(&run_trial_outcomes(cfg, affinity, mixtures, num_trials, stream)?))
}
