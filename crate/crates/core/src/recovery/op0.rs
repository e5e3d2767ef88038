//! Exhaustive l0 recovery on a grid, usable only at tiny scale.
//!
//! Supports are enumerated by increasing size and every grid assignment on
//! each support is tried. The expected array signal is taken as
//! `relu(A x + lambda - x_thr)` and the error budget as `eps * R * lambda`
//! (per-receptor variance approximated by the noise mean).

use crate::affinity::AffinityMatrix;
use crate::channel::{activation_fn, ArrayObservation};
use crate::error::{Error, Result};
use crate::model::SystemConfig;

pub const MAX_OP0_MOLECULES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Spacing of candidate nonzero values.
    pub step: f64,
    /// Largest candidate value (inclusive, up to rounding).
    pub max_value: f64,
}

impl GridSpec {
    fn values(&self) -> Vec<f64> {
        let count = (self.max_value / self.step + 1e-9).floor() as usize;
        (1..=count).map(|i| i as f64 * self.step).collect()
    }
}

/// Squared distance between `y` and the linearized expected signal at `x`.
pub fn expected_signal_error(obs: &ArrayObservation, affinity: &AffinityMatrix, cfg: &SystemConfig, x: &[f64]) -> f64 {
    let a = affinity.entries();
    (0..a.nrows())
        .map(|r| {
            let drive: f64 = (0..a.ncols()).map(|q| a[(r, q)] * x[q]).sum();
            let expected = activation_fn(drive + cfg.noise_mean, cfg.activation_threshold);
            (obs.y[r] - expected).powi(2)
        })
        .sum()
}

pub fn op0_error_budget(cfg: &SystemConfig, num_receptors: usize) -> f64 {
    cfg.recon_error_eps * num_receptors as f64 * cfg.noise_mean
}

/// Sparsest grid point meeting the error budget; ties broken by smaller l1
/// norm, then smaller error, then enumeration order.
pub fn op0_oracle(
    obs: &ArrayObservation,
    affinity: &AffinityMatrix,
    cfg: &SystemConfig,
    grid: GridSpec,
    max_support: usize,
) -> Result<Vec<f64>> {
    let q = affinity.num_molecules();
    if q > MAX_OP0_MOLECULES {
        return Err(Error::Precondition(format!(
            "exhaustive l0 search supports at most {MAX_OP0_MOLECULES} molecule types, got {q}"
        )));
    }
    if !(grid.step > 0.0 && grid.max_value >= grid.step) {
        return Err(Error::Precondition("grid needs step > 0 and max_value >= step".into()));
    }
    if obs.num_receptors() != affinity.num_receptors() {
        return Err(Error::DimensionMismatch {
            context: "observation vs affinity receptors",
            expected: affinity.num_receptors(),
            actual: obs.num_receptors(),
        });
    }
    let budget = op0_error_budget(cfg, affinity.num_receptors());
    let values = grid.values();

    for k in 0..=max_support.min(q) {
        let mut best: Option<(f64, f64, Vec<f64>)> = None;
        for support in subsets(q, k) {
            let mut digits = vec![0usize; k];
            loop {
                let mut x = vec![0.0; q];
                for (slot, &mol) in support.iter().enumerate() {
                    x[mol] = values[digits[slot]];
                }
                let err = expected_signal_error(obs, affinity, cfg, &x);
                if err <= budget {
                    let l1: f64 = x.iter().sum();
                    let better = match &best {
                        None => true,
                        Some((bl1, berr, _)) => l1 < *bl1 || (l1 == *bl1 && err < *berr),
                    };
                    if better {
                        best = Some((l1, err, x));
                    }
                }
                if !advance(&mut digits, values.len()) {
                    break;
                }
            }
        }
        if let Some((_, _, x)) = best {
            return Ok(x);
        }
    }
    Err(Error::NoFeasiblePoint)
}

fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn tiny_affinity() -> AffinityMatrix {
        AffinityMatrix::from_entries(DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 0.2, 0.0, 0.0, 1.0, -0.1, 0.5, 0.0, 1.0, -0.2, 0.6, 0.3],
        ))
        .unwrap()
    }

    fn noiseless_obs(a: &AffinityMatrix, cfg: &SystemConfig, x: &[f64]) -> ArrayObservation {
        let m = a.entries();
        let y = (0..m.nrows())
            .map(|r| {
                let drive: f64 = (0..m.ncols()).map(|q| m[(r, q)] * x[q]).sum();
                activation_fn(drive + cfg.noise_mean, cfg.activation_threshold)
            })
            .collect();
        ArrayObservation::from_signal(y, None).unwrap()
    }

    fn cfg(eps: f64) -> SystemConfig {
        SystemConfig {
            num_receptors: 4,
            num_molecules: 3,
            num_mixtures: 3,
            channel_gain: vec![0.01; 3],
            noise_mean: 2.0,
            activation_threshold: 1.0,
            ..Default::default()
        }
        .with_eps_delta(eps)
    }

    #[test]
    fn recovers_on_grid_one_sparse_support() {
        let a = tiny_affinity();
        let c = cfg(1e-9);
        for (mol, val) in [(0usize, 3.0), (1, 1.5), (2, 4.5)] {
            let mut x = vec![0.0; 3];
            x[mol] = val;
            let obs = noiseless_obs(&a, &c, &x);
            let got = op0_oracle(&obs, &a, &c, GridSpec { step: 0.5, max_value: 6.0 }, 2).unwrap();
            assert_eq!(got, x);
        }
    }

    #[test]
    fn generous_budget_returns_origin() {
        let a = tiny_affinity();
        let c = cfg(1e6);
        let obs = noiseless_obs(&a, &c, &[3.0, 0.0, 0.0]);
        let got = op0_oracle(&obs, &a, &c, GridSpec { step: 0.5, max_value: 6.0 }, 2).unwrap();
        assert_eq!(got, vec![0.0; 3]);
    }

    #[test]
    fn off_grid_target_within_budget_is_infeasible_on_coarse_grid() {
        let a = tiny_affinity();
        let c = cfg(1e-12);
        let obs = noiseless_obs(&a, &c, &[0.3, 0.0, 0.0]);
        let err = op0_oracle(&obs, &a, &c, GridSpec { step: 1.0, max_value: 3.0 }, 1).unwrap_err();
        assert!(matches!(err, Error::NoFeasiblePoint));
    }

    #[test]
    fn rejects_more_than_six_molecules() {
        let a = AffinityMatrix::from_entries(DMatrix::from_element(3, 7, 0.5)).unwrap();
        let obs = ArrayObservation::from_signal(vec![1.0; 3], None).unwrap();
        let err = op0_oracle(&obs, &a, &cfg(1.0), GridSpec { step: 1.0, max_value: 2.0 }, 1).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn subset_enumeration_counts() {
        assert_eq!(subsets(6, 0), vec![Vec::<usize>::new()]);
        assert_eq!(subsets(6, 2).len(), 15);
        assert_eq!(subsets(6, 3).len(), 20);
    }
}
