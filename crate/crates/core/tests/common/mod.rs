//! Test oracles written independently of the library's program builder.

#![allow(dead_code)]

use mixsense::affinity::AffinityMatrix;
use mixsense::channel::ArrayObservation;
use mixsense::mixture::MixtureMatrix;
use mixsense::model::SystemConfig;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn drive(a: &DMatrix<f64>, r: usize, x: &[f64]) -> f64 {
    (0..a.ncols()).map(|q| a[(r, q)] * x[q]).sum()
}

/// Largest violation of the alphabet-aware recovery constraints at (x, w),
/// recomputed from the raw model quantities. Quadratic constraints are in
/// squared form.
pub fn op2_violation(
    obs: &ArrayObservation,
    affinity: &AffinityMatrix,
    mixtures: &MixtureMatrix,
    cfg: &SystemConfig,
    x: &[f64],
    w: &[f64],
) -> f64 {
    let a = affinity.entries();
    let m = mixtures.entries();
    let (lam, thr, eps, delta) = (
        cfg.noise_mean,
        cfg.activation_threshold,
        cfg.recon_error_eps,
        cfg.deviation_delta,
    );
    let mut worst = 0.0f64;
    for v in x.iter().chain(w) {
        worst = worst.max(-v);
    }
    if !obs.activated.is_empty() {
        let sq: f64 = obs
            .activated
            .iter()
            .map(|&r| (obs.y[r] - drive(a, r, x) - (lam - thr)).powi(2))
            .sum();
        worst = worst.max(sq - obs.activated.len() as f64 * lam * eps);
    }
    for &r in &obs.non_activated {
        worst = worst.max(drive(a, r, x) + (lam - thr) - (lam * eps).sqrt());
    }
    for q in 0..x.len() {
        let t: f64 = (0..w.len()).map(|j| m[(q, j)] * w[j]).sum();
        worst = worst.max((x[q] - t).powi(2) - delta * t);
    }
    worst
}

/// Solves the k x k system `g z = h` (k <= 3) by Gaussian elimination with
/// partial pivoting. `None` when (near) singular.
fn solve_small(mut g: Vec<Vec<f64>>, mut h: Vec<f64>) -> Option<Vec<f64>> {
    let k = h.len();
    for col in 0..k {
        let piv = (col..k).max_by(|a, b| g[*a][col].abs().partial_cmp(&g[*b][col].abs()).unwrap())?;
        if g[piv][col].abs() < 1e-12 {
            return None;
        }
        g.swap(col, piv);
        h.swap(col, piv);
        for row in col + 1..k {
            let f = g[row][col] / g[col][col];
            let pivot_row = g[col].clone();
            for (dst, src) in g[row].iter_mut().zip(&pivot_row).skip(col) {
                *dst -= f * src;
            }
            h[row] -= f * h[col];
        }
    }
    let mut z = vec![0.0; k];
    for row in (0..k).rev() {
        let s: f64 = (row + 1..k).map(|c| g[row][c] * z[c]).sum();
        z[row] = (h[row] - s) / g[row][row];
    }
    Some(z)
}

/// Exact `min ||b - A x||^2` over the box `lo <= x <= hi` for at most three
/// unknowns, by checking the stationary point of every face.
pub fn box_least_squares(a: &[Vec<f64>], b: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let n = lo.len();
    assert!(n <= 3);
    let objective = |x: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(row, bi)| {
                let ax: f64 = row.iter().zip(x).map(|(c, v)| c * v).sum();
                (bi - ax).powi(2)
            })
            .sum()
    };
    let mut best = f64::INFINITY;
    let faces = 3usize.pow(n as u32);
    for code in 0..faces {
        // 0 = at lower bound, 1 = at upper bound, 2 = free.
        let mut state = vec![0usize; n];
        let mut c = code;
        for s in state.iter_mut() {
            *s = c % 3;
            c /= 3;
        }
        let mut x: Vec<f64> = (0..n).map(|j| if state[j] == 1 { hi[j] } else { lo[j] }).collect();
        let free: Vec<usize> = (0..n).filter(|j| state[*j] == 2).collect();
        if !free.is_empty() {
            let resid: Vec<f64> = a
                .iter()
                .zip(b)
                .map(|(row, bi)| bi - (0..n).filter(|j| state[*j] != 2).map(|j| row[j] * x[j]).sum::<f64>())
                .collect();
            let g: Vec<Vec<f64>> = free
                .iter()
                .map(|&i| free.iter().map(|&j| a.iter().map(|row| row[i] * row[j]).sum()).collect())
                .collect();
            let h: Vec<f64> = free.iter().map(|&i| a.iter().zip(&resid).map(|(row, r)| row[i] * r).sum()).collect();
            let Some(z) = solve_small(g, h) else { continue };
            for (k, &j) in free.iter().enumerate() {
                x[j] = z[k];
            }
            if free.iter().any(|&j| x[j] < lo[j] - 1e-12 || x[j] > hi[j] + 1e-12) {
                continue;
            }
        }
        best = best.min(objective(&x));
    }
    best
}

/// A recovery instance in which every receptor is activated.
pub struct TinyInstance {
    pub affinity: AffinityMatrix,
    pub mixtures: MixtureMatrix,
    pub obs: ArrayObservation,
    pub cfg: SystemConfig,
    /// A known feasible weight vector.
    pub w_feasible: Vec<f64>,
}

impl TinyInstance {
    /// Whether weights `w` admit some x meeting every constraint.
    pub fn feasible(&self, w: &[f64]) -> bool {
        let a = self.affinity.entries();
        let m = self.mixtures.entries();
        let q = a.ncols();
        let mut lo = vec![0.0; q];
        let mut hi = vec![0.0; q];
        for i in 0..q {
            let t: f64 = (0..w.len()).map(|j| m[(i, j)] * w[j]).sum();
            let half = (self.cfg.deviation_delta * t).sqrt();
            lo[i] = (t - half).max(0.0);
            hi[i] = t + half;
        }
        let offset = self.cfg.noise_mean - self.cfg.activation_threshold;
        let rows: Vec<Vec<f64>> = (0..a.nrows()).map(|r| (0..q).map(|j| a[(r, j)]).collect()).collect();
        let b: Vec<f64> = (0..a.nrows()).map(|r| self.obs.y[r] - offset).collect();
        let bound = a.nrows() as f64 * self.cfg.noise_mean * self.cfg.recon_error_eps;
        box_least_squares(&rows, &b, &lo, &hi) <= bound
    }

    /// Smallest `sum(w)` over feasible points of a 1e-3 lattice: a coarse
    /// scan bounded by the known feasible point, then repeated local boxes
    /// on the fine lattice until no improvement.
    pub fn lattice_minimum(&self) -> f64 {
        const FINE: f64 = 1e-3;
        const COARSE: usize = 20; // in fine steps
        const RADIUS: i64 = 30; // in fine steps
        let cap = (self.w_feasible.iter().sum::<f64>() / FINE).ceil() as i64;
        let m = self.w_feasible.len();
        assert_eq!(m, 3);
        let to_w = |p: [i64; 3]| -> Vec<f64> { p.iter().map(|v| *v as f64 * FINE).collect() };

        let mut best: Option<[i64; 3]> = None;
        let mut best_sum = i64::MAX;
        let step = COARSE as i64;
        let mut i = 0;
        while i <= cap {
            let mut j = 0;
            while i + j <= cap {
                let mut k = 0;
                while i + j + k <= cap {
                    let s = i + j + k;
                    if s < best_sum && self.feasible(&to_w([i, j, k])) {
                        best = Some([i, j, k]);
                        best_sum = s;
                    }
                    k += step;
                }
                j += step;
            }
            i += step;
        }
        let mut center = best.expect("the known feasible point lies within the scanned region");
        loop {
            let mut improved = false;
            for di in -RADIUS..=RADIUS {
                for dj in -RADIUS..=RADIUS {
                    for dk in -RADIUS..=RADIUS {
                        let p = [center[0] + di, center[1] + dj, center[2] + dk];
                        if p.iter().any(|v| *v < 0) {
                            continue;
                        }
                        let s = p[0] + p[1] + p[2];
                        if s < best_sum && self.feasible(&to_w(p)) {
                            best = Some(p);
                            best_sum = s;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                break;
            }
            center = best.unwrap();
        }
        best_sum as f64 * FINE
    }
}

/// Three molecule types, three pairwise mixtures, four receptors with random
/// affinities in [-0.3, 1], unit noise mean and no threshold. The signal is
/// the noiseless drive of a random weight vector plus bounded noise small
/// enough that the generating point stays feasible.
pub fn tiny_instance(seed: u64) -> TinyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (r, q) = (4, 3);
    let a = DMatrix::from_fn(r, q, |_, _| rng.random_range(-0.3..=1.0));
    let affinity = AffinityMatrix::from_entries(a.clone()).unwrap();
    let mixtures = MixtureMatrix::from_supports(3, &[vec![0, 1], vec![0, 2], vec![1, 2]]).unwrap();
    let w0: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..=0.4)).collect();
    let m = mixtures.entries();
    let x0: Vec<f64> = (0..q).map(|i| (0..3).map(|j| m[(i, j)] * w0[j]).sum()).collect();
    let y: Vec<f64> = (0..r)
        .map(|row| drive(&a, row, &x0) + 1.0 + rng.random_range(-0.15..=0.15))
        .collect();
    let obs = ArrayObservation::from_signal(y, None).unwrap();
    assert_eq!(obs.activated.len(), r);
    let cfg = SystemConfig {
        num_receptors: r,
        num_molecules: q,
        num_mixtures: 3,
        molecules_per_release: 1,
        channel_gain: vec![1.0; q],
        noise_mean: 1.0,
        activation_threshold: 0.0,
        recon_error_eps: 0.05,
        deviation_delta: 0.05,
        master_seed: seed,
    };
    TinyInstance {
        affinity,
        mixtures,
        obs,
        cfg,
        w_feasible: w0,
    }
}
