//! Exact Poisson sampling.
//!
//! Small means use sequential inversion; means of 30 and above use the
//! transformed rejection method PTRS (Hörmann, 1993), whose acceptance test
//! compares against the exact log-pmf, so both branches are exact.

use rand::Rng;

const INVERSION_CUTOFF: f64 = 30.0;

/// One draw from `Pois(mean)`. `mean` must be finite and nonnegative; a zero
/// mean always returns 0.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    debug_assert!(mean.is_finite() && mean >= 0.0, "bad Poisson mean {mean}");
    if mean <= 0.0 {
        0
    } else if mean < INVERSION_CUTOFF {
        inversion(mean, rng)
    } else {
        ptrs(mean, rng)
    }
}

fn inversion<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let u: f64 = rng.random();
    let mut k = 0u64;
    let mut p = (-mean).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
        // Rounding can leave the cdf a hair below u in the far tail.
        if p == 0.0 {
            break;
        }
    }
    k
}

fn ptrs<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    let slam = mean.sqrt();
    let loglam = mean.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln() <= -mean + k * loglam - ln_gamma(k + 1.0) {
            return k as u64;
        }
    }
}

/// `ln Γ(x)` for `x ≥ 1` via the Stirling series, shifting small arguments
/// up to 7 first.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 10] = [
        8.333333333333333e-02,
        -2.777777777777778e-03,
        7.936507936507937e-04,
        -5.952380952380952e-04,
        8.417508417508418e-04,
        -1.917526917526918e-03,
        6.41025641025641e-03,
        -2.955065359477124e-02,
        1.796443723688307e-01,
        -1.39243221690590e+00,
    ];
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    let shift = if x < 7.0 { (7.0 - x).floor() as i32 } else { 0 };
    let mut x0 = x + shift as f64;
    let x2 = 1.0 / (x0 * x0);
    let mut series = COEF[9];
    for c in COEF[..9].iter().rev() {
        series = series * x2 + c;
    }
    let ln_2pi = 1.837_877_066_409_345_3;
    let mut gl = series / x0 + 0.5 * ln_2pi + (x0 - 0.5) * x0.ln() - x0;
    for _ in 0..shift {
        x0 -= 1.0;
        gl -= x0.ln();
    }
    gl
}
