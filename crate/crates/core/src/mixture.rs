//! Mixture alphabets: which molecule types make up each transmitted mixture.
//!
//! A mixture matrix is `Q x M` and column-stochastic. Each column uses
//! `n_mix` molecule types in equal fractions and no two columns share a
//! support.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix_io;

const SUM_TOLERANCE: f64 = 1e-9;
/// Above this many candidate supports, draw by rejection instead of
/// enumerating all of them.
const ENUMERATION_LIMIT: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureMatrix {
    entries: DMatrix<f64>,
    n_mix: usize,
}

impl MixtureMatrix {
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n_mix(&self) -> usize {
        self.n_mix
    }

    pub fn num_molecules(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_mixtures(&self) -> usize {
        self.entries.ncols()
    }

    /// Sorted molecule indices present in mixture `m`.
    pub fn support(&self, m: usize) -> Vec<usize> {
        self.entries
            .column(m)
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(q, _)| q)
            .collect()
    }

    /// Builds the matrix whose column `m` is uniform over `supports[m]`.
    pub fn from_supports(num_molecules: usize, supports: &[Vec<usize>]) -> Result<Self> {
        let mut entries = DMatrix::zeros(num_molecules, supports.len());
        for (m, support) in supports.iter().enumerate() {
            for &q in support {
                if q >= num_molecules {
                    return Err(Error::InvariantViolation {
                        column: m,
                        message: format!("molecule index {q} out of range for Q={num_molecules}"),
                    });
                }
                entries[(q, m)] = 1.0 / support.len() as f64;
            }
        }
        Self::from_entries(entries)
    }

    /// Validates every alphabet invariant on an explicit matrix.
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        if entries.ncols() == 0 || entries.nrows() == 0 {
            return Err(Error::NonPositiveDimension {
                name: "mixture dimension",
                value: 0,
            });
        }
        let mut n_mix = None;
        let mut seen = HashSet::new();
        for (m, col) in entries.column_iter().enumerate() {
            let violation = |message: String| Error::InvariantViolation { column: m, message };
            if let Some(v) = col.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(violation(format!("entry {v} is negative or not finite")));
            }
            let sum: f64 = col.iter().sum();
            if (sum - 1.0).abs() > SUM_TOLERANCE {
                return Err(violation(format!("column sums to {sum}, expected 1")));
            }
            let support: Vec<usize> = (0..col.len()).filter(|&q| col[q] != 0.0).collect();
            let k = support.len();
            match n_mix {
                None => n_mix = Some(k),
                Some(expected) if expected != k => {
                    return Err(violation(format!("{k} molecule types, expected {expected}")));
                }
                _ => {}
            }
            let uniform = 1.0 / k as f64;
            if support.iter().any(|&q| (col[q] - uniform).abs() > SUM_TOLERANCE) {
                return Err(violation(format!("fractions are not uniform 1/{k}")));
            }
            if !seen.insert(support) {
                return Err(violation("support duplicates an earlier column".into()));
            }
        }
        Ok(Self {
            entries,
            n_mix: n_mix.unwrap_or(0),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_entries(matrix_io::read_matrix_file(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_entries(matrix_io::parse_matrix(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        matrix_io::write_matrix_file(path, &self.entries)
    }
}

/// Alias matching the file-loading operation name.
pub fn load_mixture_matrix(path: &Path) -> Result<MixtureMatrix> {
    MixtureMatrix::load(path)
}

/// Binary transmit vector over the alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmitSignal {
    s: Vec<bool>,
}

impl TransmitSignal {
    /// Only mixture `index` released.
    pub fn single(index: usize, num_mixtures: usize) -> Result<Self> {
        if index >= num_mixtures {
            return Err(Error::DimensionMismatch {
                context: "transmit index",
                expected: num_mixtures,
                actual: index,
            });
        }
        let mut s = vec![false; num_mixtures];
        s[index] = true;
        Ok(Self { s })
    }

    /// Nothing released.
    pub fn silent(num_mixtures: usize) -> Self {
        Self {
            s: vec![false; num_mixtures],
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.s.iter().enumerate().filter(|(_, b)| **b).map(|(m, _)| m)
    }
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Random alphabet of `num_mixtures` distinct `n_mix`-sparse uniform
/// mixtures over `num_molecules` molecule types.
///
/// Supports are taken in the order of one random shuffle, so for a fixed
/// generator state a smaller alphabet is a prefix of a larger one.
pub fn build_mixture_matrix<R: Rng + ?Sized>(
    num_molecules: usize,
    num_mixtures: usize,
    n_mix: usize,
    rng: &mut R,
) -> Result<MixtureMatrix> {
    if num_mixtures == 0 {
        return Err(Error::NonPositiveDimension { name: "M", value: 0 });
    }
    if n_mix == 0 || n_mix > num_molecules {
        return Err(Error::BadArity {
            r_act: n_mix,
            len: num_molecules,
        });
    }
    let available = binomial(num_molecules, n_mix);
    if num_mixtures as u128 > available {
        return Err(Error::AlphabetTooLarge {
            requested: num_mixtures,
            available,
            n_mix,
        });
    }

    let supports: Vec<Vec<usize>> = if available <= ENUMERATION_LIMIT {
        let mut all = all_supports(num_molecules, n_mix);
        all.shuffle(rng);
        all.truncate(num_mixtures);
        all
    } else {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(num_mixtures);
        while out.len() < num_mixtures {
            let mut s = rand::seq::index::sample(rng, num_molecules, n_mix).into_vec();
            s.sort_unstable();
            if seen.insert(s.clone()) {
                out.push(s);
            }
        }
        out
    };
    MixtureMatrix::from_supports(num_molecules, &supports)
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn all_supports(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
