//! Receptor-molecule affinity matrices.
//!
//! Columns are molecule types and rows are receptor types. A generated
//! column activates exactly `r_act` receptors, is normalized so its strongest
//! response is 1, and allows inhibition down to `-a_inh`. Columns are drawn
//! one at a time and rejected while their coherence with any earlier column
//! exceeds `mu_thr`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::matrix_io;

/// Default per-column retry budget for [`construct_affinity`]. At R=10,
/// Q=20, r_act=5, mu_thr=0.5 the last columns are accepted with
/// probability around 1e-5, so a budget of 1e5 fails a few percent of
/// constructions.
pub const DEFAULT_MAX_ATTEMPTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffinityParams {
    /// Receptors activated by each molecule type.
    pub r_act: usize,
    /// Maximum inhibition strength, in `[0, 1]`.
    pub a_inh: f64,
    /// Coherence threshold, in `(0, 1]`.
    pub mu_thr: f64,
}

impl Default for AffinityParams {
    fn default() -> Self {
        Self {
            r_act: 5,
            a_inh: 0.3,
            mu_thr: 0.5,
        }
    }
}

/// An `R x Q` affinity matrix. `params` is present only for matrices built
/// by [`construct_affinity`].
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    entries: DMatrix<f64>,
    params: Option<AffinityParams>,
}

impl AffinityMatrix {
    /// Wraps an arbitrary matrix (e.g. user supplied). No structural
    /// invariants are imposed beyond finiteness.
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::NonPositiveDimension {
                name: "affinity dimension",
                value: 0,
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange {
                name: "affinity",
                reason: "entries must be finite".into(),
            });
        }
        Ok(Self {
            entries,
            params: None,
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn params(&self) -> Option<AffinityParams> {
        self.params
    }

    pub fn num_receptors(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_molecules(&self) -> usize {
        self.entries.ncols()
    }

    /// Largest coherence over all column pairs (0 for a single column).
    pub fn max_coherence(&self) -> Result<f64> {
        let q = self.num_molecules();
        let mut worst: f64 = 0.0;
        for i in 0..q {
            for j in i + 1..q {
                let a = self.entries.column(i).clone_owned();
                let b = self.entries.column(j).clone_owned();
                worst = worst.max(mutual_coherence(a.as_slice(), b.as_slice())?);
            }
        }
        Ok(worst)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_entries(matrix_io::read_matrix_file(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        matrix_io::write_matrix_file(path, &self.entries)
    }
}

/// `|a.b| / (|a| |b|)`, clamped to 1 against rounding.
pub fn mutual_coherence(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "mutual coherence",
            expected: a.len(),
            actual: b.len(),
        });
    }
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector("mutual coherence"));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot.abs() / (na * nb)).min(1.0))
}

/// Length-`len` vector with `r_act` distinct uniformly chosen positions set
/// to draws from `(0, 1]`; all other entries zero.
pub fn generate_raw_column<R: Rng + ?Sized>(len: usize, r_act: usize, rng: &mut R) -> Result<Vec<f64>> {
    if r_act == 0 || r_act > len {
        return Err(Error::BadArity { r_act, len });
    }
    let mut col = vec![0.0; len];
    for pos in rand::seq::index::sample(rng, len, r_act) {
        // random::<f64>() is in [0, 1); flip it onto (0, 1].
        col[pos] = 1.0 - rng.random::<f64>();
    }
    Ok(col)
}

/// Affinely maps the support of `raw` so that its maximum becomes exactly 1
/// and `0+` maps towards `-a_inh`; zeros stay zero.
pub fn rescale_column(raw: &[f64], a_inh: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&a_inh) {
        return Err(Error::OutOfRange {
            name: "a_inh",
            reason: format!("{a_inh} not in [0, 1]"),
        });
    }
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::ZeroVector("rescale column"));
    }
    Ok(raw
        .iter()
        .map(|&v| {
            if v == 0.0 {
                0.0
            } else if v == max {
                1.0
            } else {
                (v / max) * (1.0 + a_inh) - a_inh
            }
        })
        .collect())
}

/// Semi-random affinity construction with coherence screening.
///
/// Column 0 is accepted unconditionally. Each later column is redrawn until
/// its coherence with every accepted column is at most `mu_thr`, failing
/// with [`Error::CoherenceBudgetExhausted`] after `max_attempts` draws.
pub fn construct_affinity<R: Rng + ?Sized>(
    num_receptors: usize,
    num_molecules: usize,
    params: AffinityParams,
    rng: &mut R,
    max_attempts: usize,
) -> Result<AffinityMatrix> {
    let AffinityParams { r_act, a_inh, mu_thr } = params;
    if num_receptors == 0 {
        return Err(Error::NonPositiveDimension { name: "R", value: 0 });
    }
    if num_molecules == 0 {
        return Err(Error::NonPositiveDimension { name: "Q", value: 0 });
    }
    if r_act == 0 || r_act > num_receptors {
        return Err(Error::BadArity {
            r_act,
            len: num_receptors,
        });
    }
    if !(mu_thr > 0.0 && mu_thr <= 1.0) {
        return Err(Error::OutOfRange {
            name: "mu_thr",
            reason: format!("{mu_thr} not in (0, 1]"),
        });
    }
    if max_attempts == 0 {
        return Err(Error::Precondition("max_attempts must be at least 1".into()));
    }

    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(num_molecules);
    for q in 0..num_molecules {
        let mut accepted = None;
        for _ in 0..max_attempts {
            let candidate = rescale_column(&generate_raw_column(num_receptors, r_act, rng)?, a_inh)?;
            // A support entry landing exactly on 0 would shrink the support.
            if candidate.iter().filter(|v| **v != 0.0).count() != r_act {
                continue;
            }
            let mut ok = true;
            for prev in &columns {
                if mutual_coherence(&candidate, prev.as_slice())? > mu_thr {
                    ok = false;
                    break;
                }
            }
            if ok {
                accepted = Some(candidate);
                break;
            }
        }
        let col = accepted.ok_or(Error::CoherenceBudgetExhausted {
            column: q,
            mu_thr,
            attempts: max_attempts,
        })?;
        columns.push(DVector::from_vec(col));
    }
    Ok(AffinityMatrix {
        entries: DMatrix::from_columns(&columns),
        params: Some(params),
    })
}

#[rustfmt::skip]
const FIXTURE_ROWS: [[f64; 20]; 10] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.55, 1.0, -0.1, 0.0, 0.0, 0.0, -0.28, 0.46, 0.66, 1.0, 0.0, 0.76, -0.14, 0.0, 0.0],
    [0.0, -0.06, 0.31, 0.02, 1.0, 0.0, 0.0, 0.38, 0.38, -0.29, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.81, 0.99, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.52, 0.38, 0.6, 0.0, -0.11, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.01, 0.98, 0.0, 0.0, 0.0],
    [1.0, 0.41, 0.0, 0.0, 0.0, 0.0, 0.27, 0.0, 0.9, 0.0, -0.25, 0.65, 0.0, -0.25, 0.0, 0.0, 1.0, 0.0, 1.0, 0.76],
    [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -0.01, 0.0, -0.25, 0.0, 0.71, -0.17, 0.73, 0.0, 0.38, 0.0, 0.0, -0.1, 0.88, 0.79],
    [0.55, 0.44, 0.55, 0.0, -0.25, 0.29, 0.0, 1.0, 0.0, 0.0, 0.31, 0.0, 0.0, -0.24, 0.96, 0.63, -0.24, 0.0, 0.0, 0.0],
    [-0.3, 1.0, 0.0, 0.0, 0.5, -0.29, 0.0, 0.0, 0.33, 0.6, 0.0, 0.0, 0.0, 1.0, 0.12, -0.17, 0.0, 0.0, -0.07, 0.75],
    [0.0, 0.0, 0.62, 0.0, 0.0, 0.0, 0.0, -0.19, 1.0, -0.17, 1.0, 0.0, -0.2, -0.13, 0.4, 0.55, 0.0, 0.0, 0.0, 0.36],
    [-0.08, 0.67, 0.0, 0.0, 0.0, 1.0, -0.21, 0.0, 0.0, 0.0, 0.45, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.77, 0.0],
    [0.16, 0.0, -0.3, 0.16, 0.83, 0.0, 0.89, 0.0, 0.0, 0.16, 0.0, 0.84, -0.18, 0.0, 0.0, 1.0, 0.0, 0.0, -0.21, 1.0],
];

/// The reference 10x20 example matrix (R=10, Q=20, r_act=5, a_inh=0.3,
/// mu_thr=0.5), transcribed at the printed two-decimal precision.
pub fn reference_affinity_fixture() -> AffinityMatrix {
    let data: Vec<f64> = FIXTURE_ROWS.iter().flatten().copied().collect();
    AffinityMatrix {
        entries: DMatrix::from_row_slice(10, 20, &data),
        params: None,
    }
}
