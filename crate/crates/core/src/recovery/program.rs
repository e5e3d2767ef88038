use std::fmt::Write as _;

use crate::affinity::AffinityMatrix;
use crate::channel::ArrayObservation;
use crate::error::{Error, Result};
use crate::mixture::MixtureMatrix;
use crate::model::SystemConfig;

/// Which variable block the l1 objective sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveBlock {
    Concentrations,
    MixtureWeights,
}

/// `coeffs . z + constant` over the stacked variable `z = [x; w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

impl Affine {
    fn zero(n: usize) -> Self {
        Self {
            coeffs: vec![0.0; n],
            constant: 0.0,
        }
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        self.coeffs.iter().zip(z).map(|(c, v)| c * v).sum::<f64>() + self.constant
    }
}

/// `sum_i rows_i(z)^2 <= bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallConstraint {
    pub label: String,
    pub rows: Vec<Affine>,
    pub bound: f64,
}

/// `expr(z) <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub label: String,
    pub expr: Affine,
    pub rhs: f64,
}

/// `lhs(z)^2 <= scale * rhs(z)`, which forces `rhs(z) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedConstraint {
    pub label: String,
    pub lhs: Affine,
    pub scale: f64,
    pub rhs: Affine,
}

/// Minimize the l1 norm of one variable block over `z = [x; w] >= 0`
/// subject to one optional ball constraint, affine inequalities and
/// rotated-quadratic constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProgram {
    pub num_x: usize,
    pub num_w: usize,
    pub objective: ObjectiveBlock,
    pub ball: Option<BallConstraint>,
    pub linear: Vec<LinearConstraint>,
    pub rotated: Vec<RotatedConstraint>,
}

/// Violation magnitude of one constraint at a candidate point (0 when
/// satisfied). Ball and rotated constraints are measured in their squared
/// form, exactly as written.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub label: String,
    pub violation: f64,
}

impl ConicProgram {
    pub fn num_vars(&self) -> usize {
        self.num_x + self.num_w
    }

    /// Objective column mask: 1 on the objective block, 0 elsewhere.
    pub fn objective_coeffs(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.num_vars()];
        let range = match self.objective {
            ObjectiveBlock::Concentrations => 0..self.num_x,
            ObjectiveBlock::MixtureWeights => self.num_x..self.num_vars(),
        };
        c[range].iter_mut().for_each(|v| *v = 1.0);
        c
    }

    /// l1 norm of the objective block (assumes the block is nonnegative).
    pub fn objective_value(&self, z: &[f64]) -> f64 {
        self.objective_coeffs().iter().zip(z).map(|(c, v)| c * v.abs()).sum()
    }

    pub fn residuals(&self, z: &[f64]) -> Vec<Residual> {
        let mut out = Vec::new();
        let neg = |range: std::ops::Range<usize>| z[range].iter().fold(0.0f64, |acc, v| acc.max(-v));
        out.push(Residual {
            label: "x>=0".into(),
            violation: neg(0..self.num_x),
        });
        if self.num_w > 0 {
            out.push(Residual {
                label: "w>=0".into(),
                violation: neg(self.num_x..self.num_vars()),
            });
        }
        if let Some(ball) = &self.ball {
            let sq: f64 = ball.rows.iter().map(|r| r.eval(z).powi(2)).sum();
            out.push(Residual {
                label: ball.label.clone(),
                violation: (sq - ball.bound).max(0.0),
            });
        }
        for c in &self.linear {
            out.push(Residual {
                label: c.label.clone(),
                violation: (c.expr.eval(z) - c.rhs).max(0.0),
            });
        }
        for c in &self.rotated {
            let rhs = c.rhs.eval(z);
            let gap = c.lhs.eval(z).powi(2) - c.scale * rhs;
            out.push(Residual {
                label: c.label.clone(),
                violation: gap.max(-rhs).max(0.0),
            });
        }
        out
    }

    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.residuals(z).iter().fold(0.0, |acc, r| acc.max(r.violation))
    }

    /// Self-describing text dump: a `program` header, the objective, then one
    /// line per constraint with its type tag, label, bound data and
    /// coefficients over `z = [x; w]`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "program vars x={} w={}", self.num_x, self.num_w);
        let block = match self.objective {
            ObjectiveBlock::Concentrations => "x",
            ObjectiveBlock::MixtureWeights => "w",
        };
        let _ = writeln!(out, "objective l1 {block}");
        let coeffs = |a: &Affine| {
            a.coeffs
                .iter()
                .map(|c| format!("{c}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        if let Some(ball) = &self.ball {
            let _ = writeln!(out, "ball {} bound {} rows {}", ball.label, ball.bound, ball.rows.len());
            for row in &ball.rows {
                let _ = writeln!(out, "  row const {} coeffs {}", row.constant, coeffs(row));
            }
        }
        for c in &self.linear {
            let _ = writeln!(
                out,
                "linear {} rhs {} const {} coeffs {}",
                c.label,
                c.rhs,
                c.expr.constant,
                coeffs(&c.expr)
            );
        }
        for c in &self.rotated {
            let _ = writeln!(
                out,
                "rotated {} scale {} lhs const {} coeffs {} rhs const {} coeffs {}",
                c.label,
                c.scale,
                c.lhs.constant,
                coeffs(&c.lhs),
                c.rhs.constant,
                coeffs(&c.rhs)
            );
        }
        out
    }
}

fn check_inputs(obs: &ArrayObservation, affinity: &AffinityMatrix, cfg: &SystemConfig) -> Result<()> {
    if obs.num_receptors() != affinity.num_receptors() {
        return Err(Error::DimensionMismatch {
            context: "observation vs affinity receptors",
            expected: affinity.num_receptors(),
            actual: obs.num_receptors(),
        });
    }
    if obs.activated.len() + obs.non_activated.len() != obs.num_receptors() {
        return Err(Error::Precondition("activated/non-activated sets do not partition the receptors".into()));
    }
    if !(cfg.noise_mean > 0.0) {
        return Err(Error::OutOfRange {
            name: "lambda",
            reason: "recovery needs a positive noise mean; use a small value such as 1e-3 for near-noiseless studies"
                .into(),
        });
    }
    Ok(())
}

/// The C1 ball bound `|A| * lambda * eps`.
pub fn activated_ball_bound(num_activated: usize, cfg: &SystemConfig) -> f64 {
    num_activated as f64 * cfg.noise_mean * cfg.recon_error_eps
}

/// The C2 right-hand side `sqrt(lambda * eps)`.
pub fn silent_receptor_rhs(cfg: &SystemConfig) -> f64 {
    (cfg.noise_mean * cfg.recon_error_eps).sqrt()
}

fn receptor_constraints(
    obs: &ArrayObservation,
    affinity: &AffinityMatrix,
    cfg: &SystemConfig,
    num_vars: usize,
) -> (Option<BallConstraint>, Vec<LinearConstraint>) {
    let a = affinity.entries();
    let offset = cfg.noise_mean - cfg.activation_threshold;
    let ball = (!obs.activated.is_empty()).then(|| {
        let rows = obs
            .activated
            .iter()
            .map(|&r| {
                let mut e = Affine::zero(num_vars);
                for q in 0..a.ncols() {
                    e.coeffs[q] = -a[(r, q)];
                }
                e.constant = obs.y[r] - offset;
                e
            })
            .collect();
        BallConstraint {
            label: "C1".into(),
            rows,
            bound: activated_ball_bound(obs.activated.len(), cfg),
        }
    });
    let rhs = silent_receptor_rhs(cfg);
    let linear = obs
        .non_activated
        .iter()
        .map(|&r| {
            let mut e = Affine::zero(num_vars);
            for q in 0..a.ncols() {
                e.coeffs[q] = a[(r, q)];
            }
            e.constant = offset;
            LinearConstraint {
                label: format!("C2[r{r}]"),
                expr: e,
                rhs,
            }
        })
        .collect();
    (ball, linear)
}

/// l1 recovery over molecule concentrations:
///
/// ```text
/// min |x|_1  s.t.  |y_A - (A_A x + (lambda - x_thr))|^2 <= |A| lambda eps
///                  A_Ac x + (lambda - x_thr) <= sqrt(lambda eps)
///                  x >= 0
/// ```
pub fn build_op1(obs: &ArrayObservation, affinity: &AffinityMatrix, cfg: &SystemConfig) -> Result<ConicProgram> {
    check_inputs(obs, affinity, cfg)?;
    let q = affinity.num_molecules();
    let (ball, linear) = receptor_constraints(obs, affinity, cfg, q);
    Ok(ConicProgram {
        num_x: q,
        num_w: 0,
        objective: ObjectiveBlock::Concentrations,
        ball,
        linear,
        rotated: Vec::new(),
    })
}

/// Alphabet-aware recovery over mixture weights: the receptor constraints of
/// [`build_op1`] plus, for every molecule type,
/// `(x_q - [M w]_q)^2 <= delta [M w]_q`, minimizing `|w|_1`.
pub fn build_op2(
    obs: &ArrayObservation,
    affinity: &AffinityMatrix,
    mixtures: &MixtureMatrix,
    cfg: &SystemConfig,
) -> Result<ConicProgram> {
    check_inputs(obs, affinity, cfg)?;
    let q = affinity.num_molecules();
    if mixtures.num_molecules() != q {
        return Err(Error::DimensionMismatch {
            context: "mixture vs affinity molecule types",
            expected: q,
            actual: mixtures.num_molecules(),
        });
    }
    let m = mixtures.num_mixtures();
    let n = q + m;
    let (ball, linear) = receptor_constraints(obs, affinity, cfg, n);
    let mm = mixtures.entries();
    let rotated = (0..q)
        .map(|qi| {
            let mut mean = Affine::zero(n);
            for mi in 0..m {
                mean.coeffs[q + mi] = mm[(qi, mi)];
            }
            let mut dev = Affine::zero(n);
            dev.coeffs[qi] = 1.0;
            for mi in 0..m {
                dev.coeffs[q + mi] = -mm[(qi, mi)];
            }
            RotatedConstraint {
                label: format!("C3[q{qi}]"),
                lhs: dev,
                scale: cfg.deviation_delta,
                rhs: mean,
            }
        })
        .collect();
    Ok(ConicProgram {
        num_x: q,
        num_w: m,
        objective: ObjectiveBlock::MixtureWeights,
        ball,
        linear,
        rotated,
    })
}
