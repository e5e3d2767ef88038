//! Interior-point solve of a [`ConicProgram`], backed by Clarabel.
//!
//! Clarabel's own termination is only trusted as far as we can re-check it:
//! a result is reported `Optimal` only if direct substitution into every
//! constraint stays within `tol_feas` and the primal-dual objective gap is
//! within `tol_gap` relative to `1 + |objective|`.
//!
//! The interior-point iterate is only accurate to a relative residual, which
//! in squared constraint form can exceed `tol_feas` in absolute terms. The
//! solver is therefore handed a copy of the program with every constraint
//! tightened by `margin`, and the answer is checked against the original.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};

use super::program::{ConicProgram, Residual};
use crate::error::{Error, Result};

/// Termination and regularization tolerance passed to the interior-point
/// method; its residuals are relative to the data scale.
const INNER_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveSettings {
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: u32,
    /// Relative tightening applied to every constraint before solving.
    pub margin: f64,
    /// Largest violation for which an uncertified iterate is still returned
    /// as [`SolveStatus::Inaccurate`] rather than discarded.
    pub tol_accept: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            tol_feas: 1e-6,
            tol_gap: 1e-6,
            max_iter: 100_000,
            margin: 1e-5,
            tol_accept: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    /// Certified feasible and optimal within tolerance.
    Optimal,
    /// Primal infeasibility certificate found.
    Infeasible,
    /// Stopped without a usable answer: iteration budget exhausted, or a
    /// stall far from feasibility. The last iterate is attached.
    MaxIterations,
    /// Converged to reduced accuracy: the iterate misses `tol_feas` or
    /// `tol_gap` but violates no constraint by more than `tol_accept`.
    Inaccurate,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::MaxIterations => "max_iterations",
            SolveStatus::Inaccurate => "inaccurate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverySolution {
    pub x_hat: Vec<f64>,
    /// Absent for programs without a mixture-weight block.
    pub w_hat: Option<Vec<f64>>,
    pub objective_value: f64,
    pub status: SolveStatus,
    pub residuals: Vec<Residual>,
    pub iterations: u32,
}

impl RecoverySolution {
    pub fn max_violation(&self) -> f64 {
        self.residuals.iter().fold(0.0, |acc, r| acc.max(r.violation))
    }
}

/// Assembled `A z + s = b, s in K` data.
struct ConeData {
    rows: Vec<Vec<f64>>,
    b: Vec<f64>,
    cones: Vec<SupportedConeT<f64>>,
}

fn assemble(p: &ConicProgram, margin: f64) -> ConeData {
    let n = p.num_vars();
    let mut rows = Vec::new();
    let mut b = Vec::new();

    // Nonnegative orthant: z >= 0, then the affine inequalities.
    for j in 0..n {
        let mut row = vec![0.0; n];
        row[j] = -1.0;
        rows.push(row);
        b.push(0.0);
    }
    for c in &p.linear {
        rows.push(c.expr.coeffs.clone());
        b.push(c.rhs - c.expr.constant - margin * (1.0 + c.rhs.abs()));
    }
    let mut cones = vec![SupportedConeT::NonnegativeConeT(n + p.linear.len())];

    // Ball: (sqrt(bound), r_1(z), ..., r_k(z)) in SOC.
    if let Some(ball) = &p.ball {
        rows.push(vec![0.0; n]);
        b.push((ball.bound * (1.0 - margin) - margin).max(0.0).sqrt());
        for r in &ball.rows {
            rows.push(r.coeffs.iter().map(|c| -c).collect());
            b.push(r.constant);
        }
        cones.push(SupportedConeT::SecondOrderConeT(ball.rows.len() + 1));
    }

    // l^2 <= scale * t  <=>  |(2 l, scale t - 1)| <= scale t + 1. Only the
    // scale is tightened, so t = 0 still forces l = 0 exactly.
    for c in &p.rotated {
        let scale = c.scale * (1.0 - margin);
        let t_row: Vec<f64> = c.rhs.coeffs.iter().map(|v| -scale * v).collect();
        rows.push(t_row.clone());
        b.push(scale * c.rhs.constant + 1.0);
        rows.push(c.lhs.coeffs.iter().map(|v| -2.0 * v).collect());
        b.push(2.0 * c.lhs.constant);
        rows.push(t_row);
        b.push(scale * c.rhs.constant - 1.0);
        cones.push(SupportedConeT::SecondOrderConeT(3));
    }
    ConeData { rows, b, cones }
}

fn split(p: &ConicProgram, z: &[f64]) -> (Vec<f64>, Option<Vec<f64>>) {
    let x = z[..p.num_x].to_vec();
    let w = (p.num_w > 0).then(|| z[p.num_x..].to_vec());
    (x, w)
}

fn finish(p: &ConicProgram, z: Vec<f64>, status: SolveStatus, iterations: u32) -> RecoverySolution {
    let residuals = p.residuals(&z);
    let objective_value = p.objective_value(&z);
    let (x_hat, w_hat) = split(p, &z);
    RecoverySolution {
        x_hat,
        w_hat,
        objective_value,
        status,
        residuals,
        iterations,
    }
}

pub fn solve(program: &ConicProgram, settings: &SolveSettings) -> Result<RecoverySolution> {
    if !(settings.tol_feas > 0.0 && settings.tol_gap > 0.0 && (0.0..1.0).contains(&settings.margin)) {
        return Err(Error::Precondition("solver tolerances must be positive and margin in [0, 1)".into()));
    }
    let n = program.num_vars();
    if let Some(ball) = &program.ball {
        if ball.bound < 0.0 {
            // Empty ball: infeasible without running the solver.
            return Ok(finish(program, vec![0.0; n], SolveStatus::Infeasible, 0));
        }
    }

    let data = assemble(program, settings.margin);
    let a = CscMatrix::from(data.rows.iter());
    let p_mat = CscMatrix::<f64>::zeros((n, n));
    let q = program.objective_coeffs();
    let clarabel_settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(settings.max_iter)
        .tol_feas(INNER_TOL)
        .tol_gap_abs(INNER_TOL)
        .tol_gap_rel(INNER_TOL)
        .static_regularization_constant(INNER_TOL)
        .build()
        .map_err(|e| Error::Solver(format!("{e:?}")))?;
    let mut solver = DefaultSolver::new(&p_mat, &q, &a, &data.b, &data.cones, clarabel_settings)
        .map_err(|e| Error::Solver(e.to_string()))?;
    solver.solve();
    let sol = &solver.solution;
    let iterations = sol.iterations;

    match sol.status {
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
            return Ok(finish(program, vec![0.0; n], SolveStatus::Infeasible, iterations));
        }
        SolverStatus::MaxIterations | SolverStatus::MaxTime => {
            return Ok(finish(program, sol.x.clone(), SolveStatus::MaxIterations, iterations));
        }
        _ => {}
    }

    // Interior iterates may sit a hair below zero on the orthant.
    let z: Vec<f64> = sol.x.iter().map(|v| v.max(0.0)).collect();
    let mut out = finish(program, z, SolveStatus::Optimal, iterations);
    let gap = (sol.obj_val - sol.obj_val_dual).abs() / (1.0 + out.objective_value.abs());
    let certified = sol.status == SolverStatus::Solved || sol.status == SolverStatus::AlmostSolved;
    let violation = out.max_violation();
    if !(certified && violation <= settings.tol_feas && gap <= settings.tol_gap) {
        let usable = out.objective_value.is_finite() && violation <= settings.tol_accept;
        out.status = if usable {
            SolveStatus::Inaccurate
        } else {
            SolveStatus::MaxIterations
        };
    }
    Ok(out)
}
