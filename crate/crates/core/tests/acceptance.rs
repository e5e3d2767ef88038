//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use mixsense::affinity::{construct_affinity, reference_affinity_fixture, AffinityParams, DEFAULT_MAX_ATTEMPTS};
use mixsense::channel::simulate_snapshot;
use mixsense::harness::{
    format_csv, sweep, AffinitySource, AlphabetSource, SeriesSpec, SweepResult, SweepRow, SweepSpec, SweepVariable,
};
use mixsense::mixture::build_mixture_matrix;
use mixsense::model::{derive_stream, SystemConfig};
use mixsense::poisson::sample_poisson;
use mixsense::recovery::{recover_op2, SolveStatus};
use nalgebra::DMatrix;
use rand::Rng;

const SEED: u64 = 1;
const TRIALS: usize = 2000;
/// Grid over which the per-setting optimal error probability is taken.
const OPT_GRID: [f64; 6] = [0.5, 1.0, 2.0, 3.0, 5.0, 10.0];

type Outcome = Result<String, String>;

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn time_limit(start: Instant, limit: Duration) -> Result<(), String> {
    let el = start.elapsed();
    if el > limit {
        Err(format!("took {:.1}s, limit {}s", el.as_secs_f64(), limit.as_secs()))
    } else {
        Ok(())
    }
}

fn coherence(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot.abs() / (na * nb)
}

fn column_bounds_hold(a: &DMatrix<f64>) -> Result<(), String> {
    for (q, col) in a.column_iter().enumerate() {
        let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        if max != 1.0 {
            return Err(format!("column {q} max {max}"));
        }
        if min < -0.3 {
            return Err(format!("column {q} min {min}"));
        }
    }
    Ok(())
}

fn affinity_invariants() -> Outcome {
    let start = Instant::now();
    let params = AffinityParams {
        r_act: 5,
        a_inh: 0.3,
        mu_thr: 0.5,
    };
    let mut worst_mu = 0.0f64;
    for i in 0..1000u64 {
        let mut rng = derive_stream(SEED, i).rng();
        let a = construct_affinity(10, 20, params, &mut rng, DEFAULT_MAX_ATTEMPTS).map_err(|e| format!("matrix {i}: {e}"))?;
        let e = a.entries();
        column_bounds_hold(e).map_err(|m| format!("matrix {i}: {m}"))?;
        let cols: Vec<Vec<f64>> = e.column_iter().map(|c| c.iter().copied().collect()).collect();
        for (q, c) in cols.iter().enumerate() {
            let nnz = c.iter().filter(|v| **v != 0.0).count();
            if nnz != 5 {
                return Err(format!("matrix {i} column {q} has {nnz} nonzeros"));
            }
            for d in &cols[..q] {
                worst_mu = worst_mu.max(coherence(c, d));
            }
        }
        if worst_mu > 0.5 {
            return Err(format!("matrix {i}: coherence {worst_mu}"));
        }
    }
    time_limit(start, Duration::from_secs(60))?;
    Ok(format!(
        "1000 matrices, max coherence {worst_mu:.4}, {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

/// The printed matrix, read from the LaTeX source: the array following
/// `\left[`, one `&`-separated row per line.
fn printed_fixture() -> Result<DMatrix<f64>, String> {
    let path = repo_root().join("paper.md");
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    let after = text.split("\\left[").nth(1).ok_or("no bracketed matrix")?;
    let body = after.split("\\end{array}").next().ok_or("unterminated matrix")?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in body.lines().filter(|l| l.contains('&')) {
        let row: Result<Vec<f64>, _> = line
            .trim()
            .trim_end_matches("\\\\")
            .split('&')
            .map(|c| c.trim().parse::<f64>())
            .collect();
        rows.push(row.map_err(|e| format!("bad entry in `{}`: {e}", line.trim()))?);
    }
    let ncols = rows.first().map(|r| r.len()).ok_or("empty matrix")?;
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix".into());
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn fixture_integrity() -> Outcome {
    let printed = printed_fixture()?;
    let shipped = reference_affinity_fixture();
    let e = shipped.entries();
    if printed.shape() != e.shape() {
        return Err(format!("shape {:?} vs printed {:?}", e.shape(), printed.shape()));
    }
    if let Some((i, j)) = (0..e.nrows())
        .flat_map(|i| (0..e.ncols()).map(move |j| (i, j)))
        .find(|&(i, j)| e[(i, j)] != printed[(i, j)])
    {
        return Err(format!("entry ({i},{j}): {} vs printed {}", e[(i, j)], printed[(i, j)]));
    }
    column_bounds_hold(e)?;
    Ok("10x20 entries identical to the printed matrix, column max 1, min >= -0.3".into())
}

fn poisson_moments() -> Outcome {
    let start = Instant::now();
    const N: usize = 100_000;
    let mut details = Vec::new();
    for (k, &mean) in [0.5, 5.0, 50.0, 500.0].iter().enumerate() {
        let mut rng = derive_stream(SEED, 1000 + k as u64).rng();
        let draws: Vec<f64> = (0..N).map(|_| sample_poisson(mean, &mut rng) as f64).collect();
        let m = draws.iter().sum::<f64>() / N as f64;
        let var = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (N - 1) as f64;
        // Var of the sample variance: (mu4 - sigma^4 (N-3)/(N-1)) / N with
        // mu4 = lambda (1 + 3 lambda) for the Poisson law.
        let sd_mean = (mean / N as f64).sqrt();
        let mu4 = mean * (1.0 + 3.0 * mean);
        let sd_var = ((mu4 - mean * mean * (N as f64 - 3.0) / (N as f64 - 1.0)) / N as f64).sqrt();
        let zm = (m - mean) / sd_mean;
        let zv = (var - mean) / sd_var;
        if zm.abs() > 4.0 || zv.abs() > 4.0 {
            return Err(format!("mean {mean}: sample mean z={zm:.2}, variance z={zv:.2}"));
        }
        details.push(format!("{mean}: z_mean {zm:+.2} z_var {zv:+.2}"));
    }
    time_limit(start, Duration::from_secs(10))?;
    Ok(details.join(", "))
}

fn solver_soundness() -> Outcome {
    let start = Instant::now();
    let a = reference_affinity_fixture();
    let m = build_mixture_matrix(20, 16, 3, &mut derive_stream(SEED, u64::MAX).rng()).map_err(|e| e.to_string())?;
    let base = SystemConfig {
        master_seed: SEED,
        ..SystemConfig::default()
    };
    let (mut optimal, mut inaccurate, mut infeasible, mut other) = (0, 0, 0, 0);
    let mut worst = 0.0f64;
    for t in 0..200u64 {
        let mut rng = derive_stream(SEED, 5000 + t).rng();
        let eps = 10f64.powf(rng.random_range(0.5f64.log10()..=1.0));
        let cfg = base.clone().with_eps_delta(eps);
        let idx = rng.random_range(0..16);
        let obs = simulate_snapshot(&cfg, &a, &m, idx, &mut rng).map_err(|e| e.to_string())?;
        let sol = recover_op2(&obs, &a, &m, &cfg).map_err(|e| e.to_string())?;
        match sol.status {
            SolveStatus::Optimal => {
                optimal += 1;
                let w = sol.w_hat.as_ref().ok_or("optimal solve without weights")?;
                let v = common::op2_violation(&obs, &a, &m, &cfg, &sol.x_hat, w);
                worst = worst.max(v);
                if v > 1e-6 {
                    return Err(format!("instance {t}: optimal solution violates constraints by {v:e}"));
                }
            }
            SolveStatus::Inaccurate => inaccurate += 1,
            SolveStatus::Infeasible => infeasible += 1,
            SolveStatus::MaxIterations => other += 1,
        }
    }
    if optimal < 100 {
        return Err(format!("only {optimal}/200 solves optimal"));
    }
    let mut worst_gap = 0.0f64;
    for seed in 0..50u64 {
        let inst = common::tiny_instance(10_000 + seed);
        let sol = recover_op2(&inst.obs, &inst.affinity, &inst.mixtures, &inst.cfg).map_err(|e| e.to_string())?;
        let w = match (sol.status, &sol.w_hat) {
            (SolveStatus::Optimal | SolveStatus::Inaccurate, Some(w)) => w,
            _ => return Err(format!("tiny instance {seed}: status {}", sol.status.as_str())),
        };
        let got: f64 = w.iter().sum();
        let lattice = inst.lattice_minimum();
        worst_gap = worst_gap.max((got - lattice).abs());
        if (got - lattice).abs() > 1e-2 {
            return Err(format!("tiny instance {seed}: solver {got:.5} vs lattice {lattice:.5}"));
        }
    }
    time_limit(start, Duration::from_secs(300))?;
    Ok(format!(
        "200 instances: {optimal} optimal (worst violation {worst:.1e}), {inaccurate} inaccurate, {infeasible} infeasible, {other} stalled; 50 tiny: worst lattice gap {worst_gap:.2e}; {:.1}s",
        start.elapsed().as_secs_f64()
    ))
}

fn base_spec(values: Vec<f64>, series: &[&str], trials: usize) -> SweepSpec {
    SweepSpec {
        variable: SweepVariable::EpsDelta,
        values,
        trials_per_point: trials,
        base_config: SystemConfig {
            master_seed: SEED,
            ..SystemConfig::default()
        },
        alphabet_source: AlphabetSource::Generated { n_mix: 3, seed: SEED },
        affinity_source: AffinitySource::Fixture,
        series: series.iter().map(|s| SeriesSpec::parse(s).unwrap()).collect(),
        timing: false,
    }
}

fn fmt_row(r: &SweepRow) -> String {
    format!("{}:{:.4}+-{:.4}", r.value, r.p_e, r.ci_halfwidth)
}

fn u_shape() -> Outcome {
    let start = Instant::now();
    let r = sweep(&base_spec(vec![0.01, 0.1, 1.0, 10.0], &["base"], TRIALS)).map_err(|e| e.to_string())?;
    let rows = &r.series[0].rows;
    let (lo, hi) = (&rows[0], &rows[rows.len() - 1]);
    let best = rows[1..rows.len() - 1]
        .iter()
        .find(|p| p.p_e + p.ci_halfwidth + lo.ci_halfwidth < lo.p_e && p.p_e + p.ci_halfwidth + hi.ci_halfwidth < hi.p_e);
    let listing = rows.iter().map(fmt_row).collect::<Vec<_>>().join(" ");
    time_limit(start, Duration::from_secs(1800))?;
    match best {
        Some(p) => Ok(format!("interior minimum at eps=delta={}; {listing}", p.value)),
        None => Err(format!("no interior point separated from both endpoints; {listing}")),
    }
}

fn optimum(r: &SweepResult, label: &str) -> SweepRow {
    let s = r.series.iter().find(|s| s.label == label).unwrap();
    s.rows
        .iter()
        .min_by(|a, b| a.p_e.partial_cmp(&b.p_e).unwrap())
        .unwrap()
        .clone()
}

/// `a` is no larger than `b` up to twice the larger of the two half-widths.
fn no_larger(a: &SweepRow, b: &SweepRow) -> bool {
    a.p_e <= b.p_e + 2.0 * a.ci_halfwidth.max(b.ci_halfwidth)
}

fn alphabet_ordering(r: &SweepResult) -> Outcome {
    let opt: Vec<SweepRow> = ["alphabet_size=8", "alphabet_size=16", "alphabet_size=24"]
        .iter()
        .map(|l| optimum(r, l))
        .collect();
    let ok = no_larger(&opt[0], &opt[1]) && no_larger(&opt[1], &opt[2]);
    check(
        ok,
        format!(
            "optimal P_e |M|=8 {} |M|=16 {} |M|=24 {} (as eps:P_e+-ci)",
            fmt_row(&opt[0]),
            fmt_row(&opt[1]),
            fmt_row(&opt[2])
        ),
    )
}

fn parameter_trends(r: &SweepResult) -> Outcome {
    let base = optimum(r, "alphabet_size=16");
    let mut ok = true;
    let mut parts = vec![format!("base {}", fmt_row(&base))];
    for label in ["N_rls=10000", "lambda=5", "x_thr=2"] {
        let o = optimum(r, label);
        let within = no_larger(&o, &base);
        let strict = o.p_e + o.ci_halfwidth + base.ci_halfwidth < base.p_e;
        ok &= within;
        parts.push(format!(
            "{label} {} ({})",
            fmt_row(&o),
            if strict {
                "significantly lower"
            } else if o.p_e < base.p_e {
                "lower, not significant"
            } else {
                "not lower"
            }
        ));
    }
    check(ok, parts.join("; "))
}

fn high_snr() -> Outcome {
    let mut spec = base_spec(vec![3.0], &["base"], 500);
    spec.base_config.noise_mean = 1.0;
    spec.base_config.activation_threshold = 0.0;
    spec.base_config.molecules_per_release = 50_000;
    let r = sweep(&spec).map_err(|e| e.to_string())?;
    let row = &r.series[0].rows[0];
    let acc = 1.0 - row.p_e;
    check(acc >= 0.95, format!("accuracy {:.3} at eps=delta=3 over 500 trials", acc))
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let path = repo_root().join("configs/fig3.cfg");
    let run = || -> Result<String, String> {
        let spec = SweepSpec::load(&path).map_err(|e| e.to_string())?;
        Ok(format_csv(&sweep(&spec).map_err(|e| e.to_string())?))
    };
    let (a, b) = (run()?, run()?);
    check(
        a == b,
        format!(
            "{} CSV lines, {} bytes, identical={}; {:.1}s",
            a.lines().count(),
            a.len(),
            a == b,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags such as `--quiet`; none apply here.
    let mut failed = 0;
    let mut report = |n: usize, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n} {tag}: {name}: {detail}");
    };
    report(1, "affinity invariants", affinity_invariants());
    report(2, "fixture integrity", fixture_integrity());
    report(3, "Poisson sampler moments", poisson_moments());
    report(4, "solver soundness", solver_soundness());
    report(5, "U-shape in eps=delta", u_shape());
    let series = [
        "alphabet_size=8",
        "alphabet_size=16",
        "alphabet_size=24",
        "N_rls=10000",
        "lambda=5",
        "x_thr=2",
    ];
    match sweep(&base_spec(OPT_GRID.to_vec(), &series, TRIALS)) {
        Ok(r) => {
            report(6, "alphabet-size ordering", alphabet_ordering(&r));
            report(7, "parameter trends", parameter_trends(&r));
        }
        Err(e) => {
            report(6, "alphabet-size ordering", Err(e.to_string()));
            report(7, "parameter trends", Err(e.to_string()));
        }
    }
    report(8, "high-SNR accuracy", high_snr());
    report(9, "sweep determinism", determinism());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
