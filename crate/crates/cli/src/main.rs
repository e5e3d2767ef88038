//! `mixsense` command-line tool.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::Rng;

use mixsense::affinity::{construct_affinity, reference_affinity_fixture, AffinityParams, DEFAULT_MAX_ATTEMPTS};
use mixsense::channel::{simulate_snapshot_traced, trace_header, trace_line};
use mixsense::detection::peak_detect;
use mixsense::harness::{
    alphabet_for, emit_csv, emit_plot, format_csv, load_affinity, sweep, AffinitySource, AlphabetSource, SweepSpec,
    SWEEP_KEYS,
};
use mixsense::model::{derive_stream, ConfigFile, SystemConfig, MODEL_KEYS};
use mixsense::recovery::recover_op2;
use mixsense::{Error, Result};

#[derive(Parser)]
#[command(name = "mixsense", version, about = "Molecular mixture communication simulator")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(ConfigFile, PathBuf)> {
        let (mut file, dir) = match &self.config {
            Some(p) => (ConfigFile::load(p)?, p.parent().unwrap_or(Path::new(".")).to_path_buf()),
            None => (ConfigFile::default(), PathBuf::from(".")),
        };
        let allowed: Vec<&str> = MODEL_KEYS.iter().chain(SWEEP_KEYS).copied().collect();
        file.check_keys(&allowed)?;
        if let Some(seed) = self.seed {
            file.set("seed", seed.to_string());
        }
        Ok((file, dir))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random affinity matrix with bounded column coherence.
    ConstructAffinity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Nonzero entries per column.
        #[arg(long, default_value_t = 5)]
        r_act: usize,
        /// Largest inhibition magnitude.
        #[arg(long, default_value_t = 0.3)]
        a_inh: f64,
        /// Coherence threshold.
        #[arg(long, default_value_t = 0.5)]
        mu_thr: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ATTEMPTS)]
        max_attempts: usize,
    },
    /// Generate a mixture alphabet (Q x M from the config).
    GenAlphabet {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        /// Molecule types per mixture (overrides `n_mix` in the config).
        #[arg(long)]
        n_mix: Option<usize>,
    },
    /// Simulate one transmission and print the array signal and recovery.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Transmitted mixture index (default: drawn from the seed).
        #[arg(long)]
        mixture: Option<usize>,
        /// Also write the released and received counts as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a parameter sweep and write CSV (stdout when no --out).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG plot.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Trials per point, overriding the config.
        #[arg(long)]
        trials: Option<usize>,
        /// Record mean solver time per point (makes output run-dependent).
        #[arg(long)]
        timing: bool,
    },
    /// Write the shipped reference affinity matrix.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
}

fn sweep_spec(file: &ConfigFile, dir: &Path) -> Result<SweepSpec> {
    SweepSpec::from_config(file, dir)
}

/// Affinity and alphabet sources from a config without requiring the sweep keys.
fn sources(file: &ConfigFile, dir: &Path, cfg: &SystemConfig) -> Result<(AffinitySource, AlphabetSource)> {
    let mut probe = file.clone();
    probe.set("sweep", "eps_delta");
    probe.set("values", cfg.recon_error_eps.to_string());
    probe.set("trials", "100");
    probe.set("series", "base");
    let spec = sweep_spec(&probe, dir)?;
    Ok((spec.affinity_source, spec.alphabet_source))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ConstructAffinity {
            common,
            out,
            r_act,
            a_inh,
            mu_thr,
            max_attempts,
        } => {
            let (file, _) = common.load()?;
            let cfg = SystemConfig::from_config(&file)?;
            let params = AffinityParams { r_act, a_inh, mu_thr };
            let mut rng = derive_stream(cfg.master_seed, 0).rng();
            let a = construct_affinity(cfg.num_receptors, cfg.num_molecules, params, &mut rng, max_attempts)?;
            a.save(&out)?;
            println!("wrote {}x{} affinity matrix to {}", a.num_receptors(), a.num_molecules(), out.display());
        }
        Command::GenAlphabet { common, out, n_mix } => {
            let (mut file, dir) = common.load()?;
            if let Some(n) = n_mix {
                file.set("n_mix", n.to_string());
            }
            let cfg = SystemConfig::from_config(&file)?;
            let (_, source) = sources(&file, &dir, &cfg)?;
            let m = match source {
                AlphabetSource::Generated { .. } => alphabet_for(&source, &cfg)?,
                AlphabetSource::File(_) => {
                    return Err(Error::Precondition("gen-alphabet needs a generated alphabet, not `alphabet = <file>`".into()))
                }
            };
            m.save(&out)?;
            println!("wrote {}x{} alphabet to {}", m.num_molecules(), m.num_mixtures(), out.display());
        }
        Command::Simulate { common, mixture, trace } => {
            let (file, dir) = common.load()?;
            let mut cfg = SystemConfig::from_config(&file)?;
            let (aff_src, alpha_src) = sources(&file, &dir, &cfg)?;
            let a = load_affinity(&aff_src)?;
            if let AlphabetSource::File(p) = &alpha_src {
                cfg.num_mixtures = mixsense::mixture::load_mixture_matrix(p)?.num_mixtures();
            }
            let m = alphabet_for(&alpha_src, &cfg)?;
            let mut rng = derive_stream(cfg.master_seed, 0).rng();
            let idx = match mixture {
                Some(i) => i,
                None => rng.random_range(0..m.num_mixtures()),
            };
            let (counts, obs) = simulate_snapshot_traced(&cfg, &a, &m, idx, &mut rng)?;
            if let Some(path) = trace {
                let text = format!("{}\n{}\n", trace_header(cfg.num_molecules, cfg.num_receptors), trace_line(0, &counts, &obs));
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
            }
            let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
            println!("mixture {idx}");
            println!("y {}", join(&obs.y));
            println!(
                "activated {}",
                obs.activated.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ")
            );
            let sol = recover_op2(&obs, &a, &m, &cfg)?;
            println!("status {}", sol.status.as_str());
            println!("objective {}", sol.objective_value);
            println!("max_violation {:e}", sol.max_violation());
            if let Some(w) = &sol.w_hat {
                println!("w_hat {}", join(w));
                let d = peak_detect(w)?.with_ground_truth(idx);
                println!("detected {} correct {}", d.detected_index, d.correct == Some(true));
            }
        }
        Command::Sweep {
            common,
            out,
            plot,
            trials,
            timing,
        } => {
            if common.config.is_none() {
                return Err(Error::Precondition("sweep requires --config".into()));
            }
            let (mut file, dir) = common.load()?;
            if let Some(t) = trials {
                file.set("trials", t.to_string());
            }
            if timing {
                file.set("timing", "true");
            }
            let spec = sweep_spec(&file, &dir)?;
            let result = sweep(&spec)?;
            match &out {
                Some(p) => emit_csv(&result, p)?,
                None => print!("{}", format_csv(&result)),
            }
            if let Some(p) = &plot {
                emit_plot(&result, p)?;
            }
        }
        Command::Fixtures { out } => {
            reference_affinity_fixture().save(&out)?;
            println!("wrote reference affinity matrix to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
