//! `ogplab` — command-line harness for the planted-submatrix laboratory.
//!
//! Every subcommand takes flags or `--config file.json` (a bare config block
//! or a previously written manifest; the file overrides the flags entirely),
//! writes its outputs plus a `<command>_manifest.json` into the output
//! directory (`--out`, else `$OGPLAB_OUT`, else the working directory), and
//! is reproducible from its manifest.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical non-convergence.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use config::*;
use ogplab::mcmc::InitMode;
use ogplab::parisi::SolverConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ogplab", version, about = "Planted principal-submatrix laboratory")]
struct Cli {
    /// Output directory (default: $OGPLAB_OUT, else current directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// JSON config (bare config block or a run manifest); overrides flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SolverArgs {
    /// Time intervals K for the discretized measure.
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long, default_value_t = 41)]
    gh_nodes: usize,
    #[arg(long, default_value_t = 0.01)]
    grid_dx: f64,
    #[arg(long, default_value_t = 8.0)]
    l_factor: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
}

impl SolverArgs {
    fn build(&self) -> SolverConfig {
        SolverConfig {
            k_intervals: self.k,
            gh_nodes: self.gh_nodes,
            grid_dx: self.grid_dx,
            l_factor: self.l_factor,
            tol: self.tol,
            max_iter: self.max_iter,
            ..SolverConfig::default()
        }
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != 2 {
        return Err(format!("expected `a,b`, got `{s}`"));
    }
    Ok((v[0], v[1]))
}

/// A flag that becomes mandatory only when no `--config` file supplies it.
fn req<T>(v: Option<T>, name: &str) -> ogplab::Result<T> {
    v.ok_or_else(|| {
        ogplab::Error::InvalidParameter(format!("--{name} is required (or use --config)"))
    })
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted instance and write it to instance.json.
    Generate {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Plant on a uniformly random support instead of the leading block.
        #[arg(long)]
        shuffle_support: bool,
    },
    /// Exhaustive small-N profile: constrained maxima, free energy, rate function.
    Oracle {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        beta: Option<f64>,
        /// Rate-function window half-width (default 1/(2N)).
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Solve the variational problem at one (rho, q, lambda).
    Parisi {
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Finite-temperature solve at this β (zero temperature if omitted).
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 2)]
        multistart: usize,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Constrained-energy curve over a q grid, with gap verdicts.
    Landscape {
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        /// Comma-separated q grid (default: standard mesh).
        #[arg(long, value_delimiter = ',')]
        q_grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = 1)]
        multistart: usize,
        /// Comma-separated ε ladder for the detector.
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Sweep the (rho, lambda) plane for gap verdicts and threshold lines.
    OgpScan {
        /// Comma-separated sparsities.
        #[arg(long, value_delimiter = ',')]
        rho: Option<Vec<f64>>,
        /// Multipliers c: λ = c·√((1/ρ)log(1/ρ)).
        #[arg(long, value_delimiter = ',')]
        c1: Option<Vec<f64>>,
        /// Explicit λ values (alternative to --c1).
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Run instrumented Metropolis chains.
    Mcmc {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        steps: Option<u64>,
        #[arg(long, default_value_t = 0)]
        burn_in: u64,
        #[arg(long, default_value_t = 1)]
        stride: u64,
        /// uniform | planted (conditioned via --conditioned).
        #[arg(long, default_value = "uniform")]
        init: String,
        /// Conditioned initialization inside this overlap interval `a,b`.
        #[arg(long, value_parser = parse_pair)]
        conditioned: Option<(f64, f64)>,
        /// Arm the exit clock on this overlap interval `a,b`.
        #[arg(long, value_parser = parse_pair)]
        interval: Option<(f64, f64)>,
        /// Stop each replica at its exit time.
        #[arg(long)]
        stop_on_exit: bool,
        #[arg(long, default_value_t = 1)]
        replicas: u64,
        /// Write per-replica binary overlap/energy series.
        #[arg(long)]
        trajectories: bool,
    },
    /// Run a recovery estimator over a batch of seeds.
    Estimate {
        #[arg(long, value_enum)]
        estimator: Option<EstimatorKind>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed0: u64,
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Spectral rounding threshold δ.
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
    },
    /// Emit the reference threshold lines for a list of sparsities.
    Thresholds {
        #[arg(long, value_delimiter = ',')]
        rho: Option<Vec<f64>>,
    },
}

fn run(cli: Cli) -> ogplab::Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| ogplab::Error::InvalidParameter(format!("thread pool: {e}")))?;
    }
    let outdir = resolve_outdir(cli.out);
    let cfg_path = cli.config.as_deref();

    match &cli.command {
        Command::Generate { n, rho, lambda, seed, shuffle_support } => {
            let cfg = match cfg_path {
                Some(p) => load_config(p, "generate")?,
                None => GenerateConfig {
                    n: req(*n, "n")?,
                    rho: req(*rho, "rho")?,
                    lambda: req(*lambda, "lambda")?,
                    seed: *seed,
                    shuffle_support: *shuffle_support,
                },
            };
            commands::cmd_generate(&cfg, &outdir)
        }
        Command::Oracle { n, rho, lambda, seed, beta, epsilon } => {
            let cfg = match cfg_path {
                Some(p) => load_config(p, "oracle")?,
                None => OracleConfig {
                    n: req(*n, "n")?,
                    rho: req(*rho, "rho")?,
                    lambda: req(*lambda, "lambda")?,
                    seed: *seed,
                    beta: req(*beta, "beta")?,
                    epsilon: *epsilon,
                    budget: ogplab::oracle::DEFAULT_ENUM_BUDGET,
                },
            };
            commands::cmd_oracle(&cfg, &outdir)
        }
        Command::Parisi { rho, q, lambda, beta, multistart, solver } => {
            let cfg = match cfg_path {
                Some(p) => load_config(p, "parisi")?,
                None => ParisiConfig {
                    rho: req(*rho, "rho")?,
                    q: req(*q, "q")?,
                    lambda: req(*lambda, "lambda")?,
                    beta: *beta,
                    solver: solver.build(),
                    multistart: *multistart,
                },
            };
            commands::cmd_parisi(&cfg, &outdir)
        }
        Command::Landscape { rho, lambda, q_grid, multistart, epsilons, solver } => {
            let cfg = match cfg_path {
                Some(p) => load_config(p, "landscape")?,
                None => LandscapeConfig {
                    rho: req(*rho, "rho")?,
                    lambda: req(*lambda, "lambda")?,
                    q_grid: q_grid.clone(),
                    solver: solver.build(),
                    multistart: *multistart,
                    epsilons: epsilons.clone(),
                },
            };
            commands::cmd_landscape(&cfg, &outdir)
        }
        Command::OgpScan { rho, c1, lambda, solver } => {
            let cfg = match cfg_path {
                Some(p) => load_config(p, "ogp-scan")?,
                None => OgpScanConfig {
                    rhos: req(rho.clone(), "rho")?,
                    multipliers: c1.clone(),
                    lambdas: lambda.clone(),
                    solver: solver.build(),
                },
            };
            commands::cmd_ogp_scan(&cfg, &outdir)
        }
        Command::Mcmc {
            n,
            rho,
            lambda,
            seed,
            beta,
            steps,
            burn_in,
            stride,
            init,
            conditioned,
            interval,
            stop_on_exit,
            replicas,
            trajectories,
        } => {
            let cfg = match cfg_path {
                Some(p) => load_config(p, "mcmc")?,
                None => {
                    let init_mode = match (init.as_str(), conditioned) {
                        (_, Some((lo, hi))) => InitMode::Conditioned { lo: *lo, hi: *hi },
                        ("uniform", None) => InitMode::Uniform,
                        ("planted", None) => InitMode::Planted,
                        (other, None) => {
                            return Err(ogplab::Error::InvalidParameter(format!(
                                "unknown init mode `{other}`"
                            )))
                        }
                    };
                    McmcCliConfig {
                        n: req(*n, "n")?,
                        rho: req(*rho, "rho")?,
                        lambda: req(*lambda, "lambda")?,
                        seed: *seed,
                        beta: req(*beta, "beta")?,
                        steps: req(*steps, "steps")?,
                        burn_in: *burn_in,
                        record_stride: *stride,
                        init: init_mode,
                        exit_interval: *interval,
                        stop_on_exit: *stop_on_exit,
                        replicas: *replicas,
                        write_trajectories: *trajectories,
                    }
                }
            };
            commands::cmd_mcmc(&cfg, &outdir)
        }
        Command::Estimate { estimator, n, rho, lambda, seed0, seeds, delta } => {
            let cfg = match cfg_path {
                Some(p) => load_config(p, "estimate")?,
                None => EstimateConfig {
                    estimator: req(*estimator, "estimator")?,
                    n: req(*n, "n")?,
                    rho: req(*rho, "rho")?,
                    lambda: req(*lambda, "lambda")?,
                    seed0: *seed0,
                    seeds: *seeds,
                    delta: *delta,
                    budget: ogplab::oracle::DEFAULT_ENUM_BUDGET,
                },
            };
            commands::cmd_estimate(&cfg, &outdir)
        }
        Command::Thresholds { rho } => {
            let cfg = match cfg_path {
                Some(p) => load_config(p, "thresholds")?,
                None => ThresholdsConfig { rhos: req(rho.clone(), "rho")? },
            };
            commands::cmd_thresholds(&cfg, &outdir)
        }
    }
}

fn exit_code_for(err: &ogplab::Error) -> u8 {
    use ogplab::Error::*;
    match err {
        InvalidParameter(_) | DegeneratePlanting { .. } | DimensionMismatch { .. }
        | InvalidSwap { .. } | EmptyInterval { .. } | Decode(_) | Json(_) => 2,
        NonConverged(_) | TruncationLeak { .. } | BudgetExceeded { .. } => 3,
        Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
