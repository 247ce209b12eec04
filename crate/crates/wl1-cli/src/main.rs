//! Command-line interface for the weighted l1 recovery toolkit.
//!
//! Subcommands map onto the library modules: `bounds` (threshold/constant
//! sweeps), `solve` (one weighted program), `rip` (exact/Monte-Carlo RIC and
//! certification), `sharpness` (counterexample build/demo), `experiment`
//! (recovery studies and certified bound checks) and `figures`.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use wl1::bounds::{FmsyParams, GeometryParams, SweepSpec};
use wl1::harness::{self, ExperimentConfig};
use wl1::model::{
    build_weights, read_matrix_csv, read_vector_csv, write_matrix_csv, IndexSet, NoiseSet,
    ProblemInstance, SparseSignal, WeightVector,
};
use wl1::rip;
use wl1::sharpness::{
    construct_counterexample, demonstrate_failure, verify_ric_bound, Counterexample,
    CounterexampleChecks, CounterexampleParams, FailureNoise,
};
use wl1::solver::{self, SolveStatus, SolverOptions};

#[derive(Parser)]
#[command(name = "wl1", version, about = "Weighted l1 minimization with partial support information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Threshold and stability-constant sweeps over an (omega, alpha) grid.
    Bounds {
        #[command(subcommand)]
        command: BoundsCommand,
    },
    /// Solve one weighted l1 program and write a recovery report.
    Solve(SolveArgs),
    /// Restricted isometry constants and recovery certification.
    Rip {
        #[command(subcommand)]
        command: RipCommand,
    },
    /// Build or demonstrate the sharpness counterexample.
    Sharpness {
        #[command(subcommand)]
        command: SharpnessCommand,
    },
    /// Recovery experiments and certified bound checks.
    Experiment {
        #[command(subcommand)]
        command: ExperimentCommand,
    },
    /// Figure-data CSV emission.
    Figures {
        #[command(subcommand)]
        command: FiguresCommand,
    },
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// Emit a CSV sweep of delta_t_omega, D0, D1 (and optionally the
    /// comparison columns) over an omega grid for each alpha.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    t: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long)]
    delta: f64,
    /// Comma-separated alpha values.
    #[arg(long, value_delimiter = ',')]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 101)]
    omega_steps: usize,
    /// Enable the comparison columns with this sparsity multiple a.
    #[arg(long)]
    fmsy_a: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    delta_ak: f64,
    #[arg(long, default_value_t = 0.1)]
    delta_a1k: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Sensing matrix CSV (row-major, no header).
    #[arg(long)]
    matrix: PathBuf,
    /// Measurement vector CSV (single row or column).
    #[arg(long)]
    y: PathBuf,
    /// Weights JSON: {"n":N,"omega":w,"indices":[...]} (1-based support
    /// estimate) or {"omega":w,"weights":[...]}.
    #[arg(long)]
    weights: PathBuf,
    /// Noise set: l2 or ds.
    #[arg(long)]
    noise: String,
    #[arg(long, default_value_t = 0.0)]
    eps: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    feas_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    opt_tol: f64,
    #[arg(long, default_value_t = 50_000)]
    max_iters: usize,
}

#[derive(Subcommand)]
enum RipCommand {
    /// Exact RIC by full enumeration.
    Exact {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: f64,
        #[arg(long, default_value_t = rip::DEFAULT_ENUM_BUDGET)]
        budget: u64,
    },
    /// Monte Carlo lower bound on the RIC.
    Mc {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: f64,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Certify the recovery condition delta_tk < delta_t_omega.
    Certify {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = rip::DEFAULT_ENUM_BUDGET)]
        budget: u64,
    },
}

#[derive(Subcommand)]
enum SharpnessCommand {
    /// Construct the counterexample and write it (with its matrix CSV).
    Build {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        omega: f64,
        #[arg(long)]
        rho: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        eps: f64,
        /// Ambient dimension override (defaults to the layout floor).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also run the exact-RIC verification (enumeration-heavy).
        #[arg(long, default_value_t = false)]
        verify_ric: bool,
    },
    /// Load a built counterexample and demonstrate recovery failure.
    Demo {
        #[arg(long, name = "in")]
        input: PathBuf,
        /// noiseless or l2-seq
        #[arg(long, default_value = "noiseless")]
        noise: String,
    },
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Per-cell recovery study from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output prefix override (otherwise the config's "out").
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certified error-bound check at exactly enumerable scale.
    BoundCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FiguresCommand {
    /// Write the eight comparison CSVs into a directory.
    Emit {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Accepted weight-file shapes.
#[derive(Deserialize)]
#[serde(untagged)]
enum WeightsDoc {
    Estimate {
        n: usize,
        omega: f64,
        indices: Vec<usize>,
    },
    Dense {
        omega: f64,
        weights: Vec<f64>,
    },
}

fn load_weights(path: &Path) -> Result<WeightVector, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let doc: WeightsDoc = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    match doc {
        WeightsDoc::Estimate { n, omega, indices } => {
            let t = IndexSet::from_one_based(&indices, n).map_err(|e| e.to_string())?;
            build_weights(&t, omega, n).map_err(|e| e.to_string())
        }
        WeightsDoc::Dense { omega, weights } => {
            // Dense form: indices are wherever the weight equals omega.
            let n = weights.len();
            let t: Vec<usize> = weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w == omega)
                .map(|(i, _)| i)
                .collect();
            let t = IndexSet::from_zero_based(&t, n).map_err(|e| e.to_string())?;
            let built = build_weights(&t, omega, n).map_err(|e| e.to_string())?;
            if built.weights() != weights.as_slice() {
                return Err("dense weights must be omega on one set and 1 elsewhere".into());
            }
            Ok(built)
        }
    }
}

#[derive(Serialize)]
struct SolveReport {
    x_hat: SparseSignal,
    objective: f64,
    feas_violation: f64,
    gap: f64,
    dual_bound: f64,
    status: SolveStatus,
    iterations: usize,
}

/// Counterexample document written by `sharpness build`; the matrix lives in
/// a sibling CSV referenced by `a_csv`.
#[derive(Serialize, Deserialize)]
struct CounterexampleDoc {
    params: CounterexampleParams,
    m_prime: f64,
    m: usize,
    a_csv: String,
    x0: SparseSignal,
    eta0: SparseSignal,
    x1: SparseSignal,
    t_tilde: IndexSet,
    verification: CounterexampleChecks,
    #[serde(skip_serializing_if = "Option::is_none")]
    ric: Option<RicVerification>,
}

#[derive(Serialize, Deserialize)]
struct RicVerification {
    delta: f64,
    bound: f64,
    ok: bool,
}

fn main() {
    if let Err(msg) = run() {
        eprintln!("error: {msg}");
        std::process::exit(1);
    }
}

fn run() -> Result<(), String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Bounds { command } => match command {
            BoundsCommand::Sweep(args) => {
                let spec = SweepSpec {
                    t: args.t,
                    rho: args.rho,
                    delta: args.delta,
                    alphas: args.alphas,
                    omega_steps: args.omega_steps,
                    fmsy: args.fmsy_a.map(|a| FmsyParams {
                        a,
                        delta_ak: args.delta_ak,
                        delta_a1k: args.delta_a1k,
                    }),
                };
                let table = wl1::bounds::figure_sweep(&spec).map_err(|e| e.to_string())?;
                std::fs::write(&args.out, table.to_csv()).map_err(|e| e.to_string())?;
                println!("wrote {} rows to {}", table.rows.len(), args.out.display());
            }
        },
        Command::Solve(args) => {
            let a = read_matrix_csv(&args.matrix).map_err(|e| e.to_string())?;
            let y = read_vector_csv(&args.y).map_err(|e| e.to_string())?;
            let w = load_weights(&args.weights)?;
            let noise_set = match args.noise.as_str() {
                "l2" => NoiseSet::L2Ball,
                "ds" => NoiseSet::DantzigBox,
                other => return Err(format!("unknown noise set {other:?} (expected l2 or ds)")),
            };
            let inst =
                ProblemInstance::new(a, y, noise_set, args.eps).map_err(|e| e.to_string())?;
            let opts = SolverOptions {
                feas_tol: args.feas_tol,
                opt_tol: args.opt_tol,
                max_iters: args.max_iters,
                deterministic: true,
            };
            let rep = solver::solve(&inst, &w, &opts).map_err(|e| e.to_string())?;
            let report = SolveReport {
                objective: rep.objective,
                feas_violation: rep.feas_violation,
                gap: rep.certificate.gap,
                dual_bound: rep.certificate.dual_bound,
                status: rep.status,
                iterations: rep.iterations,
                x_hat: rep.x_hat,
            };
            write_json(&args.out, &report)?;
            println!(
                "status {:?}, objective {}, report at {}",
                report.status,
                report.objective,
                args.out.display()
            );
        }
        Command::Rip { command } => match command {
            RipCommand::Exact { matrix, k, budget } => {
                let a = read_matrix_csv(&matrix).map_err(|e| e.to_string())?;
                let r = rip::exact_ric_with_budget(&a, k, budget).map_err(|e| e.to_string())?;
                print_json(&r)?;
            }
            RipCommand::Mc {
                matrix,
                k,
                trials,
                seed,
            } => {
                let a = read_matrix_csv(&matrix).map_err(|e| e.to_string())?;
                let r = rip::mc_ric_lower_bound(&a, k, trials, seed).map_err(|e| e.to_string())?;
                print_json(&r)?;
            }
            RipCommand::Certify {
                matrix,
                k,
                t,
                omega,
                rho,
                alpha,
                budget,
            } => {
                let a = read_matrix_csv(&matrix).map_err(|e| e.to_string())?;
                let g = GeometryParams::new(t, omega, rho, alpha).map_err(|e| e.to_string())?;
                let opts = rip::CertifyOptions {
                    enum_budget: budget,
                    ..Default::default()
                };
                let c = rip::certify_recovery_with(&a, k, &g, &opts).map_err(|e| e.to_string())?;
                print_json(&c)?;
            }
        },
        Command::Sharpness { command } => match command {
            SharpnessCommand::Build {
                k,
                t,
                omega,
                rho,
                alpha,
                eps,
                n,
                out,
                verify_ric,
            } => {
                let ce = construct_counterexample(k, t, omega, rho, alpha, eps, n)
                    .map_err(|e| e.to_string())?;
                let a_csv = out.with_extension("A.csv");
                write_matrix_csv(&a_csv, &ce.a).map_err(|e| e.to_string())?;
                let ric = if verify_ric {
                    let (delta, bound, ok) =
                        verify_ric_bound(&ce, eps).map_err(|e| e.to_string())?;
                    Some(RicVerification { delta, bound, ok })
                } else {
                    None
                };
                let doc = CounterexampleDoc {
                    params: ce.params,
                    m_prime: ce.m_prime,
                    m: ce.m,
                    a_csv: a_csv
                        .file_name()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_default(),
                    verification: ce.checks().map_err(|e| e.to_string())?,
                    x0: ce.x0,
                    eta0: ce.eta0,
                    x1: ce.x1,
                    t_tilde: ce.t_tilde,
                    ric,
                };
                write_json(&out, &doc)?;
                println!(
                    "counterexample with m' = {}, m = {} written to {}",
                    doc.m_prime,
                    doc.m,
                    out.display()
                );
            }
            SharpnessCommand::Demo { input, noise } => {
                let text = std::fs::read_to_string(&input).map_err(|e| e.to_string())?;
                let doc: CounterexampleDoc =
                    serde_json::from_str(&text).map_err(|e| e.to_string())?;
                let a_path = input
                    .parent()
                    .unwrap_or_else(|| Path::new("."))
                    .join(&doc.a_csv);
                let a = read_matrix_csv(&a_path).map_err(|e| e.to_string())?;
                let ce = Counterexample::from_parts(
                    a,
                    doc.x0,
                    doc.eta0,
                    doc.x1,
                    doc.m_prime,
                    doc.m,
                    doc.t_tilde,
                    doc.params,
                )
                .map_err(|e| e.to_string())?;
                let kind = match noise.as_str() {
                    "noiseless" => FailureNoise::Noiseless,
                    "l2-seq" => FailureNoise::L2Sequence,
                    other => return Err(format!("unknown noise mode {other:?}")),
                };
                let rep = demonstrate_failure(&ce, kind, &SolverOptions::default())
                    .map_err(|e| e.to_string())?;
                print_json(&rep)?;
            }
        },
        Command::Experiment { command } => match command {
            ExperimentCommand::Run { config, out } => {
                let cfg = load_config(&config)?;
                let result = harness::run_recovery_experiment(&cfg).map_err(|e| e.to_string())?;
                let prefix = resolve_out(out, &cfg, "experiment")?;
                let files =
                    harness::write_experiment_outputs(&result, &prefix).map_err(|e| e.to_string())?;
                for f in files {
                    println!("wrote {}", f.display());
                }
                for c in &result.cells {
                    println!(
                        "omega={} alpha={}: success {}/{} (mean error {:.3e})",
                        c.omega, c.alpha, c.successes, c.trials, c.mean_error
                    );
                }
            }
            ExperimentCommand::BoundCheck { config, out } => {
                let cfg = load_config(&config)?;
                let summary =
                    harness::run_certified_bound_check(&cfg).map_err(|e| e.to_string())?;
                let prefix = resolve_out(out, &cfg, "bound_check")?;
                let result = harness::ExperimentResult {
                    records: summary.records.clone(),
                    cells: vec![],
                };
                let files =
                    harness::write_experiment_outputs(&result, &prefix).map_err(|e| e.to_string())?;
                for f in files {
                    println!("wrote {}", f.display());
                }
                println!(
                    "certified cells: {}, uncertified: {}, bound violations: {}",
                    summary.certified, summary.uncertified, summary.violations
                );
                if summary.violations > 0 {
                    return Err(format!("{} certified bound violations", summary.violations));
                }
            }
        },
        Command::Figures { command } => match command {
            FiguresCommand::Emit { out } => {
                let files = harness::emit_figures(&out).map_err(|e| e.to_string())?;
                for f in files {
                    println!("wrote {}", f.display());
                }
            }
        },
    }
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn resolve_out(
    flag: Option<PathBuf>,
    cfg: &ExperimentConfig,
    fallback: &str,
) -> Result<PathBuf, String> {
    Ok(flag
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(fallback)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    std::fs::write(path, text).map_err(|e| e.to_string())
}

fn print_json<T: Serialize>(value: &T) -> Result<(), String> {
    println!(
        "{}",
        serde_json::to_string_pretty(value).map_err(|e| e.to_string())?
    );
    Ok(())
}
