use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use spu_robust::harness::{
    recompute_from_traces, run_experiment_to_dir, run_jsd_sweep, write_synthetic, ExperimentSpec,
    DEFAULT_SWEEP_TEMPERATURES,
};
use spu_robust::model::{SyntheticKind, SyntheticSpec};
use spu_robust::Error;

#[derive(Parser, Debug)]
#[command(
    name = "spu-robust",
    version,
    about = "Quantized Gibbs pipeline simulator and robustness diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment spec and write the report directory.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-run trace files under <out>/traces.
        #[arg(long)]
        save_traces: bool,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Sweep all binary energy inputs and write JSD grids.
    JsdSweep {
        #[arg(long)]
        a: String,
        #[arg(long, default_value = "fp64")]
        b: String,
        #[arg(long, value_delimiter = ',')]
        temps: Option<Vec<f64>>,
        #[arg(long, default_value_t = 2)]
        labels: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Emit a synthetic model and its ground truth.
    Synth {
        #[arg(long)]
        kind: SyntheticKind,
        #[arg(long)]
        size: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        labels: Option<usize>,
        #[arg(long)]
        shift: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Recompute a run directory's report from its saved traces.
    Metrics {
        #[arg(long)]
        run_dir: PathBuf,
        /// Output file (defaults to <run-dir>/metrics.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn load_spec(path: &PathBuf) -> Result<ExperimentSpec, Failure> {
    if !path.is_file() {
        return Err(Failure::Usage(format!(
            "spec file {} not found",
            path.display()
        )));
    }
    ExperimentSpec::load(path).map_err(usage)
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            spec,
            out,
            save_traces,
            threads,
        } => {
            let spec = load_spec(&spec)?;
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            let report = run_experiment_to_dir(&spec, &out, save_traces)?;
            for p in &report.design_points {
                match &p.metrics {
                    Some(m) => println!(
                        "{:<5} inactive={:.2}% convergence={:.2}% rmse_median={:.4}",
                        p.name.name(),
                        m.inactive_percentage,
                        m.convergence_percentage,
                        m.rmse.median
                    ),
                    None => println!(
                        "{:<5} error: {}",
                        p.name.name(),
                        p.error.as_deref().unwrap_or("")
                    ),
                }
            }
            println!("wrote {}", out.join("report.json").display());
        }
        Command::JsdSweep {
            a,
            b,
            temps,
            labels,
            out,
        } => {
            let temps = temps.unwrap_or_else(|| DEFAULT_SWEEP_TEMPERATURES.to_vec());
            let summary = run_jsd_sweep(&a, &b, labels, &temps, &out).map_err(|e| match e {
                Error::Argument(_) => usage(e),
                other => other.into(),
            })?;
            for g in &summary.grids {
                println!(
                    "T={} max={:.6} mean={:.6} cells>0.2={} -> {}",
                    g.temperature, g.max, g.mean, g.cells_above_0_2, g.file
                );
            }
        }
        Command::Synth {
            kind,
            size,
            seed,
            noise,
            alpha,
            beta,
            labels,
            shift,
            out,
        } => {
            let mut spec = SyntheticSpec::new(kind, size, seed);
            spec.noise = noise.unwrap_or(spec.noise);
            spec.alpha = alpha.unwrap_or(spec.alpha);
            spec.beta = beta.unwrap_or(spec.beta);
            spec.labels = labels.unwrap_or(spec.labels);
            spec.shift = shift.unwrap_or(spec.shift);
            write_synthetic(&spec, &out).map_err(|e| match e {
                Error::Argument(_) => usage(e),
                other => other.into(),
            })?;
            println!("wrote {}", out.display());
        }
        Command::Metrics { run_dir, out } => {
            let spec = load_spec(&run_dir.join("spec.json"))?;
            let traces = run_dir.join("traces");
            if !traces.is_dir() {
                return Err(Failure::Usage(format!(
                    "{} has no traces; rerun with --save-traces",
                    run_dir.display()
                )));
            }
            let report = recompute_from_traces(&spec, &traces)?;
            let out = out.unwrap_or_else(|| run_dir.join("metrics.json"));
            std::fs::write(&out, report.to_json()?)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn error_line(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message.trim() });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            error_line("usage", &e.to_string());
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            error_line("usage", &m);
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            error_line("runtime", &m);
            ExitCode::from(1)
        }
    }
}
