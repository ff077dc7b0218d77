use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contamrf::cli_io::{
    cmd_fit, cmd_predict, run_selftest, run_sweep, write_sweep, Overrides, PredictOptions, PredictSource, RunConfig,
    FAULT_ENV,
};
use contamrf::experiments::Execution;
use contamrf::Error;

const EXIT_SELFTEST: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "contamrf", version, about = "Robust Bayesian random-feature regression under contamination")]
struct Cli {
    /// Master seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, env = "CONTAMRF_THREADS")]
    threads: Option<usize>,
    /// Leave timestamps out of manifests so reruns are byte-identical.
    #[arg(long, global = true)]
    no_timestamps: bool,
    /// Exact minimum-norm fits (λ = 0 with pseudoinverse fallback).
    #[arg(long, global = true)]
    pinv: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the configured model and report a summary.
    Fit {
        #[arg(long)]
        config: Option<PathBuf>,
        /// CSV of d input columns followed by y; defaults to teacher data.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Robust predictive report at one input or for a given Gaussian.
    Predict {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Test input, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Option<Vec<f64>>,
        /// Baseline predictive as MEAN,VARIANCE instead of a fitted model.
        #[arg(long, value_parser = parse_gaussian, allow_hyphen_values = true, conflicts_with_all = ["x", "data"])]
        gaussian: Option<(f64, f64)>,
        #[arg(long, default_value_t = 0.05)]
        eta: f64,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        alpha: f64,
        /// Truncation half-width in predictive standard deviations.
        #[arg(long, default_value_t = 3.0)]
        k: f64,
        #[arg(long, default_value_t = 41)]
        probe_points: usize,
    },
    /// Run the double-descent sweeps and write CSV tables.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Run the embedded property suites.
    Selftest,
}

fn parse_gaussian(s: &str) -> Result<(f64, f64), String> {
    let (m, v) = s.split_once(',').ok_or("expected MEAN,VARIANCE")?;
    let m = m.trim().parse::<f64>().map_err(|e| format!("mean: {e}"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("variance: {e}"))?;
    Ok((m, v))
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_INPUT,
    }
}

fn load(path: Option<&Path>, overrides: Overrides) -> contamrf::Result<RunConfig> {
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.resolve(overrides)
}

fn emit_json<T: serde::Serialize>(value: &T, out_dir: Option<&Path>, name: &str) -> contamrf::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out_dir {
        Some(dir) => {
            let path = dir.join(name);
            std::fs::create_dir_all(dir).map_err(|e| io_at(e, dir))?;
            std::fs::write(&path, text).map_err(|e| io_at(e, &path))?;
        }
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn io_at(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> contamrf::Result<ExitCode> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::InvalidArgument("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let overrides = Overrides { seed: cli.seed, pinv: cli.pinv };
    let timestamps = !cli.no_timestamps;
    let out_dir = cli.out_dir.as_deref();
    match cli.command {
        Command::Fit { config, data } => {
            let cfg = load(config.as_deref(), overrides)?;
            emit_json(&cmd_fit(&cfg, data.as_deref(), timestamps)?, out_dir, "fit.json")?;
        }
        Command::Predict { config, data, x, gaussian, eta, epsilon, alpha, k, probe_points } => {
            let cfg = load(config.as_deref(), overrides)?;
            let source = match gaussian {
                Some((mean, variance)) => PredictSource::Gaussian { mean, variance },
                None => PredictSource::Model { x, data },
            };
            let opts = PredictOptions { eta, epsilon, alpha, k, probe_points };
            emit_json(&cmd_predict(&cfg, &source, &opts, timestamps)?, out_dir, "predict.json")?;
        }
        Command::Sweep { config } => {
            let cfg = load(config.as_deref(), overrides)?;
            let outputs = run_sweep(&cfg, Execution::Parallel, timestamps)?;
            for path in write_sweep(&outputs, out_dir.unwrap_or(Path::new("out")))? {
                println!("{}", path.display());
            }
        }
        Command::Selftest => {
            let fault = std::env::var(FAULT_ENV).ok();
            let report = run_selftest(fault.as_deref());
            for s in &report.suites {
                let status = if s.failure.is_none() { "PASS" } else { "FAIL" };
                println!("{status} {:<16} {:>9.2} ms", s.name, s.millis);
            }
            if let Some(f) = report.first_failure() {
                eprintln!("selftest failed in suite {}: {}", f.name, f.failure.as_deref().unwrap_or(""));
                return Ok(ExitCode::from(EXIT_SELFTEST));
            }
            println!("selftest passed");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
