use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cyclic_condensation::error::Result;
use cyclic_condensation::harness::{
    run_grid, run_sample_complexity, run_threshold_sweep, GridConfig, SampleComplexityConfig, SweepConfig,
};
use cyclic_condensation::ica::{IcaOptions, Nonlinearity};
use cyclic_condensation::io::{read_graph, read_json, read_samples_file, read_scm, write_samples, GraphJson};
use cyclic_condensation::lattice::valid_dag_coarsenings;
use cyclic_condensation::recover::{recover_condensation, RecoveryConfig, RecoveryJson, SelectionMode};
use cyclic_condensation::scm::{generate_scm, sample, GeneratorConfig, Noise, NoiseFamily, Regime};

#[derive(Parser)]
#[command(name = "condense", version, about = "Condensation recovery for linear non-Gaussian cyclic SCMs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random SCM and write it as JSON.
    Generate(GenerateArgs),
    /// Draw observational samples from an SCM file as CSV.
    Sample(SampleArgs),
    /// Recover the condensation from a sample CSV.
    Fit(FitArgs),
    /// Enumerate the DAG-coarsenings of a graph.
    Lattice(LatticeArgs),
    /// Run the main experiment grid.
    Grid(RunArgs),
    /// Run the threshold sensitivity sweep.
    SweepThreshold(RunArgs),
    /// Run the sample-complexity study.
    SampleComplexity(RunArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 10)]
    d: usize,
    #[arg(long, default_value_t = 4)]
    kappa: usize,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value = "stable")]
    regime: Regime,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// laplace or exponential-centered
    #[arg(long, default_value = "laplace", value_parser = parse_family)]
    noise: NoiseFamily,
    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.5)]
    weight_low: f64,
    #[arg(long, default_value_t = 0.95)]
    weight_high: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// SCM JSON file.
    #[arg(long)]
    scm: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    /// Sample CSV with header X1,...,Xd.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    tau: f64,
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
    #[arg(long, default_value = "hungarian")]
    mode: SelectionMode,
    #[arg(long, default_value = "logcosh")]
    nonlinearity: Nonlinearity,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 500)]
    max_iter: usize,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LatticeArgs {
    /// Graph JSON file: {"d": .., "edges": [[src, dst], ..]}.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Results CSV (appended to and resumed if it exists).
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON; defaults to the results path with a .summary.json suffix.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn parse_family(s: &str) -> std::result::Result<NoiseFamily, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown noise family {s:?}"))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    path.map_or_else(|| Ok(T::default()), read_json)
}

fn summary_path(args: &RunArgs) -> PathBuf {
    args.summary
        .clone()
        .unwrap_or_else(|| args.out.with_extension("summary.json"))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(a) => {
            let cfg = GeneratorConfig {
                weight_low: a.weight_low,
                weight_high: a.weight_high,
                noise: Noise {
                    family: a.noise,
                    scale: a.scale,
                },
                ..GeneratorConfig::new(a.d, a.kappa, a.lambda, a.regime)
            };
            let scm = generate_scm(&cfg, a.seed)?;
            emit(a.out.as_deref(), &to_json(&scm.to_json())?)
        }
        Command::Sample(a) => {
            let scm = read_scm(&a.scm)?;
            let x = sample(&scm, a.n, a.seed)?;
            match a.out {
                Some(p) => write_samples(std::io::BufWriter::new(std::fs::File::create(p)?), &x),
                None => write_samples(std::io::stdout().lock(), &x),
            }
        }
        Command::Fit(a) => {
            let x = read_samples_file(&a.input)?;
            let cfg = RecoveryConfig {
                tau: a.tau,
                eta: a.eta,
                mode: a.mode,
                ica: IcaOptions {
                    nonlinearity: a.nonlinearity,
                    tolerance: a.tol,
                    max_iterations: a.max_iter,
                    restarts: a.restarts,
                    seed: a.seed,
                },
                ..RecoveryConfig::default()
            };
            cfg.ica.validate()?;
            let result = recover_condensation(&x, &cfg)?;
            emit(a.out.as_deref(), &to_json(&RecoveryJson::from(&result))?)
        }
        Command::Lattice(a) => {
            let g = read_graph(&a.graph)?;
            let report = valid_dag_coarsenings(&g)?;
            let value = serde_json::json!({
                "graph": GraphJson::from(&g),
                "report": report,
            });
            emit(a.out.as_deref(), &to_json(&value)?)
        }
        Command::Grid(a) => {
            let cfg: GridConfig = config(a.config.as_deref())?;
            let out = run_grid(&cfg, &a.out, &summary_path(&a))?;
            eprintln!("{} records in {}", out.records.len(), a.out.display());
            Ok(())
        }
        Command::SweepThreshold(a) => {
            let cfg: SweepConfig = config(a.config.as_deref())?;
            let out = run_threshold_sweep(&cfg, &a.out, &summary_path(&a))?;
            eprintln!("{} records in {}", out.records.len(), a.out.display());
            Ok(())
        }
        Command::SampleComplexity(a) => {
            let cfg: SampleComplexityConfig = config(a.config.as_deref())?;
            let out = run_sample_complexity(&cfg, &a.out, &summary_path(&a))?;
            eprintln!("{} records in {}", out.records.len(), a.out.display());
            if let Some(s) = out.summary.exact_error_fit.slope {
                eprintln!("exact-recovery error slope {s:.3}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
