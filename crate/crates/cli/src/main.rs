use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use icnsim::experiment::{compare, run_batch, topo_dump, ExperimentSpec};

/// Deterministic simulator for in-network caching strategies in
/// information-centric IoT networks.
#[derive(Debug, Parser)]
#[command(name = "icnsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run every (strategy, seed) pair of an experiment spec and write CSVs.
    Run {
        /// Experiment spec (TOML).
        spec: PathBuf,
        /// Run this single seed instead of the spec's seed list.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; overrides the spec's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base directory used when neither --out nor `output_dir` is given.
        #[arg(long, env = "ICNSIM_OUT_DIR", default_value = "results")]
        out_root: PathBuf,
    },
    /// Compare two strategies on one metric of a summary.csv.
    Compare {
        summary_csv: PathBuf,
        strategy_a: String,
        strategy_b: String,
        #[arg(long, default_value = "mean_hops")]
        metric: String,
    },
    /// Print the generated topology (edge list) and FIBs of a spec's config.
    TopoDump {
        spec: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_dir(spec: &ExperimentSpec, out: Option<PathBuf>, out_root: &Path) -> PathBuf {
    out.or_else(|| spec.output_dir.clone())
        .unwrap_or_else(|| out_root.join(&spec.name))
}

fn run(
    spec_path: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
    out_root: &Path,
) -> Result<ExitCode> {
    let mut spec = ExperimentSpec::load(spec_path)?;
    if let Some(seed) = seed {
        spec.seeds = Some(vec![seed]);
    }
    let dir = output_dir(&spec, out, out_root);
    let seeds = spec.seed_list();
    eprintln!(
        "{}: {} strategies x {} seeds",
        spec.name,
        spec.strategies.len(),
        seeds.len()
    );
    let batch = run_batch(&spec);
    batch
        .write_csvs(&dir)
        .with_context(|| format!("writing results to {}", dir.display()))?;
    print!("{}", batch.summary_table());
    println!("results written to {}", dir.display());
    let failed = batch.runs.iter().filter(|r| r.outcome.is_err()).count();
    if failed == batch.runs.len() {
        eprintln!("every run failed");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            spec,
            seed,
            out,
            out_root,
        } => run(&spec, seed, out, &out_root),
        Command::Compare {
            summary_csv,
            strategy_a,
            strategy_b,
            metric,
        } => compare(&summary_csv, &strategy_a, &strategy_b, &metric)
            .map(|c| {
                println!("{c}");
                ExitCode::SUCCESS
            })
            .map_err(Into::into),
        Command::TopoDump { spec, seed, out } => (|| {
            let spec = ExperimentSpec::load(&spec)?;
            let Some(&strategy) = spec.strategies.first() else {
                bail!("spec lists no strategies");
            };
            let text = topo_dump(&spec.config_for(strategy, seed))?;
            match out {
                Some(path) => std::fs::write(&path, text)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        })(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
