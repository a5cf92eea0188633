use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lrssc::data::SynthParams;
use lrssc::{PenaltyKind, PenaltySpec};
use lrssc_cli::config::ExperimentConfig;
use lrssc_cli::experiment::{cmd_grid, cmd_run, threads_from_env, RunOptions};
use lrssc_cli::tools::{cmd_compare, cmd_prox_curve, cmd_synth, Metric, Range};
use lrssc_cli::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "lrssc",
    version,
    about = "Low-rank sparse subspace clustering experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a configuration over random partitions.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Grid search on the tuning partitions.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Penalty and proximal operator over a range of inputs, as CSV.
    ProxCurve {
        #[arg(long)]
        penalty: String,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        n: f64,
        /// Scale the exponential penalty by 1/delta.
        #[arg(long)]
        inv_delta_scale: bool,
        #[arg(long)]
        lambda: f64,
        /// a:b:steps
        #[arg(long, allow_hyphen_values = true)]
        range: String,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank-sum test between two results.csv files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "acc")]
        metric: String,
    },
    /// Write a synthetic union-of-subspaces dataset (.csv or f64bin).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 30)]
        ambient_dim: usize,
        #[arg(long, default_value_t = 5)]
        clusters: usize,
        #[arg(long, default_value_t = 3)]
        subspace_dim: usize,
        #[arg(long, default_value_t = 50)]
        points_per_cluster: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let opts = RunOptions {
                threads: threads_from_env()?,
                output_dir: out_dir,
            };
            let out = cmd_run(&cfg, &opts)?;
            for r in &out.records {
                let s = &r.in_sample;
                println!(
                    "{}: acc {:.4} ± {:.4}, nmi {:.4} ± {:.4}, f1 {:.4} ± {:.4}",
                    r.point.label(),
                    s.acc.mean,
                    s.acc.std,
                    s.nmi.mean,
                    s.nmi.std,
                    s.f1.mean,
                    s.f1.std
                );
            }
            println!("wrote {}", out.csv.display());
        }
        Command::Grid { config, out_dir } => {
            let cfg = ExperimentConfig::load(&config)?;
            let opts = RunOptions {
                threads: threads_from_env()?,
                output_dir: out_dir,
            };
            let out = cmd_grid(&cfg, &opts)?;
            let best = &out.records[out.best_index];
            println!(
                "best of {}: {} (acc {:.4}, nmi {:.4})",
                out.records.len(),
                best.point.label(),
                best.in_sample.acc.mean,
                best.in_sample.nmi.mean
            );
            println!(
                "wrote {} and {}",
                out.csv.display(),
                out.best_config_path.display()
            );
        }
        Command::ProxCurve {
            penalty,
            delta,
            n,
            inv_delta_scale,
            lambda,
            range,
            out,
        } => {
            let kind: PenaltyKind = penalty.parse()?;
            let spec = match kind {
                PenaltyKind::ExpAdaptive => PenaltySpec::exp(delta, n, inv_delta_scale)?,
                k => PenaltySpec::simple(k),
            };
            let csv = cmd_prox_curve(&spec, lambda, &range.parse::<Range>()?)?;
            match out {
                Some(path) => std::fs::write(&path, csv)
                    .map_err(|e| CliError::from(e).context(path.display()))?,
                None => print!("{csv}"),
            }
        }
        Command::Compare { a, b, metric } => {
            let report = cmd_compare(&a, &b, metric.parse::<Metric>()?)?;
            print!("{report}");
        }
        Command::Synth {
            out,
            ambient_dim,
            clusters,
            subspace_dim,
            points_per_cluster,
            noise,
            seed,
        } => {
            let params = SynthParams {
                ambient_dim,
                clusters,
                subspace_dim,
                points_per_cluster,
                noise_sigma: noise,
                seed,
            };
            cmd_synth(&params, &out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.category.exit_code() as u8)
        }
    }
}
