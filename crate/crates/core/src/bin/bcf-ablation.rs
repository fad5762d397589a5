use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use bcf_ablation::dgp::{generate, DgpSpec, Selection};
use bcf_ablation::harness::{
    report_from_dir, run_experiment_with, ExperimentConfig, Profile, RunOptions, ALLOWED_ALPHAS,
};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(version, about = "Bayesian Causal Forest propensity ablation study")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replication grid described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `quick` (20 replicates, 500 retained draws) or `full` (100 replicates).
        #[arg(long)]
        profile: Option<Profile>,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed; overrides `master_seed` in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Reuse the finished cells of an interrupted run.
        #[arg(long, conflicts_with = "overwrite")]
        resume: bool,
        /// Replace the artifacts of an earlier run.
        #[arg(long)]
        overwrite: bool,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Rebuild summaries, p-value tables and timing from a finished run.
    Report {
        #[arg(long)]
        from: PathBuf,
    },
    /// Write one synthetic dataset as CSV.
    Generate {
        #[arg(long)]
        dgp: Selection,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 250)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run {
            config,
            profile,
            out,
            seed,
            resume,
            overwrite,
            quiet,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(p) = profile {
                cfg.apply_profile(p);
            }
            if let Some(dir) = out {
                cfg.output_dir = dir;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let out = run_experiment_with(&cfg, RunOptions { resume, overwrite }, &mut |r| {
                if !quiet {
                    eprintln!(
                        "{} alpha={} rep={} {:<7} rmse_cate={:.4} {:.2}s",
                        r.dgp_id, r.alpha, r.replicate_index, r.model, r.rmse_cate, r.fit_seconds
                    );
                }
            })?;
            println!(
                "{} fits, artifacts in {}",
                out.records.len(),
                cfg.output_dir.display()
            );
        }
        Command::Report { from } => {
            let written = report_from_dir(&from)?;
            println!("rewrote {} files in {}", written.len(), from.display());
        }
        Command::Generate {
            dgp,
            alpha,
            n,
            seed,
            out,
        } => {
            if !ALLOWED_ALPHAS.contains(&alpha) {
                return Err(format!("alpha must be 1, 2 or 4, got {alpha}").into());
            }
            let ds = generate(&DgpSpec::new(dgp, alpha, n)?, seed)?;
            let file = File::create(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            ds.write_csv(BufWriter::new(file))?;
            println!("{} rows, digest {}", ds.len(), ds.digest());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
