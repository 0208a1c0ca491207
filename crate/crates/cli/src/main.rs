use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use zoslice::{DirectionLaw, KernelKind};
use zoslice_cli::commands::{cmd_run, cmd_verify, RunOutput};
use zoslice_cli::plot::cmd_plot;
use zoslice_cli::spec::{ExperimentSpec, Overrides};
use zoslice_cli::verify::VerifyOptions;
use zoslice_cli::CliResult;

#[derive(Parser)]
#[command(name = "zoslice", version, about = "Zeroth-order parallel MCMC experiments")]
struct Cli {
    /// Threads per finite-difference round.
    #[arg(long, global = true, env = "ZOSLICE_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment given a spec file (TOML, or a manifest.json) or a tag:
    /// logistic25, logistic200, stochvol203, gaussian-verify.
    Run {
        /// Spec file or experiment tag.
        spec: String,
        /// Comma-separated kernels, e.g. rwm,rs-mala,rs-hmc.
        #[arg(long, value_delimiter = ',')]
        kernels: Option<Vec<KernelKind>>,
        /// Directions per iteration, comma-separated.
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<usize>>,
        /// Worker counts m0 for the Eff(m)/Eff(m0) columns.
        #[arg(long, value_delimiter = ',')]
        m0: Option<Vec<usize>>,
        /// Chain length.
        #[arg(long)]
        t: Option<usize>,
        /// Single chain seed.
        #[arg(long, conflicts_with = "seeds")]
        seed: Option<u64>,
        /// Chain seeds; ESJD is averaged over them.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Finite-difference step.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Use the full chain length instead of the desk default.
        #[arg(long)]
        paper_scale: bool,
        /// Direction law: uniform-stiefel or canonical-subset.
        #[arg(long)]
        law: Option<DirectionLaw>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write post-burn-in chains as CSV under <out>/trajectories.
        #[arg(long)]
        save_trajectories: bool,
        /// Print the plan and exit without writing anything.
        #[arg(long)]
        dry_run: bool,
    },
    /// Draw figures from a sweep directory.
    Plot { dir: PathBuf },
    /// Run the property battery.
    Verify {
        /// Also write verify.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            spec,
            kernels,
            m,
            m0,
            t,
            seed,
            seeds,
            epsilon,
            paper_scale,
            law,
            out,
            save_trajectories,
            dry_run,
        } => {
            let mut s = ExperimentSpec::load(&spec)?;
            Overrides {
                kernels,
                m,
                m0,
                t,
                seed,
                seeds,
                epsilon,
                workers: cli.workers,
                law,
                paper_scale,
                out,
                save_trajectories,
            }
            .apply(&mut s);
            s.normalize();
            match cmd_run(&s, dry_run)? {
                RunOutput::DryRun(text) => print!("{text}"),
                RunOutput::Sweep { dir, rows, .. } => {
                    println!("{} rows written to {}", rows.len(), dir.display());
                }
                RunOutput::Verify { dir, table } => {
                    println!("{table}");
                    println!("written to {}", dir.display());
                }
            }
        }
        Command::Plot { dir } => {
            for p in cmd_plot(&dir)? {
                println!("{}", p.display());
            }
        }
        Command::Verify { out } => {
            let opts = VerifyOptions {
                workers: cli.workers.unwrap_or(1),
                ..VerifyOptions::default()
            };
            println!("{}", cmd_verify(&opts, out.as_deref())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
