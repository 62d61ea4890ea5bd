use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod bounds;
mod contraction;
mod error;
mod expansion;
mod output;
mod settings;
mod simulate;

use error::CliError;
use settings::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "tclb",
    version,
    about = "Verify symmetric tensor contraction algorithms and their communication bounds"
)]
struct Cli {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compare all three algorithms with the reference summation.
    VerifyContraction(VerifyContractionArgs),
    /// Check expansion bounds on column subsets of the bilinear encodings.
    VerifyExpansion(VerifyExpansionArgs),
    /// Communication lower bounds.
    Bounds {
        #[command(subcommand)]
        command: BoundsCommand,
    },
    /// Run reference schedules through the cache or parallel simulator.
    Simulate {
        #[command(subcommand)]
        command: SimulateCommand,
    },
}

#[derive(Subcommand, Debug)]
enum BoundsCommand {
    /// Asymptotic summary rows plus numeric bounds for a parameter grid.
    Table(TableArgs),
}

#[derive(Subcommand, Debug)]
enum SimulateCommand {
    /// Sequential machine with a cache of H words.
    Cache(CacheArgs),
    /// p processors exchanging messages.
    Parallel(ParallelArgs),
}

/// Flags shared by every command. Lists are comma-separated.
#[derive(Args, Debug, Default)]
struct Common {
    /// Uncontracted A modes.
    #[arg(long)]
    s: Option<String>,
    /// Uncontracted B modes.
    #[arg(long)]
    t: Option<String>,
    /// Contracted modes.
    #[arg(long)]
    v: Option<String>,
    /// Tensor dimension (a matrix dimension for matrix products).
    #[arg(long)]
    n: Option<String>,
    /// Cache sizes in words.
    #[arg(long = "H")]
    cache: Option<String>,
    /// Processor counts.
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Random instances (or sampled subsets) per cell.
    #[arg(long)]
    trials: Option<String>,
    /// Output file, or a directory for verify-expansion.
    #[arg(long)]
    out: Option<String>,
    /// json, csv or text.
    #[arg(long)]
    format: Option<String>,
}

impl Common {
    fn flags(&self) -> Vec<(&'static str, Option<String>)> {
        vec![
            ("s", self.s.clone()),
            ("t", self.t.clone()),
            ("v", self.v.clone()),
            ("n", self.n.clone()),
            ("H", self.cache.clone()),
            ("p", self.p.clone()),
            ("seed", self.seed.clone()),
            ("trials", self.trials.clone()),
            ("out", self.out.clone()),
            ("format", self.format.clone()),
        ]
    }
}

#[derive(Args, Debug)]
struct VerifyContractionArgs {
    #[command(flatten)]
    common: Common,
    /// Largest s + t + v in the default sweep.
    #[arg(long)]
    max_omega: Option<String>,
    /// Corrupt one output entry of this algorithm before comparing.
    #[arg(long, hide = true)]
    inject_fault: Option<String>,
}

#[derive(Args, Debug)]
struct VerifyExpansionArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    max_omega: Option<String>,
    /// Algorithms: nonsym, direct, sympres.
    #[arg(long)]
    alg: Option<String>,
    /// Bound families: mm, direct, direct-mv, sympres.
    #[arg(long)]
    bound: Option<String>,
    /// Also check the bounds on sampled vertex subsets of execution DAGs.
    #[arg(long)]
    dag: bool,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[command(flatten)]
    common: Common,
    /// Built-in shape list; `paper-table` is the only one.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Args, Debug)]
struct CacheArgs {
    #[command(flatten)]
    common: Common,
    /// mm, direct or sympres.
    #[arg(long)]
    alg: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Largest s + t + v for the direct and sympres sweeps.
    #[arg(long)]
    max_omega: Option<String>,
    /// Fixed block size instead of the largest one that fits.
    #[arg(long)]
    block: Option<String>,
    /// Simulate this schedule file instead of a generated one.
    #[arg(long)]
    schedule: Option<String>,
    /// Directory to write the generated schedules to.
    #[arg(long)]
    schedule_out: Option<String>,
}

#[derive(Args, Debug)]
struct ParallelArgs {
    #[command(flatten)]
    common: Common,
    /// Only mm.
    #[arg(long)]
    alg: Option<String>,
    /// 1d, 2d or 3d.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    m: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Per-processor memory cap in words.
    #[arg(long)]
    memory: Option<String>,
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    schedule_out: Option<String>,
}

fn with(
    mut flags: Vec<(&'static str, Option<String>)>,
    extra: &[(&'static str, &Option<String>)],
) -> Vec<(&'static str, Option<String>)> {
    flags.extend(extra.iter().map(|(k, v)| (*k, (*v).clone())));
    flags
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("TCLB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "TCLB_THREADS must be a positive integer, got {raw:?}"
        ))
    })?;
    // fails only if a pool already exists, which cannot happen this early
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

/// Returns whether every check passed.
fn run(cli: Cli) -> Result<bool, CliError> {
    configure_threads()?;
    let config = cli.config.as_deref();
    match cli.command {
        Command::VerifyContraction(a) => {
            let flags = with(
                a.common.flags(),
                &[
                    ("max-omega", &a.max_omega),
                    ("inject-fault", &a.inject_fault),
                ],
            );
            contraction::run(&Settings::resolve(flags, config)?)
        }
        Command::VerifyExpansion(a) => {
            let dag = a.dag.then(|| "true".to_string());
            let flags = with(
                a.common.flags(),
                &[
                    ("max-omega", &a.max_omega),
                    ("alg", &a.alg),
                    ("bound", &a.bound),
                    ("dag", &dag),
                ],
            );
            expansion::run(&Settings::resolve(flags, config)?)
        }
        Command::Bounds {
            command: BoundsCommand::Table(a),
        } => {
            let flags = with(a.common.flags(), &[("preset", &a.preset)]);
            bounds::run(&Settings::resolve(flags, config)?)
        }
        Command::Simulate {
            command: SimulateCommand::Cache(a),
        } => {
            let flags = with(
                a.common.flags(),
                &[
                    ("alg", &a.alg),
                    ("m", &a.m),
                    ("k", &a.k),
                    ("max-omega", &a.max_omega),
                    ("block", &a.block),
                    ("schedule", &a.schedule),
                    ("schedule-out", &a.schedule_out),
                ],
            );
            simulate::run_cache(&Settings::resolve(flags, config)?)
        }
        Command::Simulate {
            command: SimulateCommand::Parallel(a),
        } => {
            let flags = with(
                a.common.flags(),
                &[
                    ("alg", &a.alg),
                    ("grid", &a.grid),
                    ("m", &a.m),
                    ("k", &a.k),
                    ("memory", &a.memory),
                    ("schedule", &a.schedule),
                    ("schedule-out", &a.schedule_out),
                ],
            );
            simulate::run_parallel(&Settings::resolve(flags, config)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
