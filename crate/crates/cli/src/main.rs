use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use motionsim_cli::{run, validate, CliError, ExperimentConfig, CATALOG};

#[derive(Parser)]
#[command(name = "motionsim", version, about = "Spin-motion simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV (and SVG) output.
    Run {
        #[arg(short, long)]
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Worker threads (default: number of processors).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config and print derived quantities without running.
    Validate {
        #[arg(short, long)]
        config: PathBuf,
    },
    /// List the experiment catalog.
    List,
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::List => {
            for e in &CATALOG {
                let grids: Vec<&str> = e.grids.iter().map(|g| g.key()).collect();
                println!("{:<22} [{}] {}", e.name, grids.join(", "), e.summary);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let c = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let r = validate(&c);
            for d in &r.derived {
                println!("{d}");
            }
            for w in &r.warnings {
                println!("warning: {w}");
            }
            for e in &r.errors {
                println!("error: {e}");
            }
            if r.is_ok() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Command::Run { config, out, threads } => {
            let c = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return fail(&e),
            };
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(n) = threads {
                pool = pool.num_threads(n);
            }
            let pool = match pool.build() {
                Ok(p) => p,
                Err(e) => return fail(&CliError::Config(format!("thread pool: {e}"))),
            };
            match pool.install(|| run(&c, out.as_deref())) {
                Ok((table, written)) => {
                    for w in &table.metadata.warnings {
                        eprintln!("warning: {w}");
                    }
                    println!("{}", written.csv.display());
                    if let Some(svg) = written.svg {
                        println!("{}", svg.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => fail(&e),
            }
        }
    }
}
