//! Command-line front end for the evolution lab.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ievlab::config::{RunConfig, SweepConfig};
use ievlab::harness::{
    cmd_evolve, cmd_iev_report, cmd_plotdata, cmd_posteval, cmd_sweep, PostevalProtocol,
};

#[derive(Parser)]
#[command(name = "ievlab", version, about = "Evolution-strategy experiments under controlled environmental variations")]
struct Cli {
    /// Evaluation worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the replicated evolution experiment described by a config file.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Post-evaluate the final agents of a finished run.
    Posteval {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, value_enum)]
        protocol: ProtocolArg,
        /// Initial-state noise std for the protocol (default 0.03).
        #[arg(long)]
        sigma_init_override: Option<f64>,
    },
    /// Ranking-disagreement series and means from a run directory or an
    /// external generation,fitness1,fitness2 CSV.
    IevReport {
        /// Run directory, or a fitness-pair CSV file.
        #[arg(long)]
        run_dir: PathBuf,
        /// Where to write the report (defaults next to the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid of conditions and compare them.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Override the base config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Export tidy plot-ready CSVs from one or more run directories.
    PlotData {
        /// Run directory; repeat for several conditions.
        #[arg(long, required = true)]
        run_dir: Vec<PathBuf>,
        /// Output directory for the plot files.
        #[arg(long, default_value = "plotdata")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
}

fn run(cli: Cli) -> ievlab::Result<()> {
    match cli.command {
        Command::Evolve { config, seed } => {
            let mut config = RunConfig::load(&config)?;
            if let Some(seed) = seed {
                config.master_seed = seed;
            }
            let outcome = cmd_evolve(&config)?;
            println!("{}", outcome.run_dir.display());
        }
        Command::Posteval {
            run_dir,
            protocol,
            sigma_init_override,
        } => {
            let protocol = match protocol {
                ProtocolArg::A => PostevalProtocol::A,
                ProtocolArg::B => PostevalProtocol::B,
            };
            let outcome = cmd_posteval(&run_dir, protocol, sigma_init_override)?;
            println!("{}", outcome.csv.display());
        }
        Command::IevReport { run_dir, out } => {
            let outcome = cmd_iev_report(&run_dir, out.as_deref())?;
            println!("{}", outcome.series_csv.display());
            println!("mean_iev={}", outcome.pooled_mean_iev);
        }
        Command::Sweep { config, seed } => {
            let mut config = SweepConfig::load(&config)?;
            if let Some(seed) = seed {
                config.base.master_seed = seed;
            }
            let outcome = cmd_sweep(&config)?;
            println!("{}", outcome.sweep_dir.display());
            println!(
                "kruskal_wallis h={} df={} p={}",
                outcome.kw.h, outcome.kw.df, outcome.kw.p
            );
        }
        Command::PlotData { run_dir, out } => {
            for path in cmd_plotdata(&run_dir, &out)? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers;
    let result = if workers > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => {
                eprintln!("error: cannot build worker pool: {e}");
                return ExitCode::FAILURE;
            }
        }
    } else {
        run(cli)
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
