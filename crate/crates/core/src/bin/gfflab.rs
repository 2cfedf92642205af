use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gfflab::experiment::{self, ExperimentConfig, ExperimentKind, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "gfflab", version, about = "Discrete Gaussian free field lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-dimensional field experiments.
    Gff {
        #[arg(value_enum)]
        experiment: GffExperiment,
        #[command(flatten)]
        flags: Flags,
    },
    /// One-dimensional harness experiments.
    Bridge {
        #[arg(value_enum)]
        experiment: BridgeExperiment,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GffExperiment {
    K2Green,
    Wick,
    Markov,
    Conformal,
    Boundary,
    LogVariance,
    WedgeScan,
}

#[derive(Clone, Copy, ValueEnum)]
enum BridgeExperiment {
    Suite,
}

#[derive(Args)]
struct Flags {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Lattice spacing.
    #[arg(long)]
    mesh: Option<f64>,
    /// Output directory for report.json and data.csv.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, flags) = match cli.command {
        Command::Gff { experiment, flags } => {
            let kind = match experiment {
                GffExperiment::K2Green => ExperimentKind::K2Green,
                GffExperiment::Wick => ExperimentKind::Wick,
                GffExperiment::Markov => ExperimentKind::Markov,
                GffExperiment::Conformal => ExperimentKind::Conformal,
                GffExperiment::Boundary => ExperimentKind::Boundary,
                GffExperiment::LogVariance => ExperimentKind::LogVariance,
                GffExperiment::WedgeScan => ExperimentKind::WedgeScan,
            };
            (kind, flags)
        }
        Command::Bridge { experiment: BridgeExperiment::Suite, flags } => (ExperimentKind::BridgeSuite, flags),
    };
    let file = match &flags.config {
        Some(path) => match ExperimentConfig::from_file(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        },
        None => ExperimentConfig::default(),
    };
    if file.experiment.is_some_and(|k| k != kind) {
        eprintln!("error: experiment: config names `{}` but the command runs `{kind}`", file.experiment.unwrap());
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    let config = file.merged(ExperimentConfig {
        experiment: Some(kind),
        seed: flags.seed,
        samples: flags.samples,
        mesh: flags.mesh,
        out: flags.out,
        threads: flags.threads,
        ..Default::default()
    });
    if let Some(n) = config.threads {
        if n == 0 {
            eprintln!("error: threads: must be at least 1");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        // results do not depend on the thread count, only the wall time
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    ExitCode::from(experiment::run(config) as u8)
}
