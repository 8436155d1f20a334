//! `mlstream`: batch analyses of multilayer stream graphs.
//!
//! Exit codes: 0 success, 2 validation violations, 1 any other error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mlstream::measures::DenominatorMode;
use mlstream::walks::ExposureWeighting;

mod commands;

#[derive(Debug, Parser)]
#[command(name = "mlstream", version, about = "Multilayer stream graph analyses")]
struct Cli {
    /// TOML dataset manifest.
    #[arg(long, global = true, conflicts_with = "graph")]
    manifest: Option<PathBuf>,
    /// Interchange JSON graph.
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Run loops on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the closure constraints; exit 2 on violations.
    Validate,
    /// Write the graph as interchange JSON with an ingestion report.
    Export,
    /// Sizes, link counts, densities and degrees.
    Stats {
        #[arg(long, default_value = "all-pairs", value_parser = parse_from_str::<DenominatorMode>)]
        denominator_mode: DenominatorMode,
    },
    /// Derived graphs.
    Project {
        #[command(subcommand)]
        to: Projection,
    },
    /// Densities inside and between the groups of an aspect per window.
    DensityDynamics {
        #[arg(long, default_value = "gender")]
        aspect: String,
        #[command(flatten)]
        interaction: InteractionArg,
        /// Window length in seconds.
        #[arg(long, default_value_t = 86_400)]
        window: i64,
        /// First window start in ticks; defaults to midnight UTC of the first day.
        #[arg(long)]
        window_origin: Option<i64>,
    },
    /// Density matrix over the elementary layers of an aspect.
    ClassMatrix {
        #[arg(long, default_value = "class")]
        aspect: String,
        #[command(flatten)]
        interaction: InteractionArg,
    },
    /// Layer centrality report.
    Centrality {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Density matrix CSV for juxtaposed centrality; entries may be fractions.
        #[arg(long)]
        matrix_file: Option<PathBuf>,
        /// Collapse layers onto this aspect first.
        #[arg(long)]
        aspect: Option<String>,
        #[command(flatten)]
        interaction: InteractionArg,
        #[command(flatten)]
        walk: WalkArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Independent batches for a spread estimate.
        #[arg(long, default_value_t = 0)]
        batches: usize,
    },
    /// Coverage rank against superimposed centrality rank.
    RankCompare {
        #[arg(long)]
        aspect: Option<String>,
        #[command(flatten)]
        walk: WalkArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Number of consecutive seeds averaged, starting at --seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
    },
    /// Per-node layer exposure matrix.
    Exposure {
        /// Deterministic incident-link weighting instead of walks.
        #[arg(long)]
        direct: bool,
        #[arg(long)]
        aspect: Option<String>,
        #[command(flatten)]
        walk: WalkArgs,
    },
}

#[derive(Debug, Subcommand)]
enum Projection {
    /// Layer-blind stream graph links.
    Aggregated,
    /// Static multilayer graph at one instant.
    Snapshot {
        #[arg(long)]
        at: i64,
    },
    /// Restriction to a time window, as interchange JSON.
    Window {
        #[arg(long)]
        from: i64,
        #[arg(long)]
        to: i64,
    },
    /// Layer structure projected onto some aspects, as interchange JSON.
    Collapse {
        #[arg(long = "aspect", required = true)]
        aspects: Vec<String>,
    },
    /// Links between two layers given by label.
    Interlayer {
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        beta: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Juxtaposed,
    Superimposed,
}

#[derive(Debug, Clone, Args)]
struct InteractionArg {
    /// Restrict to one layer of another aspect, as `aspect=value`, or `none`.
    /// Defaults to face-to-face contacts when that layer exists.
    #[arg(long)]
    interaction: Option<String>,
}

#[derive(Debug, Clone, Args)]
struct WalkArgs {
    /// Required by every walk-based command.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    gamma: i64,
    /// Walks per start node.
    #[arg(long, default_value_t = 1000)]
    walks: usize,
    /// Horizon in ticks; defaults to the end of the study interval.
    #[arg(long)]
    t_max: Option<i64>,
    /// Fixed start time in ticks; defaults to uniform over presence.
    #[arg(long)]
    t0: Option<i64>,
    #[arg(long, value_parser = parse_from_str::<ExposureWeighting>)]
    weighting: Option<ExposureWeighting>,
    #[arg(long, default_value_t = mlstream::walks::WalkPolicy::DEFAULT_MAX_HOPS)]
    max_hops: usize,
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iter: usize,
}

fn parse_from_str<T: std::str::FromStr<Err = String>>(s: &str) -> Result<T, String> {
    s.parse()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MLS_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(commands::Outcome::Ok) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Violations(n)) => {
            eprintln!("{n} violation(s)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
