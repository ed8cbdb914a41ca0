use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asel_cli::{cmd_export_heatmap, cmd_run, cmd_validate, CliError, CliResult, ExperimentConfig, HeatmapKind, Overrides};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "asel", version, about = "Algorithm selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the partitioning seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for fold-level parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the output directory of the configuration.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate every configured selector and write the reports.
    Run { config: PathBuf },
    /// Export an instance-by-column matrix for plotting.
    ExportHeatmap {
        config: PathBuf,
        #[arg(long, value_enum)]
        kind: HeatmapKind,
        /// Selector to use for `par` and `rank-diff`.
        #[arg(long)]
        selector: Option<String>,
    },
    /// Check a configuration and its data without training.
    Validate { config: PathBuf },
}

fn load(path: &Path, overrides: &Overrides) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    overrides.apply(&mut cfg);
    Ok(cfg)
}

fn execute(cli: Cli) -> CliResult<()> {
    let overrides = Overrides {
        seed: cli.seed,
        output_dir: cli.output_dir,
    };
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config, &overrides)?;
            let report = cmd_run(&cfg)?;
            for s in &report.scores {
                println!("{}", s.summary_row().join("\t"));
            }
            eprintln!("wrote {}", report.summary.display());
        }
        Command::ExportHeatmap { config, kind, selector } => {
            let cfg = load(&config, &overrides)?;
            let path = cmd_export_heatmap(&cfg, kind, selector.as_deref())?;
            eprintln!("wrote {}", path.display());
        }
        Command::Validate { config } => {
            let cfg = load(&config, &overrides)?;
            println!("{}", cmd_validate(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.jobs {
        Some(0) => Err(CliError::invalid("--jobs must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(CliError::runtime)
            .and_then(|pool| pool.install(|| execute(cli))),
        None => execute(cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
