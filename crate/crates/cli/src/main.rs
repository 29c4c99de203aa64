use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use haps_ris::ElementIndex;
use haps_ris_cli::config::{parse_quantity, Dimension};
use haps_ris_cli::run::{self, render_csv, render_json, write_atomic};
use haps_ris_cli::{CliError, RunOptions, ScenarioFile, StrategySet, SweepKind};

/// Simulator and phase design for a reconfigurable intelligent surface on a
/// circling high-altitude platform.
#[derive(Debug, Parser)]
#[command(name = "haps-ris", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Metrics at one instant for each RIS length in `[sweep] ris_lengths` (CSV).
    SweepDims(Common),
    /// Metrics over the `[sweep]` time grid for each RIS length (CSV).
    SweepTime(Common),
    /// Every metric for the `[scenario]` RIS at one instant (JSON).
    Snapshot(Common),
    /// Exhaustive discrete-phase search against the closed-form design (JSON).
    Oracle(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML).
    config: PathBuf,
    /// Output file; defaults to `[output] path`, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Reference element as `p,q` (1-based).
    #[arg(long = "ref", value_parser = parse_reference)]
    reference: Option<ElementIndex>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Snapshot instant with unit, e.g. `10 s`; overrides `[sweep] time`.
    #[arg(long)]
    time: Option<String>,
    /// Include per-element channel and phase data (snapshot only).
    #[arg(long)]
    dump_elements: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Proposed,
    Reversed,
    Both,
}

fn parse_reference(s: &str) -> Result<ElementIndex, String> {
    let (p, q) = s.split_once(',').ok_or("expected p,q")?;
    let p: usize = p.trim().parse().map_err(|e| format!("p: {e}"))?;
    let q: usize = q.trim().parse().map_err(|e| format!("q: {e}"))?;
    if p == 0 || q == 0 {
        return Err("indices are 1-based".into());
    }
    Ok(ElementIndex::new(p, q))
}

fn emit(target: Option<&Path>, text: &str) -> Result<(), CliError> {
    match target {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    let (kind, common) = match &command {
        Command::SweepDims(c) => (Some(SweepKind::Dims), c),
        Command::SweepTime(c) => (Some(SweepKind::Time), c),
        Command::Snapshot(c) | Command::Oracle(c) => (None, c),
    };
    let file = ScenarioFile::load(&common.config)?;
    let opts = RunOptions {
        strategy: common.strategy.map(|s| match s {
            StrategyArg::Proposed => StrategySet::Proposed,
            StrategyArg::Reversed => StrategySet::Reversed,
            StrategyArg::Both => StrategySet::Both,
        }),
        reference: common.reference,
        time: common
            .time
            .as_deref()
            .map(|t| parse_quantity("--time", t, Dimension::Time))
            .transpose()?,
        dump_elements: common.dump_elements,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads)
        .build()
        .expect("thread pool builds");
    let text = pool.install(|| -> Result<String, CliError> {
        Ok(match (&command, kind) {
            (_, Some(kind)) => {
                let started = std::time::Instant::now();
                let rows = match kind {
                    SweepKind::Dims => run::sweep_dims(&file, &opts)?,
                    SweepKind::Time => run::sweep_time(&file, &opts)?,
                };
                log::info!("{} rows in {:?}", rows.len(), started.elapsed());
                render_csv(kind, &file, &rows)
            }
            (Command::Snapshot(_), None) => render_json(&run::snapshot_report(&file, &opts)?),
            _ => render_json(&run::oracle_report(&file, &opts)?),
        })
    })?;
    let target = common.out.as_deref().or(file.output_path.as_deref());
    emit(target, &text)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
