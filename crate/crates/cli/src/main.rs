//! `pcd-epp`: data grids for parity-check detection and purification.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pcd_epp::pcd::{DEFAULT_HAAR_SAMPLES, DEFAULT_SEED};

use crate::commands::PlanOutcome;
use crate::config::{
    pick, CavityPoint, Common, ErrorModel, Fig4Config, Fig5Config, FileConfig, Format, PlanConfig, PurifyConfig,
    Range,
};
use crate::error::CliError;
use crate::output::{emit, render, render_error, Cell, Metadata};

const DEFAULT_GAMMA: f64 = 0.1;
const DEFAULT_TRIALS: usize = 100_000;

#[derive(Parser)]
#[command(name = "pcd-epp", version, about = "Parity-check detection and entanglement purification sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Purified fidelity and efficiency versus initial fidelity for 2, 3, 4 raw pairs.
    Fig4(Fig4Args),
    /// Haar-averaged detector fidelities and efficiencies over a (g, kappa_s) grid.
    Fig5(Fig5Args),
    /// Coefficients and averaged figures at one cavity point.
    PcdPoint(PointArgs),
    /// Monte Carlo run of one purification round.
    PurifyMc(PurifyArgs),
    /// Fewest raw pairs that reach a threshold fidelity.
    Plan(PlanArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    /// Haar samples per grid point, or Monte Carlo trials.
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Args)]
struct Fig4Args {
    #[command(flatten)]
    common: CommonArgs,
    /// Initial-fidelity grid as start:step:stop.
    #[arg(long, value_name = "RANGE")]
    fidelity: Option<Range>,
}

#[derive(Args)]
struct Fig5Args {
    #[command(flatten)]
    common: CommonArgs,
    /// g/kappa grid as start:step:stop.
    #[arg(long, value_name = "RANGE")]
    g: Option<Range>,
    /// kappa_s/kappa grid as start:step:stop.
    #[arg(long, value_name = "RANGE")]
    kappa_s: Option<Range>,
    /// gamma/kappa.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    kappa_s: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Args)]
struct PurifyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Initial fidelity of both input pairs.
    #[arg(long)]
    fidelity: Option<f64>,
    #[arg(long, value_enum)]
    error: Option<ErrorModel>,
    /// g/kappa of a practical cavity; ideal coefficients when no cavity
    /// parameter is given.
    #[arg(long)]
    g: Option<f64>,
    #[arg(long)]
    kappa_s: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Also write one record per trial to this file.
    #[arg(long, value_name = "PATH")]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    initial: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Crossover table length (extended to the plan's leaf count if larger).
    #[arg(long)]
    max_leaves: Option<u32>,
}

fn resolve_common(args: &CommonArgs, file: &FileConfig) -> Result<Common, CliError> {
    let common = Common {
        seed: pick(args.seed, file.seed, DEFAULT_SEED),
        samples: pick(args.samples, file.samples, DEFAULT_HAAR_SAMPLES),
        threads: args.threads.or(file.threads),
        format: pick(args.format, file.format, Format::Csv),
        out: args.out.clone().or_else(|| file.out.clone()),
    };
    if common.samples == 0 {
        return Err(CliError::Config("samples must be at least 1".into()));
    }
    if common.threads == Some(0) {
        return Err(CliError::Config("threads must be at least 1".into()));
    }
    Ok(common)
}

fn load(args: &CommonArgs) -> Result<(FileConfig, Common), CliError> {
    let file = match &args.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let common = resolve_common(args, &file)?;
    Ok((file, common))
}

fn default_range(s: &str) -> Range {
    s.parse().expect("built-in ranges are valid")
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common_args = match &cli.command {
        Command::Fig4(a) => &a.common,
        Command::Fig5(a) => &a.common,
        Command::PcdPoint(a) => &a.common,
        Command::PurifyMc(a) => &a.common,
        Command::Plan(a) => &a.common,
    };
    let (file, common) = load(common_args)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute(&cli.command, &file, &common))
}

fn execute(command: &Command, file: &FileConfig, common: &Common) -> Result<(), CliError> {
    let out = common.out.as_deref();
    match command {
        Command::Fig4(a) => {
            let cfg = Fig4Config {
                fidelity: pick(a.fidelity, file.fig4.fidelity, default_range("0.5:0.01:1.0")),
            };
            let table = commands::fig4(&cfg)?;
            emit(&render(&Metadata::new("fig4", None, &cfg), &table, common.format)?, out)
        }
        Command::Fig5(a) => {
            let cfg = Fig5Config {
                g: pick(a.g, file.fig5.g, default_range("1.0:0.25:3.0")),
                kappa_s: pick(a.kappa_s, file.fig5.kappa_s, default_range("0:0.05:0.3")),
                gamma: pick(a.gamma, file.fig5.gamma, DEFAULT_GAMMA),
                samples: common.samples,
                seed: common.seed,
            };
            let table = commands::fig5(&cfg)?;
            emit(&render(&Metadata::new("fig5", Some(cfg.seed), &cfg), &table, common.format)?, out)
        }
        Command::PcdPoint(a) => {
            let s = &file.pcd_point;
            let point = CavityPoint {
                g: pick(a.g, s.g, 2.0),
                kappa_s: pick(a.kappa_s, s.kappa_s, 0.0),
                gamma: pick(a.gamma, s.gamma, DEFAULT_GAMMA),
            };
            let table = commands::pcd_point(point, common.samples, common.seed)?;
            #[derive(serde::Serialize)]
            struct Echo {
                #[serde(flatten)]
                point: CavityPoint,
                samples: usize,
                seed: u64,
            }
            let echo = Echo {
                point,
                samples: common.samples,
                seed: common.seed,
            };
            emit(&render(&Metadata::new("pcd-point", Some(common.seed), &echo), &table, common.format)?, out)
        }
        Command::PurifyMc(a) => {
            let s = &file.purify_mc;
            let g = a.g.or(s.g);
            let kappa_s = a.kappa_s.or(s.kappa_s);
            let gamma = a.gamma.or(s.gamma);
            let cavity = (g.is_some() || kappa_s.is_some() || gamma.is_some()).then(|| CavityPoint {
                g: g.unwrap_or(2.0),
                kappa_s: kappa_s.unwrap_or(0.0),
                gamma: gamma.unwrap_or(DEFAULT_GAMMA),
            });
            let error = pick(a.error, s.error, ErrorModel::Bit);
            let cfg = PurifyConfig {
                fidelity: pick(a.fidelity, s.fidelity, 0.8),
                error,
                cavity,
                trials: pick(common_trials(a), file.samples, DEFAULT_TRIALS),
                seed: common.seed,
                hadamard_first: error == ErrorModel::Phase,
            };
            if cfg.trials == 0 {
                return Err(CliError::Config("samples must be at least 1".into()));
            }
            let log_path = a.log.clone().or_else(|| s.log.clone());
            let (table, log) = commands::purify_mc(&cfg, log_path.is_some())?;
            let meta = Metadata::new("purify-mc", Some(cfg.seed), &cfg);
            if let (Some(path), Some(log)) = (&log_path, &log) {
                emit(&render(&meta, log, common.format)?, Some(path))?;
            }
            emit(&render(&meta, &table, common.format)?, out)
        }
        Command::Plan(a) => {
            let s = &file.plan;
            let cfg = PlanConfig {
                initial: pick(a.initial, s.initial, 0.8),
                threshold: pick(a.threshold, s.threshold, 0.98),
                max_leaves: pick(a.max_leaves, s.max_leaves, 8),
            };
            let meta = Metadata::new("plan", None, &cfg);
            match commands::plan(&cfg)? {
                PlanOutcome::Found(table) => emit(&render(&meta, &table, common.format)?, out),
                PlanOutcome::Unpurifiable(message) => {
                    let fields = [
                        ("initial_fidelity", Cell::from(cfg.initial)),
                        ("threshold_fidelity", Cell::from(cfg.threshold)),
                    ];
                    let bytes = render_error(&meta, "unpurifiable", &message, common.format, &fields)?;
                    emit(&bytes, out)?;
                    Err(CliError::Reported(message))
                }
            }
        }
    }
}

/// Trials come from `--samples` when given; the file-level `samples` key is
/// the fallback, then the built-in default.
fn common_trials(a: &PurifyArgs) -> Option<usize> {
    a.common.samples
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
