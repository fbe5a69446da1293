//! `acovlab`: simulate long-memory linear processes, sample the limit laws
//! of their sample autocovariances and run convergence experiments.
//!
//! Exit status: 0 on success, 1 on usage or validation errors, 2 when an
//! experiment ran but one of its verdicts failed.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::Value;

use config::{ConfigError, ConfigFile};
use output::{Format, Summary, Writer};

#[derive(Debug, Parser)]
#[command(name = "acovlab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file, or an inline JSON document starting with `{`.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Master seed; overrides the config's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all available cores. Outputs do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[arg(long, global = true, default_value = "acovlab-out")]
    out_dir: PathBuf,
    /// Run at a regime boundary using the neighbouring region's law.
    #[arg(long, global = true)]
    allow_boundary: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one path per N.
    Simulate,
    /// Theoretical and sample autocovariances per N.
    Acov,
    /// Classify (moment class, d) into a convergence region.
    Regime {
        /// Tail index; omit for a finite fourth moment.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
    },
    /// Draws from the limit law of the config's regime.
    LimitSample {
        /// Number of draws; defaults to the config's `limit_draws`.
        #[arg(long)]
        draws: Option<usize>,
    },
    /// Distributional convergence experiment over the N grid.
    McRun,
    /// Growth rate of the variance of the off-diagonal sum.
    VarianceRate,
    /// Empirical rate exponents for the config's `cells`.
    PhaseDiagram,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Acov => "acov",
            Command::Regime { .. } => "regime",
            Command::LimitSample { .. } => "limit-sample",
            Command::McRun => "mc-run",
            Command::VarianceRate => "variance-rate",
            Command::PhaseDiagram => "phase-diagram",
        }
    }
}

fn run(cli: &Cli) -> Result<bool, ConfigError> {
    let start = Instant::now();
    let mut cfg = match &cli.config {
        Some(arg) => ConfigFile::load(arg)?,
        None => ConfigFile::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let allow = cli.allow_boundary;
    let report = acovlab::exec::with_workers(cli.workers, || match &cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::Acov => commands::acov(&cfg),
        Command::Regime { alpha, d } => commands::regime_report(&cfg, *alpha, *d),
        Command::LimitSample { draws } => commands::limit_sample(&cfg, *draws, allow),
        Command::McRun => commands::mc_run(&cfg, allow),
        Command::VarianceRate => commands::variance_rate(&cfg),
        Command::PhaseDiagram => commands::phase(&cfg),
    })?;

    let mut params = serde_json::to_value(&cfg).expect("config serializes");
    if let Value::Object(map) = &mut params {
        map.insert("allow_boundary".into(), allow.into());
        map.extend(report.extra_params.clone());
    }
    let summary = Summary {
        command: cli.command.name(),
        params,
        metrics: report.metrics.clone(),
        verdicts: serde_json::to_value(&report.verdicts).expect("verdicts serialize"),
        seed: cfg.seed,
    };
    let io = |e: std::io::Error| ConfigError(format!("cannot write to {}: {e}", cli.out_dir.display()));
    let mut writer = Writer::new(&cli.out_dir, cli.format).map_err(io)?;
    for table in &report.tables {
        writer.table(table).map_err(io)?;
    }
    writer.summary(&summary).map_err(io)?;
    let workers = match cli.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        w => w,
    };
    writer
        .manifest(&summary, workers, start.elapsed().as_secs_f64())
        .map_err(io)?;
    // A closed stdout (e.g. piped into `head`) is not an error; the files are written.
    let _ = writeln!(
        std::io::stdout().lock(),
        "{}",
        serde_json::to_string_pretty(&summary.metrics).expect("metrics serialize")
    );
    for v in &report.verdicts {
        eprintln!("{:?}: {} = {} (threshold {})", v.outcome, v.name, v.value, v.threshold);
    }
    Ok(report.failed())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
