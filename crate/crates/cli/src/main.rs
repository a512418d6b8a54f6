use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod io;

use config::RunConfig;
use error::{CliError, input};

#[derive(Debug, Parser)]
#[command(name = "stot-nts", version, about = "Stochastic-tail NTS estimation, simulation and option pricing")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Monte-Carlo paths (overrides `simulation.paths`).
    #[arg(long, global = true)]
    paths: Option<usize>,

    /// Simulation horizon in steps (overrides `simulation.steps`).
    #[arg(long, global = true)]
    steps: Option<usize>,

    /// Rolling estimation window (overrides `fit.window`).
    #[arg(long, global = true)]
    window: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Use the dividend-adjusted drift `r - d`.
    #[arg(long, global = true)]
    use_dividend: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rolling ARMA(1,1)-GARCH(1,1) fits; writes parameters and residual sets.
    FitGarch { returns: Option<PathBuf> },
    /// Tail shape, per-window B and ARIMA(1,1,0) dynamics from residual sets.
    FitTails { residuals: Option<PathBuf> },
    /// Risk-neutral scenario cube.
    Simulate,
    /// European option prices on the configured strike/maturity grid.
    Price,
    /// Calibrates the stochastic-tail and constant-tail models to an option chain.
    Calibrate { chain: Option<PathBuf> },
    /// Error measures and paired t-tests from calibrated model prices.
    Evaluate { prices: Option<PathBuf> },
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::empty(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(m) = cli.paths {
        cfg.simulation.paths = m;
    }
    if let Some(t) = cli.steps {
        cfg.simulation.steps = t;
    }
    if let Some(w) = cli.window {
        cfg.fit.window = w;
    }
    cfg.simulation.use_dividend |= cli.use_dividend;
    let inp = &mut cfg.input;
    match &cli.command {
        Command::FitGarch { returns: Some(p) } => inp.returns = Some(p.clone()),
        Command::FitTails { residuals: Some(p) } => inp.residuals = Some(p.clone()),
        Command::Calibrate { chain: Some(p) } => inp.chain = Some(p.clone()),
        Command::Evaluate { prices: Some(p) } => inp.prices = Some(p.clone()),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    std::fs::create_dir_all(&cli.out).map_err(|e| CliError::io(&cli.out, e))?;
    if !cli.out.is_dir() {
        return Err(input(format!("{} is not a directory", cli.out.display())));
    }
    match cli.command {
        Command::FitGarch { .. } => commands::fit_garch(&cfg, &cli.out),
        Command::FitTails { .. } => commands::fit_tails(&cfg, &cli.out),
        Command::Simulate => commands::simulate(&cfg, &cli.out),
        Command::Price => commands::price(&cfg, &cli.out),
        Command::Calibrate { .. } => commands::calibrate(&cfg, &cli.out),
        Command::Evaluate { .. } => commands::evaluate(&cfg, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
