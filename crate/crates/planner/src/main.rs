use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use secrecy_core::secgap::Scheme;
use secrecy_planner::{run, Experiment, ExperimentConfig, PlannerError};

#[derive(Parser)]
#[command(
    name = "secrecy-planner",
    version,
    about = "Secrecy outage, security gap and allocation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML config; keys override the experiment's default preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Cps,
    Cas,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Optimal,
    Waterfilling,
    Equal,
}

#[derive(Subcommand)]
enum Command {
    /// Eve threshold and security gap with equal Bob gains.
    Table1(Common),
    /// Statistical-Bob threshold and (omega, eps) security gap.
    Table2(Common),
    /// Distribution of the security gap over Bob's gains.
    SecgapCdf(Common),
    /// K = 2 rate grid for one scheme and power strategy.
    Contours {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(long, value_enum)]
        strategy: Option<StrategyArg>,
    },
    /// Channel selection with uniform power (CAS).
    Selection(Common),
    /// Equivocation rate and constrained secrecy rate curves.
    Equivocation(Common),
    /// One secrecy outage probability.
    Outage(Common),
    /// One optimal CPS or CAS allocation.
    Optimize(Common),
}

fn execute(cli: Cli) -> Result<(), PlannerError> {
    let (experiment, common, scheme, strategy) = match cli.command {
        Command::Table1(c) => (Experiment::Table1, c, None, None),
        Command::Table2(c) => (Experiment::Table2, c, None, None),
        Command::SecgapCdf(c) => (Experiment::SecgapCdf, c, None, None),
        Command::Contours {
            common,
            scheme,
            strategy,
        } => (Experiment::Contours, common, scheme, strategy),
        Command::Selection(c) => (Experiment::Selection, c, None, None),
        Command::Equivocation(c) => (Experiment::Equivocation, c, None, None),
        Command::Outage(c) => (Experiment::Outage, c, None, None),
        Command::Optimize(c) => (Experiment::Optimize, c, None, None),
    };
    let scheme = scheme.map(|s| match s {
        SchemeArg::Cps => Scheme::Cps,
        SchemeArg::Cas => Scheme::Cas,
    });
    let mut cfg = ExperimentConfig::load(common.config.as_deref(), experiment.default_preset(scheme))?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if let Some(s) = scheme {
        cfg.set_scheme(if s == Scheme::Cps { "cps" } else { "cas" });
    }
    if let Some(s) = strategy {
        cfg.set_strategy(match s {
            StrategyArg::Optimal => "optimal",
            StrategyArg::Waterfilling => "waterfilling",
            StrategyArg::Equal => "equal",
        });
    }
    let table = run(experiment, &cfg)?;
    let io_err = |e| PlannerError::Io {
        path: common.out.clone(),
        source: e,
    };
    let file = File::create(&common.out).map_err(io_err)?;
    table.write_csv(BufWriter::new(file))
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
