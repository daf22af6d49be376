//! `infousage`: run a named experiment and write its tables, plot, and
//! pass/fail checks.

mod config;
mod output;
mod svg;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser};
use infousage_core::experiments::{self, ExperimentKind};

use config::{Format, Overrides};

/// Why a run stopped; each maps to its own exit status.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Config(String),
    Filesystem(String),
    ChecksFailed(usize),
    Internal(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Internal(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Config(_) => 3,
            Failure::Filesystem(_) => 4,
            Failure::ChecksFailed(_) => 5,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => format!("usage error: {m}"),
            Failure::Config(m) => format!("config error: {m}"),
            Failure::Filesystem(m) => format!("filesystem error: {m}"),
            Failure::ChecksFailed(n) => format!("{n} check(s) failed"),
            Failure::Internal(m) => format!("error: {m}"),
        }
    }
}

impl From<infousage_core::Error> for Failure {
    fn from(e: infousage_core::Error) -> Self {
        match e {
            infousage_core::Error::Input(m) => Failure::Usage(m),
            infousage_core::Error::Config(m) => Failure::Config(m),
            other => Failure::Internal(other.to_string()),
        }
    }
}

/// Simulate the information-usage experiments.
#[derive(Debug, Parser)]
#[command(name = "infousage", version)]
struct Cli {
    /// Experiment to run (see the list below).
    experiment: String,
    /// Random seed [default: $INFOUSAGE_SEED, else 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replications [default: per experiment, listed below].
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory [default: results].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Data file format [default: csv].
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also write an SVG line plot of the primary table.
    #[arg(long)]
    svg: bool,
    /// Exit with status 5 when any check fails.
    #[arg(long)]
    check: bool,
    /// Flat TOML file with run settings and experiment parameters.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn catalog() -> String {
    let mut s = String::from(
        "Exit status: 0 success, 2 usage, 3 config, 4 filesystem, 5 failed checks (--check).\n\
         Config keys: experiment, seed, replications, output_dir, format, emit_svg, plus the\n\
         experiment parameters below. Flags override the config file, which overrides\n\
         $INFOUSAGE_SEED.\n\nExperiments:\n",
    );
    for kind in ExperimentKind::ALL {
        let _ = writeln!(
            s,
            "  {:<15} {} [replications: {}]",
            kind.name(),
            kind.description(),
            kind.default_replications()
        );
        for p in kind.params() {
            let _ = writeln!(s, "      {:<12} {} [default: {}]", p.key, p.help, p.default);
        }
    }
    s
}

fn run(cli: Cli) -> Result<(), Failure> {
    let kind = ExperimentKind::from_name(&cli.experiment).ok_or_else(|| {
        let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
        Failure::Usage(format!("unknown experiment `{}` (choose from: {})", cli.experiment, names.join(", ")))
    })?;
    let file = match &cli.config {
        Some(path) => config::read_file_config(path, kind)?,
        None => Default::default(),
    };
    let flags = Overrides {
        seed: cli.seed,
        replications: cli.reps,
        output_dir: cli.out,
        format: cli.format,
        emit_svg: cli.svg,
    };
    let env_seed = std::env::var(config::SEED_ENV).ok();
    let cfg = config::resolve(kind, file, flags, env_seed.as_deref())?;
    let params = cfg.to_params();
    experiments::validate_params(kind, &params)?;
    output::probe_output_dir(&cfg.output_dir)?;

    let result = experiments::run(kind, &params)?;
    for path in output::write_artifacts(&result, &cfg)? {
        println!("wrote {}", path.display());
    }
    let failed = result.checks.iter().filter(|c| !c.passed).count();
    for c in &result.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if cli.check && failed > 0 {
        return Err(Failure::ChecksFailed(failed));
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = Cli::command().after_help(catalog()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("infousage: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
