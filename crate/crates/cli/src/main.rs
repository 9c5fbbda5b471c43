mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use svyknn::harness::{Preset, StudyId};

/// Design-weighted k-nearest-neighbor regression for survey samples.
#[derive(Debug, Parser)]
#[command(name = "svyknn", version, about, propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct GlobalArgs {
    /// TOML file with study settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory receiving every output file and the run manifest.
    #[arg(
        long,
        global = true,
        value_name = "DIR",
        env = "SVYKNN_OUT",
        default_value = "svyknn-out"
    )]
    pub out: PathBuf,
    /// Master seed for all random streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Scale of the study settings.
    #[arg(long, global = true, value_enum)]
    pub preset: Option<PresetArg>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the regression at given points from a weighted sample CSV.
    Estimate(commands::EstimateArgs),
    /// Scan the ball-count ratio over a grid for one simulated population.
    #[command(name = "diagnose-c4")]
    DiagnoseC4(commands::DiagnoseC4Args),
    /// Exhaustive conditional-dependence check for a small population.
    #[command(name = "diagnose-c9")]
    DiagnoseC9(commands::DiagnoseC9Args),
    /// Run one of the Monte Carlo studies.
    Study(commands::StudyArgs),
    /// Print unit-ball volume, the constant c_d and rate curves.
    Bounds(commands::BoundsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PresetArg {
    Desk,
    Paper,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Paper => Preset::Paper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyArg {
    C4,
    C9,
    Consistency,
    Wine,
}

impl From<StudyArg> for StudyId {
    fn from(s: StudyArg) -> Self {
        match s {
            StudyArg::C4 => StudyId::C4,
            StudyArg::C9 => StudyId::C9,
            StudyArg::Consistency => StudyId::Consistency,
            StudyArg::Wine => StudyId::Wine,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(threads) = cli.global.threads {
        anyhow::ensure!(threads >= 1, "--threads must be at least 1");
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()?;
    }
    match &cli.command {
        Command::Estimate(args) => commands::estimate(&cli.global, args),
        Command::DiagnoseC4(args) => commands::diagnose_c4(&cli.global, args),
        Command::DiagnoseC9(args) => commands::diagnose_c9(&cli.global, args),
        Command::Study(args) => commands::study(&cli.global, args),
        Command::Bounds(args) => commands::bounds(&cli.global, args),
    }
}
