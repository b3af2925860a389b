//! `gri`: score survey samples against population benchmarks.
//!
//! Exit codes: 0 success, 2 partial (some dimensions failed, or quarantined
//! benchmark rows), 1 fatal.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gri_core::scorecard::Format;
use gri_core::survey::HarmonizationMode;

use crate::config::{Overrides, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "gri", version, about = "Global Representativeness Index scorecards")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random draw. A random seed is chosen and printed when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fail on survey values that cannot be harmonized (default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    strict: bool,
    /// Drop respondents with unharmonizable values instead.
    #[arg(long, global = true)]
    lenient: bool,
    /// Output formats: table, json, csv, svg-heatmap. Comma-separated or repeated.
    #[arg(long, global = true, value_delimiter = ',', value_parser = parse_format)]
    format: Vec<Format>,
    /// Directory for output files. Results go to stdout when unset.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Restrict benchmarks to these countries (ISO3 codes or English names).
    #[arg(long, global = true, value_delimiter = ',')]
    countries: Option<Vec<String>>,
    /// Survey microdata CSV.
    #[arg(long, global = true)]
    survey: Option<PathBuf>,
    /// Survey identifier; defaults to the file stem.
    #[arg(long, global = true)]
    survey_id: Option<String>,
    /// Directory holding country_gender_age.csv, country_religion.csv, country_environment.csv.
    #[arg(long, global = true)]
    benchmarks: Option<PathBuf>,
    /// Country rollup CSV (country,region,continent[,name]).
    #[arg(long, global = true)]
    rollup: Option<PathBuf>,
    /// Custom dimension registry CSV (name,source,axes).
    #[arg(long, global = true)]
    registry: Option<PathBuf>,
    /// Survey column for an axis, as axis=column. Repeatable.
    #[arg(long = "column", global = true, value_parser = parse_pair)]
    columns: Vec<(String, String)>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score a survey on every registry dimension.
    Score {
        /// Also estimate max GRI and efficiency.
        #[arg(long)]
        max_gri: bool,
        /// Monte Carlo iterations.
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Monte Carlo maximum achievable GRI for one dimension.
    MaxGri {
        #[arg(long)]
        dimension: String,
        /// Sample sizes, e.g. 100,250,500,1000,2000.
        #[arg(long = "n", value_delimiter = ',', required = true)]
        n: Vec<u64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Rank strata of one dimension by their share of the TVD.
    Segments {
        #[arg(long)]
        dimension: String,
        #[arg(long, default_value_t = 10, value_parser = parse_top_k)]
        top_k: usize,
    },
    /// Check benchmark tables and the rollup.
    Validate,
    /// Longitudinal table over scorecard JSON files.
    Compare {
        #[arg(required = true)]
        scorecards: Vec<PathBuf>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse::<Format>().map_err(|e| e.to_string())
}

fn parse_top_k(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("top-k must be at least 1".into()),
        Ok(k) => Ok(k),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_pair(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(a, c)| (a.trim().to_string(), c.trim().to_string()))
        .filter(|(a, c)| !a.is_empty() && !c.is_empty())
        .ok_or_else(|| format!("expected axis=column, got {s:?}"))
}

fn overrides(global: &GlobalArgs, command: &Command) -> Overrides {
    let mode = if global.lenient {
        Some(HarmonizationMode::Lenient)
    } else if global.strict {
        Some(HarmonizationMode::Strict)
    } else {
        None
    };
    let (max_gri, iterations) = match command {
        Command::Score { max_gri, iterations } => ((*max_gri).then_some(true), *iterations),
        Command::MaxGri { iterations, .. } => (None, *iterations),
        _ => (None, None),
    };
    Overrides {
        survey: global.survey.clone(),
        survey_id: global.survey_id.clone(),
        benchmark_dir: global.benchmarks.clone(),
        rollup: global.rollup.clone(),
        registry: global.registry.clone(),
        out_dir: global.out_dir.clone(),
        countries: global.countries.clone(),
        mode,
        formats: (!global.format.is_empty()).then(|| global.format.clone()),
        columns: global.columns.clone(),
        max_gri,
        iterations,
        seed: global.seed,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let config = RunConfig::resolve(cli.global.config.as_deref(), overrides(&cli.global, &cli.command))?;
    match cli.command {
        Command::Score { .. } => commands::score(config),
        Command::MaxGri { dimension, n, .. } => commands::max_gri(config, &dimension, &n),
        Command::Segments { dimension, top_k } => commands::segments(config, &dimension, top_k),
        Command::Validate => commands::validate(config),
        Command::Compare { scorecards } => commands::compare(config, &scorecards),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
