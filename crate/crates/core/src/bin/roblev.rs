//! Command-line front end for the leverage diagnostics pipeline.

use clap::{Parser, ValueEnum};
use roblev::data::Dataset;
use roblev::mcd::McdConfig;
use roblev::output::{write_report, OutputFormat};
use roblev::pipeline::{run, RunConfig};
use roblev::repro::reproduce;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "roblev",
    version,
    about = "Classical and robust leverage diagnostics for linear regression designs",
    after_help = "Exit codes: 0 ok, 2 usage/output, 3 data parse, 4 formula, \
                  5 rank-deficient design, 6 MCD exact fit or singularity, \
                  7 modified-design singularity."
)]
struct Cli {
    /// Input CSV file (header row required)
    #[arg(long)]
    data: Option<PathBuf>,

    /// Model formula, e.g. "~ Age10 + Base4 * Trt"
    #[arg(long)]
    formula: Option<String>,

    /// Columns to treat as categorical even if numeric (comma-separated)
    #[arg(long, value_delimiter = ',')]
    categorical: Vec<String>,

    /// MCD subset fraction in [0.5, 1]; 0.5 = maximal breakdown, 1 = classical
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,

    /// Random elemental starts when full enumeration is too large
    #[arg(long, default_value_t = 500)]
    ntrials: usize,

    /// Chi-square probability for the MCD reweighting cutoff
    #[arg(long, default_value_t = 0.975)]
    reweight_prob: f64,

    /// Seed for the MCD subset sampling
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Disable the finite-sample correction factors
    #[arg(long)]
    no_small_sample: bool,

    /// Use this rescale factor c instead of the computed one
    #[arg(long)]
    c_override: Option<f64>,

    /// Report format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,

    /// Flag observations with robust hat value above this (default 2p/n)
    #[arg(long)]
    flag_cutoff: Option<f64>,

    /// Run the bundled epilepsy example and compare against the published values
    #[arg(long)]
    reproduce_paper: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), roblev::Error> {
    if cli.reproduce_paper {
        return reproduce_mode(cli.seed);
    }

    let (data_path, formula) = match (&cli.data, &cli.formula) {
        (Some(d), Some(f)) => (d, f.clone()),
        _ => {
            eprintln!("error: --data and --formula are required (or use --reproduce-paper)");
            eprintln!("run `roblev --help` for usage");
            std::process::exit(2);
        }
    };

    let dataset = Dataset::from_csv_path(data_path, &cli.categorical)?;
    let cfg = RunConfig {
        formula,
        mcd: McdConfig {
            alpha: cli.alpha,
            n_trials: cli.ntrials,
            reweight_prob: cli.reweight_prob,
            seed: cli.seed,
            small_sample_correction: !cli.no_small_sample,
            c_override: cli.c_override,
            ..McdConfig::default()
        },
        flag_cutoff: cli.flag_cutoff,
    };
    let output = run(&cfg, &dataset)?;
    let format = match cli.format {
        Format::Csv => OutputFormat::Csv,
        Format::Json => OutputFormat::Json,
    };
    write_report(&output, format, cli.out.as_deref())
}

fn reproduce_mode(seed: u64) -> Result<(), roblev::Error> {
    let result = reproduce(seed)?;
    println!("epilepsy reproduction (n = {}, seed = {seed})", result.output.report.n);
    println!(
        "h = {}, sum_w = {}, c = {:.7}",
        result.output.h, result.output.report.sum_w, result.output.report.c
    );
    for check in &result.checks {
        println!(
            "{}: {} — {}",
            if check.pass { "PASS" } else { "FAIL" },
            check.label,
            check.detail
        );
    }
    for note in &result.notes {
        println!("{note}");
    }
    let (passed, total) =
        (result.checks.iter().filter(|c| c.pass).count(), result.checks.len());
    println!("{passed}/{total} comparisons passed");
    Ok(())
}
