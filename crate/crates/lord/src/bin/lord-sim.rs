//! Command-line Monte Carlo driver for the two-antenna MIMO link simulator.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lord::simkit::{
    parse_key_values, parse_snr_grid, run, BitMetric, LinkMode, SimConfig,
};
use lord::Error;

const NOTES: &str = "\
The SNR grid is Es/N0 per receive antenna in dB, where Es is the total
transmit energy per channel use (split evenly across the two antennas)
and N0 is the total noise variance per receive antenna.

CSV columns: snr_db,trials,bits,bit_errors,ber,words,word_errors,wer,seconds.
Uncoded runs count one word per symbol vector and 2*log2(mod) bits per
trial; coded runs count one word per 66-bit frame and its information bits.

A config file holds one key=value pair per line ('#' starts a comment)
with keys mod, detector, metric, link, lr, snr-db, trials, target-errors,
fading, seed, workers. Command-line flags override file values.";

/// Monte Carlo link simulator for two-antenna MIMO detection.
#[derive(Parser, Debug)]
#[command(name = "lord-sim", version, after_help = NOTES)]
struct Cli {
    /// Constellation order per antenna: 4, 16, or 64
    #[arg(long = "mod", value_name = "ORDER")]
    modulation: Option<usize>,

    /// Detection algorithm: lord, zf, or ml
    #[arg(long, value_name = "NAME")]
    detector: Option<String>,

    /// Feed bit LLRs to the decoder (default)
    #[arg(long, conflicts_with = "hard")]
    soft: bool,

    /// Feed hard bit decisions to the decoder
    #[arg(long)]
    hard: bool,

    /// Simulate the convolutionally coded frame chain
    #[arg(long, conflicts_with = "uncoded")]
    coded: bool,

    /// Simulate raw symbol transmission (default)
    #[arg(long)]
    uncoded: bool,

    /// Number of receive antennas, at least 2
    #[arg(long, value_name = "N")]
    lr: Option<usize>,

    /// SNR grid in dB: a single value or start:step:stop
    #[arg(long = "snr-db", value_name = "GRID")]
    snr_db: Option<String>,

    /// Maximum trials (symbol vectors or frames) per SNR point
    #[arg(long, value_name = "N")]
    trials: Option<u64>,

    /// Stop a point early after this many word errors
    #[arg(long = "target-errors", value_name = "N")]
    target_errors: Option<u64>,

    /// Channel dynamics inside a coded frame: fast or block
    #[arg(long, value_name = "MODE")]
    fading: Option<String>,

    /// Base seed for the reproducible random streams
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads; the results do not depend on this
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Read key=value defaults from this file
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

fn apply(cfg: &mut SimConfig, key: &str, value: &str) -> lord::Result<()> {
    let bad = |what: &str| Error::InvalidConfig(format!("bad {what} value {value:?}"));
    match key {
        "mod" => cfg.order = value.parse().map_err(|_| bad("mod"))?,
        "detector" => cfg.detector = value.parse()?,
        "metric" => cfg.metric = value.parse()?,
        "link" => cfg.link = value.parse()?,
        "lr" => cfg.lr = value.parse().map_err(|_| bad("lr"))?,
        "snr-db" => cfg.snr_grid_db = parse_snr_grid(value)?,
        "trials" => cfg.trials = value.parse().map_err(|_| bad("trials"))?,
        "target-errors" => {
            cfg.target_errors = value.parse().map_err(|_| bad("target-errors"))?
        }
        "fading" => cfg.fading = value.parse()?,
        "seed" => cfg.seed = value.parse().map_err(|_| bad("seed"))?,
        "workers" => cfg.workers = value.parse().map_err(|_| bad("workers"))?,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown config key {other:?}"
            )))
        }
    }
    Ok(())
}

fn build_config(cli: &Cli) -> Result<SimConfig, Box<dyn std::error::Error>> {
    let mut cfg = SimConfig::default();
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)?;
        for (key, value) in parse_key_values(&text)? {
            apply(&mut cfg, &key, &value)?;
        }
    }
    if let Some(v) = cli.modulation {
        cfg.order = v;
    }
    if let Some(v) = &cli.detector {
        cfg.detector = v.parse()?;
    }
    if cli.soft {
        cfg.metric = BitMetric::Soft;
    }
    if cli.hard {
        cfg.metric = BitMetric::Hard;
    }
    if cli.coded {
        cfg.link = LinkMode::Coded;
    }
    if cli.uncoded {
        cfg.link = LinkMode::Uncoded;
    }
    if let Some(v) = cli.lr {
        cfg.lr = v;
    }
    if let Some(v) = &cli.snr_db {
        cfg.snr_grid_db = parse_snr_grid(v)?;
    }
    if let Some(v) = cli.trials {
        cfg.trials = v;
    }
    if let Some(v) = cli.target_errors {
        cfg.target_errors = v;
    }
    if let Some(v) = &cli.fading {
        cfg.fading = v.parse()?;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.workers {
        cfg.workers = v;
    }
    Ok(cfg)
}

fn run_cli() -> Result<(), Box<dyn std::error::Error>> {
    let cli = Cli::parse();
    let cfg = build_config(&cli)?;
    let result = run(&cfg)?;
    match &cli.out {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            result.write_csv(&mut file)?;
        }
        None => {
            let stdout = std::io::stdout();
            result.write_csv(&mut stdout.lock())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run_cli() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
