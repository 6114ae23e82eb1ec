use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use nanostore::config::Config;
use nanostore::io::TraceFormat;
use nanostore::pipeline::{self, Command, RunRequest};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Simulate,
    Detect,
    Decode,
    Roundtrip,
    Stats,
    Capacity,
    Ivcurve,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Detect => Command::Detect,
            Cmd::Decode => Command::Decode,
            Cmd::Roundtrip => Command::Roundtrip,
            Cmd::Stats => Command::Stats,
            Cmd::Capacity => Command::Capacity,
            Cmd::Ivcurve => Command::Ivcurve,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Bin,
    Csv,
}

/// Nanopore storage read-channel simulator, detector and decoder.
#[derive(Debug, Parser)]
#[command(name = "nanostore", version)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Flat `section.key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides channel.voltage_mv.
    #[arg(long)]
    voltage_mv: Option<f64>,
    /// Overrides sim.duration_s and stats.duration_s.
    #[arg(long)]
    duration_s: Option<f64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "bin")]
    format: Format,
    /// Trace for `detect`, event CSV for `decode`.
    #[arg(long)]
    input: Option<PathBuf>,
}

fn run(args: Args) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Config::parse(&text).with_context(|| format!("in {}", path.display()))?
        }
        None => Config::default(),
    };
    if let Some(v) = args.voltage_mv {
        config.channel.voltage_mv = v;
    }
    if let Some(t) = args.duration_s {
        config.sim.duration_s = t;
        config.stats.duration_s = t;
    }
    let command = Command::from(args.command);
    let req = RunRequest {
        command,
        config,
        seed: args.seed,
        out_dir: args.out.clone(),
        format: match args.format {
            Format::Bin => TraceFormat::Bin,
            Format::Csv => TraceFormat::Csv,
        },
        input: args.input,
    };
    let manifest = pipeline::run_pipeline(&req)?;
    let mut stdout = std::io::stdout().lock();
    let summary = match command {
        Command::Capacity => Some("capacity.txt"),
        Command::Roundtrip => Some("score.txt"),
        _ => None,
    };
    if let Some(name) = summary {
        write!(stdout, "{}", std::fs::read_to_string(args.out.join(name))?)?;
    }
    for (name, digest) in &manifest.outputs {
        writeln!(stdout, "{}  {}", digest, args.out.join(name).display())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
