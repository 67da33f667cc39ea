use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use batchmac::experiment::{
    parse_config, profile_for, run_experiment, write_profile_csv, ExperimentConfig,
    ExperimentError, OutputFormat,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "batchmac",
    version,
    about = "Batch-arrival models for slotted CSMA/CA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate chains, simulation and enumeration over the configured sweep.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output file; defaults to the config's `out` key, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Dump the attempt profile a(t) and stage distributions as CSV.
    Profile {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
    let text = fs::read_to_string(path)?;
    Ok(parse_config(&text)?)
}

fn with_sink(
    out: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            body(&mut w)?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()
        }
    }
}

fn run(command: Command) -> Result<(), ExperimentError> {
    match command {
        Command::Run {
            config,
            out,
            format,
        } => {
            let mut cfg = load(&config)?;
            if let Some(f) = format {
                cfg.format = match f {
                    Format::Csv => OutputFormat::Csv,
                    Format::Json => OutputFormat::Json,
                };
            }
            let out = out.or_else(|| cfg.out.clone());
            let report = run_experiment(&cfg)?;
            with_sink(out.as_deref(), |mut w| match cfg.format {
                OutputFormat::Csv => report.write_csv(&mut w),
                OutputFormat::Json => report.write_json(&mut w),
            })?;
            if report.rows().iter().any(|r| r.s_n_leibnitz.is_some()) {
                eprintln!("note: S_N_leibnitz is the literal departure count on the original chain (known-incorrect)");
            }
            for line in report.kernel_tracking() {
                eprintln!("{line}");
            }
        }
        Command::Profile { config } => {
            let cfg = load(&config)?;
            let profile = profile_for(&cfg)?;
            with_sink(None, |mut w| write_profile_csv(&profile, &mut w))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("batchmac: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
