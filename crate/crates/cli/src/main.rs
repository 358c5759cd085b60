//! Command-line front end for the verification suites.
//!
//! Settings are merged in the order defaults < config file < ISING_STRIP_*
//! environment variables < flags. Exit status: 0 when no check failed, 1 on
//! a failed check or an internal error, 2 on a usage error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use ising_strip::config::Config;
use ising_strip::report::{VerificationReport, CSV_COLUMNS};
use ising_strip::verify::{run, Command};
use ising_strip::Error;

#[derive(Parser)]
#[command(name = "ising-strip", version, about = "Verify lattice integrals of motion of the Ising strip")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one verification suite, or all of them.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
    },
    /// Extract the conserved charges and report them per order.
    ExtractIom,
    /// Finite-size partition functions against the character prediction.
    PartitionFunction,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Inversion,
    Spectrum,
    Tl,
    Iom,
    Characters,
    FreeEnergy,
    All,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Opts {
    #[arg(long = "L", global = true, env = "ISING_STRIP_L")]
    l: Option<String>,
    #[arg(long = "max-L", global = true, env = "ISING_STRIP_MAX_L")]
    max_l: Option<String>,
    /// Boundary spin: +1, -1 or both.
    #[arg(long, global = true, env = "ISING_STRIP_B", allow_hyphen_values = true)]
    b: Option<String>,
    #[arg(long, global = true, env = "ISING_STRIP_X", allow_hyphen_values = true)]
    x: Option<String>,
    #[arg(long, global = true, env = "ISING_STRIP_U")]
    u: Option<String>,
    #[arg(long, global = true, env = "ISING_STRIP_ORDERS")]
    orders: Option<String>,
    /// double or extended.
    #[arg(long, global = true, env = "ISING_STRIP_PRECISION")]
    precision: Option<String>,
    #[arg(long, global = true, env = "ISING_STRIP_DIGITS")]
    digits: Option<String>,
    #[arg(long, global = true, env = "ISING_STRIP_TOLERANCE")]
    tolerance: Option<String>,
    #[arg(long, global = true, env = "ISING_STRIP_SEED")]
    seed: Option<String>,
    /// Highest power of q kept in character series.
    #[arg(long, global = true, env = "ISING_STRIP_TRUNCATION")]
    truncation: Option<String>,
    /// Record wall time per check.
    #[arg(long, global = true, env = "ISING_STRIP_TIMINGS")]
    timings: bool,
    /// key=value configuration file.
    #[arg(long, global = true, env = "ISING_STRIP_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, value_enum, global = true, env = "ISING_STRIP_FORMAT", default_value = "json")]
    format: Format,
    #[arg(long, global = true, env = "ISING_STRIP_OUT")]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Internal(anyhow::Error),
}

fn build_config(opts: &Opts) -> Result<Config, Failure> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            Config::from_key_values(&text).map_err(|e| Failure::Usage(e.to_string()))?
        }
        None => Config::default(),
    };
    let pairs = [
        ("L", &opts.l),
        ("max_l", &opts.max_l),
        ("b", &opts.b),
        ("x", &opts.x),
        ("u", &opts.u),
        ("orders", &opts.orders),
        ("precision", &opts.precision),
        ("digits", &opts.digits),
        ("tolerance", &opts.tolerance),
        ("seed", &opts.seed),
        ("truncation", &opts.truncation),
    ];
    for (key, value) in pairs {
        if let Some(v) = value {
            cfg.set(key, v).map_err(|e| Failure::Usage(e.to_string()))?;
        }
    }
    if opts.timings {
        cfg.timings = true;
    }
    Ok(cfg)
}

fn render(report: &VerificationReport, format: Format) -> anyhow::Result<Vec<u8>> {
    match format {
        Format::Json => {
            let mut s = report.to_json();
            s.push('\n');
            Ok(s.into_bytes())
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS)?;
            for r in &report.records {
                w.write_record(r.csv_row())?;
            }
            Ok(w.into_inner()?)
        }
    }
}

fn timestamp() -> String {
    humantime::format_rfc3339_seconds(std::time::SystemTime::now()).to_string()
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    let cfg = build_config(&cli.opts)?;
    let command = match cli.command {
        Cmd::Verify { suite } => match suite {
            Suite::Inversion => Command::Inversion,
            Suite::Spectrum => Command::Spectrum,
            Suite::Tl => Command::Tl,
            Suite::Iom => Command::Iom,
            Suite::Characters => Command::Characters,
            Suite::FreeEnergy => Command::FreeEnergy,
            Suite::All => Command::All,
        },
        Cmd::ExtractIom => Command::ExtractIom,
        Cmd::PartitionFunction => Command::PartitionFunction,
    };
    let mut outcome = run(command, &cfg);
    if let Some(Error::Config(msg)) = &outcome.error {
        return Err(Failure::Usage(msg.clone()));
    }
    outcome.report.timestamp = Some(timestamp());
    let bytes = render(&outcome.report, cli.opts.format).map_err(Failure::Internal)?;
    match &cli.opts.out {
        Some(path) => std::fs::write(path, &bytes)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Internal)?,
        None => std::io::stdout().write_all(&bytes).context("writing report").map_err(Failure::Internal)?,
    }
    if let Some(e) = outcome.error {
        return Err(Failure::Internal(anyhow::Error::new(e).context("computation aborted; report is partial")));
    }
    for (status, n) in outcome.report.summary() {
        eprintln!("{status}: {n}");
    }
    Ok(!outcome.report.has_failures())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
