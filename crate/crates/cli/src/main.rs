//! `singular-forge`: construct polynomials with prescribed braid links at the
//! origin, certify them numerically and emit plottable artifacts.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Job, Overrides};
use error::CliError;

#[derive(Parser)]
#[command(name = "singular-forge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build p and write poly.json and poly.txt.
    Construct {
        #[command(flatten)]
        common: Common,
    },
    /// Run certificates and write certificates.json.
    Certify {
        #[command(flatten)]
        common: Common,
        /// arg-crit, isolation, sphere-link, d-regular, radial-identity or all.
        #[arg(long, value_delimiter = ',')]
        check: Vec<String>,
        /// Certify this poly.json instead of constructing one.
        #[arg(long)]
        poly: Option<PathBuf>,
    },
    /// Sweep b over a log-spaced range with the argument-critical scan.
    ScanB {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        b_min: Option<f64>,
        #[arg(long)]
        b_max: Option<f64>,
        #[arg(long)]
        b_steps: Option<usize>,
    },
    /// Write the zero set on each sphere to curves.csv.
    SampleCurve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        poly: Option<PathBuf>,
    },
    /// Print a braid word and its predicates.
    Word {
        #[command(flatten)]
        common: Common,
        /// Signed generator indices, e.g. "1,-2".
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        word: Option<Vec<i64>>,
        #[arg(long)]
        strands: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON or TOML job file (by extension).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    ell: Option<u32>,
    #[arg(long)]
    r: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    /// Radial exponent for a, as "p/q" or a number; needs --q2.
    #[arg(long)]
    q1: Option<String>,
    #[arg(long)]
    q2: Option<String>,
    /// Replace the parametrisation by its square (t -> 2t).
    #[arg(long)]
    square: bool,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Start λ-tuning from this value (certify only).
    #[arg(long, allow_hyphen_values = true)]
    lambda0: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    radii: Option<Vec<f64>>,
    #[arg(long)]
    t_samples: Option<usize>,
    #[arg(long)]
    r_samples: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            s: self.s,
            ell: self.ell,
            r: self.r,
            a: self.a,
            b: self.b,
            k: self.k,
            q1: self.q1.clone(),
            q2: self.q2.clone(),
            lambda: self.lambda,
            lambda0: self.lambda0,
            square: self.square,
            radii: self.radii.clone(),
            t_samples: self.t_samples,
            r_samples: self.r_samples,
            ..Overrides::default()
        }
    }

    fn job(&self, extra: impl FnOnce(&mut Overrides)) -> Result<Job, CliError> {
        let mut o = self.overrides();
        extra(&mut o);
        Job::resolve(config::config_path(&self.config)?, o)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Construct { common } => commands::construct(&common.job(|_| {})?, &common.out),
        Command::Certify { common, check, poly } => {
            let job = common.job(|o| o.checks = check)?;
            commands::certify(&job, poly.as_deref(), &common.out)
        }
        Command::ScanB { common, b_min, b_max, b_steps } => {
            let job = common.job(|o| o.scan = (b_min, b_max, b_steps))?;
            commands::scan_b(&job, &common.out)
        }
        Command::SampleCurve { common, poly } => {
            commands::sample_curve(&common.job(|_| {})?, poly.as_deref(), &common.out)
        }
        Command::Word { common, word, strands } => {
            let job = common.job(|o| {
                o.word = word;
                o.strands = strands;
            })?;
            commands::word(&job)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
