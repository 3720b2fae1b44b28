//! `trapspec` command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure, 64 usage.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};
use serde_json::json;
use trapspec::{Error, Result};

use commands::{Kind, PseudoArgs, Which};
use config::RunConfig;
use output::{config_hash, Emitter, Format};

#[derive(Debug, Parser)]
#[command(
    name = "trapspec",
    version,
    about = "Photoassociation spectra of trapped atom pairs"
)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides outputs.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Vibrational levels of one curve in each trap.
    Solve {
        #[arg(long, value_enum, default_value_t = Which::Initial)]
        curve: Which,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Transition strengths for every trap frequency.
    Spectrum,
    /// Box-method scattering length of the initial curve.
    Scatlen,
    /// Contact-model roots, series check and f_c.
    Pseudo {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        xi: Vec<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long = "a-bohr", value_delimiter = ',', allow_hyphen_values = true)]
        a_bohr: Vec<f64>,
    },
    /// Enhancement factors of one spectrum against a reference spectrum.
    Compare {
        #[arg(long)]
        spectrum: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::F)]
        kind: Kind,
    },
    /// g_c surface over trap frequency and mass factor, with checkpointing.
    Sweep,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve { .. } => "solve",
            Command::Spectrum => "spectrum",
            Command::Scatlen => "scatlen",
            Command::Pseudo { .. } => "pseudo",
            Command::Compare { .. } => "compare",
            Command::Sweep => "sweep",
        }
    }
}

fn file_hash(path: &PathBuf) -> Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(config_hash(&json!(String::from_utf8_lossy(&bytes))))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(Error::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let loaded = cli.config.as_deref().map(RunConfig::load).transpose()?;
    let cfg = loaded.as_ref().map(|(c, _)| c);
    let need =
        || cfg.ok_or_else(|| Error::Config(format!("{} needs --config", cli.command.name())));

    // Commands that can run without a config hash their arguments instead.
    let hash = match (&loaded, &cli.command) {
        (Some((_, value)), _) => config_hash(value),
        (
            None,
            Command::Pseudo {
                xi,
                count,
                order,
                a_bohr,
            },
        ) => config_hash(
            &json!({ "command": "pseudo", "xi": xi, "count": count, "order": order, "a_bohr": a_bohr }),
        ),
        (
            None,
            Command::Compare {
                spectrum,
                reference,
                kind,
            },
        ) => config_hash(&json!({
            "command": "compare",
            "spectrum": file_hash(spectrum)?,
            "reference": file_hash(reference)?,
            "kind": format!("{kind:?}"),
        })),
        (None, _) => {
            return Err(Error::Config(format!(
                "{} needs --config",
                cli.command.name()
            )))
        }
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.map(|c| c.outputs.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let em = Emitter::new(&dir, cli.format, hash, cli.command.name())?;

    match &cli.command {
        Command::Solve { curve, count } => commands::solve(need()?, &em, *curve, *count),
        Command::Spectrum => commands::spectrum(need()?, &em),
        Command::Scatlen => commands::scatlen(need()?, &em),
        Command::Pseudo {
            xi,
            count,
            order,
            a_bohr,
        } => commands::pseudo(
            cfg,
            &em,
            &PseudoArgs {
                xi: xi.clone(),
                count: *count,
                order: *order,
                a_bohr: a_bohr.clone(),
            },
        ),
        Command::Compare {
            spectrum,
            reference,
            kind,
        } => commands::compare(&em, spectrum, reference, *kind),
        Command::Sweep => commands::sweep(need()?, &em),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TRAPSPEC_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("trapspec: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}
