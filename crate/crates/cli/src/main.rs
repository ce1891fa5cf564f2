mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use winpred_core::ErrorCategory;

use crate::config::RunConfig;

/// Pre-match and in-match win prediction.
#[derive(Debug, Parser)]
#[command(name = "winpred", version)]
struct Cli {
    /// Run configuration file of `key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration setting; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Report {
    Ablation,
    Minutes,
    Duration,
    Cv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and validate a data directory and print the ingest report.
    Ingest {
        /// Defaults to the configured data directory.
        dir: Option<PathBuf>,
    },
    /// Write a synthetic dataset in the ingest formats.
    Synth {
        /// Output directory; defaults to the configured data directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Train one model on the training split and save it.
    Train {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        features: Option<String>,
        /// Model file; defaults to `<model_dir>/<model>.json`.
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Print one match's Radiant win probability.
    Predict {
        #[arg(long, value_name = "FILE")]
        model_file: PathBuf,
        #[arg(long = "match", value_name = "ID")]
        match_id: String,
        #[arg(long, default_value_t = 0)]
        minute: u32,
    },
    /// Per-minute predictions for one match as CSV.
    Trajectory {
        #[arg(long = "match", value_name = "ID")]
        match_id: String,
        /// Model family whose default model file is read.
        #[arg(long)]
        model: Option<String>,
        /// Defaults to `<model_dir>/<model>.json`.
        #[arg(long, value_name = "FILE")]
        model_file: Option<PathBuf>,
        /// Write the CSV here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Run an evaluation report; writes `<out_dir>/<report>.csv` and prints a table.
    Evaluate {
        #[arg(long, value_enum)]
        report: Report,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        features: Option<String>,
        /// Defaults to the configured output directory.
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn build_config(cli: &Cli) -> winpred_core::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for kv in &cli.set {
        cfg.apply_text(kv, "--set")?;
    }
    if let Some(d) = &cli.data_dir {
        cfg.data_dir = d.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Train { model, features, .. } | Command::Evaluate { model, features, .. } => {
            if let Some(m) = model {
                cfg.set("model", m)?;
            }
            if let Some(f) = features {
                cfg.set("features", f)?;
            }
        }
        Command::Trajectory { model: Some(m), .. } => cfg.set("model", m)?,
        _ => {}
    }
    cfg.finish()
}

fn run(cli: Cli) -> winpred_core::Result<()> {
    let cfg = build_config(&cli)?;
    match cli.command {
        Command::Ingest { dir } => commands::ingest(&cfg, dir.as_deref()),
        Command::Synth { out } => commands::synth(&cfg, out.as_deref()),
        Command::Train { output, .. } => commands::train(&cfg, output.as_deref()),
        Command::Predict {
            model_file,
            match_id,
            minute,
        } => commands::predict(&cfg, &model_file, &match_id, minute),
        Command::Trajectory {
            match_id,
            model_file,
            out,
            ..
        } => commands::trajectory(&cfg, model_file.as_deref(), &match_id, out.as_deref()),
        Command::Evaluate { report, out, .. } => commands::evaluate(&cfg, report, out.as_deref()),
    }
}

fn exit_code(c: ErrorCategory) -> u8 {
    match c {
        ErrorCategory::Usage => 1,
        ErrorCategory::Data => 2,
        ErrorCategory::Numerical => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            eprint!("error:usage: {}", text.strip_prefix("error: ").unwrap_or(&text));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let c = e.category();
            eprintln!("error:{}: {e}", c.as_str());
            ExitCode::from(exit_code(c))
        }
    }
}
