//! `dapamt` command-line driver: synthetic data, ingestion, training,
//! evaluation, prediction, attention export, gradient checks and ablation
//! experiments.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "dapamt", version, about = "Profile-aware multi-task student performance prediction")]
struct Cli {
    /// Run per-sample work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    GenSynth {
        /// Synthetic cohort config (JSON); omitted fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        students: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a dataset from campus record CSV files.
    Ingest(IngestArgs),
    /// Train a model and write a checkpoint plus loss log.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// Run config (JSON) with optional `model` and `train` sections.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-task MSE in original units.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-student predictions in original units (CSV).
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// `train`, `validation`, `test` or `all`.
        #[arg(long, default_value = "all")]
        split: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Soft-attention and co-attention weights per student (CSV).
    ExportAttention {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Comma-separated student ids; all students when omitted.
        #[arg(long, value_delimiter = ',')]
        students: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic gradients with central differences on a random
    /// sample; exits nonzero above the tolerance.
    Gradcheck {
        /// Model config (JSON); omitted fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train the full model and its ablations over several seeds.
    Experiment {
        #[arg(long)]
        dataset: PathBuf,
        /// Experiment config (JSON) with `model`, `train`, `seeds`, `ablations`.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    footprints: PathBuf,
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long)]
    grades: PathBuf,
    #[arg(long)]
    borrows: PathBuf,
    /// First day of the observation window, `YYYY-MM-DD`.
    #[arg(long)]
    window_start: chrono::NaiveDate,
    #[arg(long, default_value_t = 63)]
    days: usize,
    /// Semester whose grades and borrowing are the labels.
    #[arg(long)]
    target_semester: u32,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', default_values_t = [0.7, 0.1, 0.2])]
    split: Vec<f64>,
    /// Seed of the student split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        dapamt::Execution::Sequential
    } else {
        dapamt::Execution::Parallel
    };
    let result = match cli.command {
        Command::GenSynth {
            config,
            seed,
            students,
            out,
        } => commands::gen_synth(config.as_deref(), seed, students, &out),
        Command::Ingest(a) => commands::ingest(&a),
        Command::Train {
            dataset,
            config,
            seed,
            out,
        } => commands::train(&dataset, config.as_deref(), seed, &out, exec),
        Command::Evaluate {
            checkpoint,
            dataset,
            split,
            out,
        } => commands::evaluate(&checkpoint, &dataset, &split, out.as_deref(), exec),
        Command::Predict {
            checkpoint,
            dataset,
            split,
            out,
        } => commands::predict(&checkpoint, &dataset, &split, &out, exec),
        Command::ExportAttention {
            checkpoint,
            dataset,
            students,
            out,
        } => commands::export_attention(&checkpoint, &dataset, &students, &out),
        Command::Gradcheck { config, tolerance, seed } => commands::gradcheck(config.as_deref(), tolerance, seed),
        Command::Experiment { dataset, config, out } => commands::experiment(&dataset, config.as_deref(), &out, exec),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
