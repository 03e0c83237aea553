//! `augpu`: generate PU datasets, compute Bayes risks, run experiment grids,
//! fit estimators and rank likely positives.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "augpu",
    version,
    about = "Augmented positive-unlabeled prediction toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a synthetic PU dataset (CSV plus JSON sidecar).
    Gen {
        /// JSON file with `scenario`, `n`, and optionally `seed` and `labeling`.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to `$AUGPU_OUTPUT_ROOT/gen`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact (probit) or Monte-Carlo Bayes risks, excess risk and bounds.
    Risk {
        /// Closed form for the univariate probit scenario with threshold `a`.
        #[arg(long, conflicts_with = "config", allow_hyphen_values = true)]
        probit: Option<f64>,
        /// JSON scenario spec for a synthetic variant.
        #[arg(long, required_unless_present = "probit")]
        config: Option<PathBuf>,
        /// Monte-Carlo draws; with `--probit`, also adds a Monte-Carlo check.
        #[arg(long)]
        n_mc: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report and a manifest to this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a variant × c × method × seed grid.
    Experiment {
        /// JSON experiment config; omitted fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory; defaults to `$AUGPU_OUTPUT_ROOT/experiment`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        parallelism: Option<usize>,
        /// Comma-separated subset of methods, e.g. `SProphet,YProphet`.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
        /// Print the wide `mean ± SE` table for this metric.
        #[arg(long, num_args = 0..=1, default_missing_value = "u_accuracy")]
        table: Option<String>,
    },
    /// Fit the EM posterior and the label model on a dataset.
    Fit {
        #[arg(long)]
        dataset: PathBuf,
        /// Optional JSON with `em` and `s_model` hyperparameters.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the fitted pair (JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank unlabeled records by likely-positive score.
    Rank {
        #[arg(long)]
        dataset: PathBuf,
        /// Fitted pair written by `fit`.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        k: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen { config, out, seed } => commands::gen(&config, out, seed),
        Command::Risk {
            probit,
            config,
            n_mc,
            seed,
            out,
        } => commands::risk(probit, config.as_deref(), n_mc, seed, out),
        Command::Experiment {
            config,
            out,
            parallelism,
            methods,
            table,
        } => commands::experiment(config.as_deref(), out, parallelism, methods, table),
        Command::Fit {
            dataset,
            config,
            out,
        } => commands::fit(&dataset, config.as_deref(), &out),
        Command::Rank { dataset, model, k } => commands::rank(&dataset, &model, k),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
