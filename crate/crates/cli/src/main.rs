//! `texttemp`: estimate the temperature of token sequences and run the
//! synthetic sweep, cross-grid and corpus experiments.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "texttemp", version, about = "Maximum-likelihood temperature estimation for token sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the temperature of one TLOG logit dump.
    Estimate(EstimateArgs),
    /// Generate texts over a temperature grid with one synthetic model and
    /// estimate them with another (or the same) model.
    Sweep(SweepArgs),
    /// Run a sweep for every ordered (generator, estimator) pair of models
    /// from a spec file and write the metric matrix.
    Crossgrid(CrossgridArgs),
    /// Estimate every `.tlog` dump in a directory and summarise the corpus.
    Corpus(CorpusArgs),
    /// Turn a sweep or cross-grid table into plot-ready columns.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Emit {
    SweepPlot,
    Heatmap,
}

/// Root solve in reverse temperature `beta = 1 / T`.
#[derive(Debug, Args)]
struct SolverArgs {
    /// Lower end of the reverse-temperature bracket.
    #[arg(long, value_name = "BETA", default_value_t = 1e-2)]
    bracket_lo: f64,
    /// Upper end of the reverse-temperature bracket.
    #[arg(long, value_name = "BETA", default_value_t = 1e4)]
    bracket_hi: f64,
    /// First interior probe of the bracket.
    #[arg(long, value_name = "BETA", default_value_t = 5e3)]
    beta_init: f64,
    /// Relative width in beta at which the bracket counts as converged.
    #[arg(long, value_name = "REAL", default_value_t = 1e-10)]
    tol: f64,
    /// Root-finder iteration limit.
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
}

/// Generation protocol: temperature grid and text counts.
#[derive(Debug, Args)]
struct GridArgs {
    /// Lowest generation temperature.
    #[arg(long, default_value_t = 0.001)]
    tmin: f64,
    /// Highest generation temperature.
    #[arg(long, default_value_t = 2.401)]
    tmax: f64,
    /// Grid step.
    #[arg(long, default_value_t = 0.1)]
    tstep: f64,
    /// Texts generated per temperature.
    #[arg(long, default_value_t = 10)]
    texts: usize,
    /// Continuation tokens per text (after one seeded start token).
    #[arg(long, default_value_t = 200)]
    tokens: usize,
    /// Worker threads; output is identical for any value.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// TLOG dump to estimate.
    #[arg(long, value_name = "PATH")]
    logits: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Seed of the generating model.
    #[arg(long)]
    gen_seed: u64,
    /// Seed of the estimating model; equal to --gen-seed for self-estimation.
    #[arg(long)]
    est_seed: u64,
    /// Seed of the generated texts.
    #[arg(long)]
    seed: u64,
    /// Vocabulary size of both models.
    #[arg(long, default_value_t = 128)]
    vocab: usize,
    /// Context length of both models.
    #[arg(long, default_value_t = 1)]
    order: usize,
    /// Standard deviation of the generator's logits.
    #[arg(long, default_value_t = 3.0)]
    logit_scale: f64,
    /// Standard deviation of the estimator's logits [default: --logit-scale].
    #[arg(long)]
    est_logit_scale: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    /// Sweep table to write.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct CrossgridArgs {
    /// TOML experiment spec listing the models.
    #[arg(long, value_name = "SPEC_FILE")]
    models: PathBuf,
    /// Seed of the generated texts; overrides `seed` in the models file.
    #[arg(long)]
    seed: Option<u64>,
    /// Lowest generation temperature [default: spec, else 0.001].
    #[arg(long)]
    tmin: Option<f64>,
    /// Highest generation temperature [default: spec, else 2.401].
    #[arg(long)]
    tmax: Option<f64>,
    /// Grid step [default: spec, else 0.1].
    #[arg(long)]
    tstep: Option<f64>,
    /// Texts per temperature [default: spec, else 10].
    #[arg(long)]
    texts: Option<usize>,
    /// Continuation tokens per text [default: spec, else 200].
    #[arg(long)]
    tokens: Option<usize>,
    /// Worker threads; output is identical for any value.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Pooled (generator, estimator) metric table to write.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Also write the per-temperature breakdown here.
    #[arg(long, value_name = "PATH")]
    per_t_out: Option<PathBuf>,
    /// Fail unless every generator's row of the MAE matrix is smallest on
    /// the diagonal.
    #[arg(long)]
    assert_diagonal: bool,
}

#[derive(Debug, Args)]
struct CorpusArgs {
    /// Directory of `.tlog` dumps; other files are ignored.
    #[arg(long, value_name = "PATH")]
    dir: PathBuf,
    /// Per-text estimate table to write.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
    /// Also write the summary record here.
    #[arg(long, value_name = "PATH")]
    summary_out: Option<PathBuf>,
    /// Corpus name in the summary [default: directory name].
    #[arg(long)]
    corpus_id: Option<String>,
    /// Fail on the first unreadable dump instead of skipping it.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Sweep table (for sweep-plot) or cross-grid table (for heatmap).
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    #[arg(long, value_enum)]
    emit: Emit,
    /// Output file [default: standard output].
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Estimate(args) => commands::estimate(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Crossgrid(args) => commands::crossgrid(args),
        Command::Corpus(args) => commands::corpus(args),
        Command::Report(args) => commands::report(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", render_chain(&err));
            ExitCode::FAILURE
        }
    }
}

/// Joins the error chain, skipping causes the previous message already ends with.
fn render_chain(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}
