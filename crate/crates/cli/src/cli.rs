use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sobench::corpus::ModalityVariant;
use sobench::metrics::ReportFormat;
use sobench::tasks::Suite;

#[derive(Debug, Parser)]
#[command(name = "sobench", version, about = "Build StackOverflow corpora and evaluate code generation with pass@k")]
pub struct Cli {
    /// TOML configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for corpus building and sandboxed execution.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Sampling seed forwarded to the gateway.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Turn a Posts.xml dump into Full / No-Code / No-NL training records.
    BuildCorpus(BuildCorpusArgs),
    /// Sample completions for every task from the generation gateway.
    Generate(GenerateArgs),
    /// Execute completions and compute pass@k and outcome breakdowns.
    Eval(EvalArgs),
    /// Merge, render and compare evaluation reports.
    Report(ReportArgs),
    /// Summarise JSONL outputs (corpus records, windows, completions, results).
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Humaneval,
    Mbpp,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Suite {
        match s {
            SuiteArg::Humaneval => Suite::HumanEval,
            SuiteArg::Mbpp => Suite::Mbpp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Markdown,
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> ReportFormat {
        match f {
            FormatArg::Markdown => ReportFormat::Markdown,
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

fn parse_variant(s: &str) -> Result<ModalityVariant, String> {
    s.parse().map_err(|e: sobench::corpus::CorpusError| e.to_string())
}

#[derive(Debug, Args)]
pub struct BuildCorpusArgs {
    /// Posts.xml, optionally gzip-compressed (.gz).
    #[arg(long)]
    pub dump: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated subset of full, no_code, no_nl.
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    pub variants: Option<Vec<ModalityVariant>>,
    /// Comma-separated tags; a trailing `*` matches a prefix.
    #[arg(long, value_delimiter = ',')]
    pub tags: Option<Vec<String>>,
    /// Treat inline `<code>` spans as code instead of prose.
    #[arg(long)]
    pub inline_code_as_code: bool,
    /// Also emit fixed-size packed windows per variant.
    #[arg(long)]
    pub pack: bool,
    #[arg(long)]
    pub window_size: Option<usize>,
    /// JSONL of tokenizer counts (`question_id`, `variant`, `tokens`).
    #[arg(long)]
    pub token_counts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SuiteSelection {
    /// Task file (JSONL).
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long, value_enum)]
    pub suite_kind: SuiteArg,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub suite: SuiteSelection,
    /// Base URL of the generation service.
    #[arg(long)]
    pub gateway: Option<String>,
    /// Completions JSONL; existing records are kept and skipped.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub temperatures: Option<Vec<f64>>,
    /// Samples per task and temperature.
    #[arg(short = 'n', long)]
    pub samples: Option<u32>,
    #[arg(long)]
    pub top_p: Option<f64>,
    #[arg(long)]
    pub max_new_tokens: Option<u32>,
    #[arg(long)]
    pub batch_size: Option<u32>,
    #[arg(long)]
    pub retries: Option<u32>,
    /// Text prepended to every prompt.
    #[arg(long)]
    pub preamble: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub suite: SuiteSelection,
    #[arg(long)]
    pub completions: PathBuf,
    /// Output directory for results.jsonl, report.json, report.md and manifest.json.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub timeout_s: Option<f64>,
    #[arg(long)]
    pub memory_mb: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<u32>>,
    /// Score whatever completions exist instead of failing on gaps.
    #[arg(long)]
    pub allow_partial: bool,
    #[arg(long)]
    pub label: Option<String>,
    /// Python interpreter used to run programs.
    #[arg(long)]
    pub python: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report.json files; reports with the same label are merged.
    pub reports: Vec<PathBuf>,
    /// Percent change of the best pass@k values from BASELINE to TREATMENT.
    #[arg(long, num_args = 2, value_names = ["BASELINE", "TREATMENT"])]
    pub compare: Option<Vec<PathBuf>>,
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<u32>>,
    #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
    pub format: FormatArg,
    /// Write the output here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write per-temperature outcome fractions as CSV.
    #[arg(long)]
    pub proportions_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}
