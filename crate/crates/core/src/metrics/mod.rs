//! pass@k estimation, outcome breakdowns and report rendering.

mod aggregate;
mod compare;
mod passk;
mod render;
mod report;

pub use aggregate::{aggregate_suite, AggregateOptions, Aggregated, OutcomeTally, PassTable, ProblemCounts, TemperatureReport};
pub use compare::{best_over_temperatures, percent_change, BestValue, PercentChange};
pub use passk::pass_at_k;
pub use render::{
    format_count, format_percent, render_error_table, render_pass_table, render_proportions_csv, render_report,
    render_rows, rendered_row_drift, ReportFormat,
};
pub use report::{error_breakdown, Proportions, SuiteReport};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("pass@k needs at least one sample")]
    NoSamples,
    #[error("k must be positive")]
    ZeroK,
    #[error("k = {k} exceeds the {n} available samples")]
    KGreaterThanN { n: u64, k: u64 },
    #[error("{c} correct samples out of only {n}")]
    CorrectExceedsN { n: u64, c: u64 },
    #[error("incomplete results:\n  {}", .missing.join("\n  "))]
    Incomplete { missing: Vec<String> },
    #[error("duplicate result for {0}")]
    Duplicate(String),
    #[error("unexpected results:\n  {}", .extra.join("\n  "))]
    Unexpected { extra: Vec<String> },
    #[error("no temperatures to choose from")]
    NoTemperatures,
    #[error("temperature {0} appears more than once")]
    DuplicateTemperature(f64),
    #[error("pass@k tables cover different k sets")]
    MismatchedK,
    #[error("k = {0} is missing from a pass@k table")]
    MissingK(u32),
    #[error("cannot merge reports for {0} and {1}")]
    SuiteMismatch(String, String),
    #[error("not a number: {0:?}")]
    BadCell(String),
}
