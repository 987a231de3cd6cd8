//! Corpus construction from StackExchange dumps and functional-correctness
//! evaluation of sampled Python programs.
//!
//! The crate is split along the pipeline:
//!
//! - [`corpus`]: stream `Posts.xml`, align Python questions with their
//!   answers, strip HTML into NL/code segments and emit Full / No-Code / No-NL
//!   training records plus fixed-size packed windows.
//! - [`tasks`]: load HumanEval- and MBPP-style suites, build prompts and
//!   assemble completions into runnable programs.
//! - [`sandbox`]: run programs in isolated interpreter processes and classify
//!   each run as syntax error, runtime error, test failure, timeout or correct.
//! - [`metrics`]: unbiased pass@k, error breakdowns, best-over-temperature
//!   tables, percent change between runs and report rendering.

pub mod corpus;
pub mod metrics;
pub mod sandbox;
pub mod tasks;
