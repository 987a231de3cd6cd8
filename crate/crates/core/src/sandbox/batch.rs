use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, ExecLimits, ExecutionResult, Executor, SandboxError};

/// Identity of one sampled program within a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultKey {
    pub task_id: String,
    pub temperature: f64,
    pub sample_index: u32,
}

impl ResultKey {
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.task_id
            .cmp(&other.task_id)
            .then(self.temperature.total_cmp(&other.temperature))
            .then(self.sample_index.cmp(&other.sample_index))
    }
}

#[derive(Debug, Clone)]
pub struct Job {
    pub key: ResultKey,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessFailure {
    pub key: ResultKey,
    pub message: String,
}

#[derive(Debug, Default)]
pub struct BatchOutput {
    /// Sorted by task id, temperature, sample index.
    pub results: Vec<ExecutionResult>,
    pub harness_failures: Vec<HarnessFailure>,
}

/// Evaluates every job with at most `workers` sandboxes alive at once.
/// Output order does not depend on scheduling. A harness failure on one job
/// is recorded and the rest of the batch continues.
pub fn run_batch(
    executor: &dyn Executor,
    jobs: Vec<Job>,
    limits: &ExecLimits,
    workers: usize,
) -> Result<BatchOutput, SandboxError> {
    if workers == 0 {
        return Err(SandboxError::NoWorkers);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SandboxError::Pool(e.to_string()))?;

    let outcomes: Vec<(ResultKey, Result<_, SandboxError>)> = pool.install(|| {
        jobs.into_par_iter()
            .map(|job| {
                let outcome = evaluate(executor, &job.source, limits);
                (job.key, outcome)
            })
            .collect()
    });

    let mut out = BatchOutput::default();
    for (key, outcome) in outcomes {
        match outcome {
            Ok(run) => out.results.push(ExecutionResult {
                task_id: key.task_id,
                sample_index: key.sample_index,
                temperature: key.temperature,
                outcome: run.outcome,
                exception_name: run.exception_name,
                duration: run.duration.as_secs_f64(),
                stderr_tail: run.stderr_tail,
            }),
            Err(err) => out.harness_failures.push(HarnessFailure { key, message: err.to_string() }),
        }
    }
    out.results.sort_by(|a, b| {
        a.task_id
            .cmp(&b.task_id)
            .then(a.temperature.total_cmp(&b.temperature))
            .then(a.sample_index.cmp(&b.sample_index))
    });
    out.harness_failures.sort_by(|a, b| a.key.canonical_cmp(&b.key));
    Ok(out)
}
