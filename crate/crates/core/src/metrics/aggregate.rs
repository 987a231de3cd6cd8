use std::collections::{BTreeMap, BTreeSet};
use std::ops::Add;

use serde::{Deserialize, Serialize};

use super::{pass_at_k, MetricsError};
use crate::sandbox::{ExecutionResult, Outcome};

/// pass@k values keyed by k.
pub type PassTable = BTreeMap<u32, f64>;

/// One value per outcome class: counts, averages or fractions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeTally<T> {
    pub syntax_error: T,
    pub runtime_error: T,
    pub test_failure: T,
    pub timeout: T,
    pub correct: T,
}

impl<T: Copy + Add<Output = T>> OutcomeTally<T> {
    pub fn get(&self, outcome: Outcome) -> T {
        match outcome {
            Outcome::SyntaxError => self.syntax_error,
            Outcome::RuntimeError => self.runtime_error,
            Outcome::TestFailure => self.test_failure,
            Outcome::Timeout => self.timeout,
            Outcome::Correct => self.correct,
        }
    }

    pub fn get_mut(&mut self, outcome: Outcome) -> &mut T {
        match outcome {
            Outcome::SyntaxError => &mut self.syntax_error,
            Outcome::RuntimeError => &mut self.runtime_error,
            Outcome::TestFailure => &mut self.test_failure,
            Outcome::Timeout => &mut self.timeout,
            Outcome::Correct => &mut self.correct,
        }
    }

    /// S, R, T, C with timeouts counted as runtime errors.
    pub fn folded(&self) -> [T; 4] {
        [self.syntax_error, self.runtime_error + self.timeout, self.test_failure, self.correct]
    }

    pub fn total(&self) -> T {
        self.syntax_error + self.runtime_error + self.test_failure + self.timeout + self.correct
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> OutcomeTally<U> {
        OutcomeTally {
            syntax_error: f(self.syntax_error),
            runtime_error: f(self.runtime_error),
            test_failure: f(self.test_failure),
            timeout: f(self.timeout),
            correct: f(self.correct),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemCounts {
    pub task_id: String,
    pub counts: OutcomeTally<u64>,
}

impl ProblemCounts {
    pub fn samples(&self) -> u64 {
        self.counts.total()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureReport {
    pub temperature: f64,
    /// Sorted by task id.
    pub problems: Vec<ProblemCounts>,
    pub pass_at_k: PassTable,
}

#[derive(Debug, Clone, Default)]
pub struct AggregateOptions {
    pub ks: Vec<u32>,
    /// Tasks that must be present; defaults to every task seen in the results.
    pub expected_tasks: Option<Vec<String>>,
    /// Samples per (task, temperature); defaults to the largest count seen.
    pub samples_per_problem: Option<u64>,
    /// Score incomplete problems on the samples they have instead of failing.
    pub allow_partial: bool,
}

#[derive(Debug, Clone)]
pub struct Aggregated {
    /// Sorted by temperature.
    pub temperatures: Vec<TemperatureReport>,
    pub samples_per_problem: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Temp(f64);

impl Eq for Temp {}

impl PartialOrd for Temp {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Temp {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

type Cells<'a> = BTreeMap<Temp, BTreeMap<&'a str, BTreeMap<u32, Outcome>>>;

fn describe_gap(task: &str, temperature: f64, present: &BTreeMap<u32, Outcome>, n: u64) -> Option<String> {
    let missing: Vec<String> = (0..n as u32).filter(|i| !present.contains_key(i)).map(|i| i.to_string()).collect();
    match missing.len() {
        0 => None,
        m if m as u64 == n => Some(format!("{task} at T={temperature}: no samples")),
        m => Some(format!("{task} at T={temperature}: {m} of {n} samples missing ({})", missing.join(", "))),
    }
}

/// Per-temperature outcome counts and suite pass@k (the mean of per-problem
/// estimates). Every (task, temperature) must carry samples `0..n` unless
/// partial results are allowed.
pub fn aggregate_suite(results: &[ExecutionResult], options: &AggregateOptions) -> Result<Aggregated, MetricsError> {
    let mut cells: Cells = BTreeMap::new();
    for r in results {
        let samples = cells.entry(Temp(r.temperature)).or_default().entry(r.task_id.as_str()).or_default();
        if samples.insert(r.sample_index, r.outcome).is_some() {
            return Err(MetricsError::Duplicate(format!(
                "{} at T={} sample {}",
                r.task_id, r.temperature, r.sample_index
            )));
        }
    }

    let tasks: BTreeSet<&str> = match &options.expected_tasks {
        Some(expected) => expected.iter().map(String::as_str).collect(),
        None => cells.values().flat_map(|by_task| by_task.keys().copied()).collect(),
    };
    let n = match options.samples_per_problem {
        Some(n) => n,
        None => cells.values().flat_map(|t| t.values()).map(|s| s.len() as u64).max().unwrap_or(0),
    };

    let mut extra = Vec::new();
    for (t, by_task) in &cells {
        for (task, samples) in by_task {
            if !tasks.contains(task) {
                extra.push(format!("{task} at T={}: not an expected task", t.0));
            } else if let Some((&last, _)) = samples.last_key_value() {
                if u64::from(last) >= n {
                    extra.push(format!("{task} at T={}: sample index {last} beyond n = {n}", t.0));
                }
            }
        }
    }
    if !extra.is_empty() {
        return Err(MetricsError::Unexpected { extra });
    }

    let empty = BTreeMap::new();
    let mut missing = Vec::new();
    for (t, by_task) in &cells {
        for task in &tasks {
            let present = by_task.get(task).unwrap_or(&empty);
            missing.extend(describe_gap(task, t.0, present, n));
        }
    }
    if !missing.is_empty() && !options.allow_partial {
        return Err(MetricsError::Incomplete { missing });
    }

    let mut temperatures = Vec::with_capacity(cells.len());
    for (t, by_task) in &cells {
        let mut problems = Vec::with_capacity(by_task.len());
        for task in &tasks {
            let Some(samples) = by_task.get(task) else { continue };
            let mut counts = OutcomeTally::default();
            for &outcome in samples.values() {
                *counts.get_mut(outcome) += 1;
            }
            problems.push(ProblemCounts { task_id: (*task).to_owned(), counts });
        }
        let mut pass = PassTable::new();
        for &k in &options.ks {
            let mut sum = 0.0;
            for p in &problems {
                sum += pass_at_k(p.samples(), p.counts.correct, u64::from(k))?;
            }
            pass.insert(k, sum / problems.len() as f64);
        }
        temperatures.push(TemperatureReport { temperature: t.0, problems, pass_at_k: pass });
    }
    Ok(Aggregated { temperatures, samples_per_problem: n, warnings: missing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(task: &str, t: f64, i: u32, outcome: Outcome) -> ExecutionResult {
        ExecutionResult {
            task_id: task.into(),
            sample_index: i,
            temperature: t,
            outcome,
            exception_name: None,
            duration: 0.0,
            stderr_tail: String::new(),
        }
    }

    fn opts(ks: &[u32]) -> AggregateOptions {
        AggregateOptions { ks: ks.to_vec(), ..Default::default() }
    }

    #[test]
    fn suite_mean_over_problems() {
        let mut rs = Vec::new();
        for i in 0..4 {
            rs.push(result("a", 0.2, i, Outcome::Correct));
            rs.push(result("b", 0.2, i, Outcome::TestFailure));
        }
        let agg = aggregate_suite(&rs, &opts(&[1])).unwrap();
        assert_eq!(agg.temperatures.len(), 1);
        assert_eq!(agg.temperatures[0].pass_at_k[&1], 0.5);
        assert_eq!(agg.temperatures[0].problems[0].counts.correct, 4);
        assert_eq!(agg.samples_per_problem, 4);
    }

    #[test]
    fn single_problem_matches_estimator() {
        let outcomes = [Outcome::Correct, Outcome::SyntaxError, Outcome::Correct, Outcome::Timeout, Outcome::RuntimeError];
        let rs: Vec<_> = outcomes.iter().enumerate().map(|(i, &o)| result("p", 0.6, i as u32, o)).collect();
        let agg = aggregate_suite(&rs, &opts(&[2])).unwrap();
        assert_eq!(agg.temperatures[0].pass_at_k[&2], 0.7);
    }

    #[test]
    fn missing_samples_are_listed() {
        let rs = vec![
            result("a", 0.2, 0, Outcome::Correct),
            result("a", 0.2, 1, Outcome::Correct),
            result("b", 0.2, 0, Outcome::Correct),
        ];
        let o = AggregateOptions { expected_tasks: Some(vec!["a".into(), "b".into(), "c".into()]), ..opts(&[1]) };
        match aggregate_suite(&rs, &o) {
            Err(MetricsError::Incomplete { missing }) => {
                assert_eq!(missing, vec!["b at T=0.2: 1 of 2 samples missing (1)", "c at T=0.2: no samples"]);
            }
            other => panic!("{other:?}"),
        }
        let partial = aggregate_suite(&rs, &AggregateOptions { allow_partial: true, ..o }).unwrap();
        assert_eq!(partial.warnings.len(), 2);
        assert_eq!(partial.temperatures[0].problems.len(), 2);
        assert_eq!(partial.temperatures[0].pass_at_k[&1], 1.0);
    }

    #[test]
    fn k_beyond_n_is_an_error() {
        let rs = vec![result("a", 0.2, 0, Outcome::Correct)];
        assert!(matches!(aggregate_suite(&rs, &opts(&[2])), Err(MetricsError::KGreaterThanN { n: 1, k: 2 })));
    }

    #[test]
    fn duplicates_and_strays_are_rejected() {
        let dup = vec![result("a", 0.2, 0, Outcome::Correct), result("a", 0.2, 0, Outcome::Correct)];
        assert!(matches!(aggregate_suite(&dup, &opts(&[1])), Err(MetricsError::Duplicate(_))));
        let stray = vec![result("a", 0.2, 5, Outcome::Correct)];
        let o = AggregateOptions { samples_per_problem: Some(2), ..opts(&[1]) };
        assert!(matches!(aggregate_suite(&stray, &o), Err(MetricsError::Unexpected { .. })));
    }

    #[test]
    fn folding_moves_timeouts_into_runtime() {
        let t = OutcomeTally { syntax_error: 1u64, runtime_error: 2, test_failure: 3, timeout: 4, correct: 5 };
        assert_eq!(t.folded(), [1, 6, 3, 5]);
        assert_eq!(t.total(), 15);
    }
}
