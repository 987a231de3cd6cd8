use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    aggregate_suite, best_over_temperatures, AggregateOptions, BestValue, MetricsError, OutcomeTally, PassTable,
    TemperatureReport,
};
use crate::sandbox::ExecutionResult;
use crate::tasks::Suite;

/// Outcome fractions over every program generated at one temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    pub temperature: f64,
    pub programs: u64,
    pub fractions: OutcomeTally<f64>,
}

/// Per-problem mean outcome counts pooled over all temperatures, and
/// per-temperature outcome fractions.
pub fn error_breakdown(per_temperature: &[TemperatureReport]) -> (OutcomeTally<f64>, Vec<Proportions>) {
    let mut pooled = OutcomeTally::<u64>::default();
    let mut cells = 0u64;
    let mut proportions = Vec::with_capacity(per_temperature.len());
    for t in per_temperature {
        let mut at_t = OutcomeTally::<u64>::default();
        for p in &t.problems {
            at_t = add(at_t, p.counts);
        }
        cells += t.problems.len() as u64;
        pooled = add(pooled, at_t);
        let programs = at_t.total();
        let fractions = if programs == 0 { OutcomeTally::default() } else { at_t.map(|c| c as f64 / programs as f64) };
        proportions.push(Proportions { temperature: t.temperature, programs, fractions });
    }
    let averages = if cells == 0 { OutcomeTally::default() } else { pooled.map(|c| c as f64 / cells as f64) };
    (averages, proportions)
}

fn add(a: OutcomeTally<u64>, b: OutcomeTally<u64>) -> OutcomeTally<u64> {
    OutcomeTally {
        syntax_error: a.syntax_error + b.syntax_error,
        runtime_error: a.runtime_error + b.runtime_error,
        test_failure: a.test_failure + b.test_failure,
        timeout: a.timeout + b.timeout,
        correct: a.correct + b.correct,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub model_label: String,
    pub ks: Vec<u32>,
    pub samples_per_problem: u64,
    /// Set when some problems were scored on fewer than `samples_per_problem` samples.
    pub partial: bool,
    /// Sorted by temperature.
    pub per_temperature: Vec<TemperatureReport>,
    pub best_per_k: BTreeMap<u32, BestValue>,
    /// Unfolded; see [`OutcomeTally::folded`] for S/R/T/C.
    pub error_averages: OutcomeTally<f64>,
    pub proportions: Vec<Proportions>,
}

impl SuiteReport {
    pub fn from_temperatures(
        suite: Suite,
        model_label: impl Into<String>,
        ks: Vec<u32>,
        samples_per_problem: u64,
        partial: bool,
        mut per_temperature: Vec<TemperatureReport>,
    ) -> Result<Self, MetricsError> {
        per_temperature.sort_by(|a, b| a.temperature.total_cmp(&b.temperature));
        if let Some(w) = per_temperature.windows(2).find(|w| w[0].temperature == w[1].temperature) {
            return Err(MetricsError::DuplicateTemperature(w[0].temperature));
        }
        for t in &per_temperature {
            if let Some(&k) = ks.iter().find(|k| !t.pass_at_k.contains_key(k)) {
                return Err(MetricsError::MissingK(k));
            }
        }
        let best_per_k = if per_temperature.is_empty() {
            BTreeMap::new()
        } else {
            let tables: Vec<PassTable> = per_temperature
                .iter()
                .map(|t| ks.iter().map(|k| (*k, t.pass_at_k[k])).collect())
                .collect();
            let pairs: Vec<(f64, &PassTable)> =
                per_temperature.iter().zip(&tables).map(|(t, table)| (t.temperature, table)).collect();
            best_over_temperatures(&pairs)?
        };
        let (error_averages, proportions) = error_breakdown(&per_temperature);
        Ok(Self {
            suite,
            model_label: model_label.into(),
            ks,
            samples_per_problem,
            partial,
            per_temperature,
            best_per_k,
            error_averages,
            proportions,
        })
    }

    /// Aggregates raw execution results. Returns the report and any
    /// completeness warnings raised under `allow_partial`.
    pub fn from_results(
        suite: Suite,
        model_label: impl Into<String>,
        results: &[ExecutionResult],
        options: &AggregateOptions,
    ) -> Result<(Self, Vec<String>), MetricsError> {
        let agg = aggregate_suite(results, options)?;
        let partial = !agg.warnings.is_empty();
        let report = Self::from_temperatures(
            suite,
            model_label,
            options.ks.clone(),
            agg.samples_per_problem,
            partial,
            agg.temperatures,
        )?;
        Ok((report, agg.warnings))
    }

    /// Combines reports from separate runs of one model (typically one per
    /// temperature) and recomputes the best-over-temperature table. The
    /// first report's label is kept.
    pub fn merge(reports: Vec<SuiteReport>) -> Result<Self, MetricsError> {
        let mut iter = reports.into_iter();
        let first = iter.next().ok_or(MetricsError::NoTemperatures)?;
        let (suite, label, ks, n) = (first.suite, first.model_label, first.ks, first.samples_per_problem);
        let mut partial = first.partial;
        let mut per_temperature = first.per_temperature;
        for r in iter {
            if r.suite != suite {
                return Err(MetricsError::SuiteMismatch(suite.to_string(), r.suite.to_string()));
            }
            if r.ks != ks {
                return Err(MetricsError::MismatchedK);
            }
            partial |= r.partial || r.samples_per_problem != n;
            per_temperature.extend(r.per_temperature);
        }
        Self::from_temperatures(suite, label, ks, n, partial, per_temperature)
    }

    /// Best value per k as a plain table.
    pub fn best_table(&self) -> PassTable {
        self.best_per_k.iter().map(|(&k, b)| (k, b.value)).collect()
    }
}
