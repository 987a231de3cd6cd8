use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MetricsError, PassTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestValue {
    pub value: f64,
    pub temperature: f64,
}

/// Element-wise maximum over temperatures, remembering the winner for each
/// k. Ties go to the lowest temperature.
pub fn best_over_temperatures(tables: &[(f64, &PassTable)]) -> Result<BTreeMap<u32, BestValue>, MetricsError> {
    let (first, rest) = tables.split_first().ok_or(MetricsError::NoTemperatures)?;
    if rest.iter().any(|(_, t)| !t.keys().eq(first.1.keys())) {
        return Err(MetricsError::MismatchedK);
    }
    let mut best: BTreeMap<u32, BestValue> =
        first.1.iter().map(|(&k, &value)| (k, BestValue { value, temperature: first.0 })).collect();
    for &(temperature, table) in rest {
        for (k, &value) in table {
            let slot = best.get_mut(k).expect("same k set");
            if value > slot.value || (value == slot.value && temperature < slot.temperature) {
                *slot = BestValue { value, temperature };
            }
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentChange {
    /// Mean of the per-k changes; `None` when every k was excluded.
    pub mean: Option<f64>,
    pub per_k: BTreeMap<u32, f64>,
    /// k values skipped because the baseline is zero.
    pub excluded: Vec<u32>,
}

/// Mean over `ks` of `100 * (treatment - baseline) / baseline`.
pub fn percent_change(baseline: &PassTable, treatment: &PassTable, ks: &[u32]) -> Result<PercentChange, MetricsError> {
    let mut per_k = BTreeMap::new();
    let mut excluded = Vec::new();
    for &k in ks {
        let b = *baseline.get(&k).ok_or(MetricsError::MissingK(k))?;
        let t = *treatment.get(&k).ok_or(MetricsError::MissingK(k))?;
        if b == 0.0 {
            log::warn!("pass@{k} baseline is zero; excluded from the percent change");
            excluded.push(k);
            continue;
        }
        per_k.insert(k, 100.0 * (t - b) / b);
    }
    let mean = (!per_k.is_empty()).then(|| per_k.values().sum::<f64>() / per_k.len() as f64);
    Ok(PercentChange { mean, per_k, excluded })
}
