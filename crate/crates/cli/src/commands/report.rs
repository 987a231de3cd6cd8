use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use sobench::metrics::{
    format_percent, percent_change, render_error_table, render_pass_table, render_proportions_csv, render_report,
    render_rows, OutcomeTally, PassTable, PercentChange, ReportFormat, SuiteReport,
};

use crate::cli::ReportArgs;
use crate::io::read_json;

fn load(path: &Path) -> anyhow::Result<SuiteReport> {
    read_json(path)
}

/// Merges reports that share a model label, keeping first-seen order.
fn merge_by_label(reports: Vec<SuiteReport>) -> anyhow::Result<Vec<SuiteReport>> {
    let mut groups: Vec<Vec<SuiteReport>> = Vec::new();
    for r in reports {
        match groups.iter_mut().find(|g| g[0].model_label == r.model_label) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    groups
        .into_iter()
        .map(|g| {
            let label = g[0].model_label.clone();
            SuiteReport::merge(g).with_context(|| format!("merging reports for {label}"))
        })
        .collect()
}

fn render_models(models: &[SuiteReport], format: ReportFormat) -> anyhow::Result<String> {
    if let [single] = models {
        return Ok(render_report(single, format));
    }
    if format == ReportFormat::Json {
        return Ok(serde_json::to_string_pretty(models)? + "\n");
    }
    let ks = &models[0].ks;
    if models.iter().any(|m| &m.ks != ks || m.suite != models[0].suite) {
        anyhow::bail!("reports to tabulate together must share a suite and k set");
    }
    let best: Vec<PassTable> = models.iter().map(SuiteReport::best_table).collect();
    let pass_rows: Vec<(&str, &PassTable)> = models.iter().map(|m| m.model_label.as_str()).zip(&best).collect();
    let error_rows: Vec<(&str, &OutcomeTally<f64>)> =
        models.iter().map(|m| (m.model_label.as_str(), &m.error_averages)).collect();
    let pass = render_pass_table(&pass_rows, ks, format);
    if format == ReportFormat::Csv {
        return Ok(pass);
    }
    Ok(format!(
        "## {}\n\n### pass@k, best over temperatures\n\n{pass}\n### Programs per problem by outcome\n\n{}",
        models[0].suite,
        render_error_table(&error_rows, format)
    ))
}

#[derive(Serialize)]
struct Comparison<'a> {
    baseline: &'a str,
    treatment: &'a str,
    #[serde(flatten)]
    change: &'a PercentChange,
}

fn render_comparison(
    baseline: &SuiteReport,
    treatment: &SuiteReport,
    ks: &[u32],
    format: ReportFormat,
) -> anyhow::Result<String> {
    let (b, t) = (baseline.best_table(), treatment.best_table());
    let change = percent_change(&b, &t, ks)?;
    for k in &change.excluded {
        log::warn!("pass@{k} of {} is zero; k = {k} left out of the mean", baseline.model_label);
    }
    if format == ReportFormat::Json {
        let c = Comparison { baseline: &baseline.model_label, treatment: &treatment.model_label, change: &change };
        return Ok(serde_json::to_string_pretty(&c)? + "\n");
    }
    let header: Vec<String> =
        vec!["k".into(), baseline.model_label.clone(), treatment.model_label.clone(), "change %".into()];
    let mut rows: Vec<Vec<String>> = ks
        .iter()
        .map(|k| {
            let delta = change.per_k.get(k).map_or_else(|| "excluded".to_owned(), |v| format!("{v:.2}"));
            vec![k.to_string(), format_percent(b[k]), format_percent(t[k]), delta]
        })
        .collect();
    let mean = change.mean.map_or_else(|| "n/a".to_owned(), |m| format!("{m:.2}"));
    if format == ReportFormat::Csv {
        rows.push(vec!["mean".into(), String::new(), String::new(), mean]);
        return Ok(render_rows(&header, &rows, format));
    }
    let used: Vec<String> = change.per_k.keys().map(u32::to_string).collect();
    Ok(format!(
        "{}\nMean percent change: {mean}% over k = {}\n",
        render_rows(&header, &rows, format),
        used.join(", ")
    ))
}

pub fn run(args: ReportArgs, out: &mut dyn Write) -> anyhow::Result<()> {
    let format: ReportFormat = args.format.into();
    let text = if let Some(pair) = &args.compare {
        if !args.reports.is_empty() {
            anyhow::bail!("--compare takes exactly two reports; drop the positional arguments");
        }
        let (baseline, treatment) = (load(&pair[0])?, load(&pair[1])?);
        if baseline.suite != treatment.suite {
            anyhow::bail!("cannot compare a {} report with a {} report", baseline.suite, treatment.suite);
        }
        let ks = match &args.ks {
            Some(ks) => ks.clone(),
            None => baseline.ks.iter().copied().filter(|k| treatment.ks.contains(k)).collect(),
        };
        render_comparison(&baseline, &treatment, &ks, format)?
    } else {
        if args.reports.is_empty() {
            anyhow::bail!("no reports given");
        }
        let reports = args.reports.iter().map(|p| load(p)).collect::<anyhow::Result<Vec<_>>>()?;
        let models = merge_by_label(reports)?;
        if let Some(path) = &args.proportions_csv {
            let [single] = models.as_slice() else {
                anyhow::bail!("--proportions-csv needs reports for a single model");
            };
            std::fs::write(path, render_proportions_csv(single))
                .with_context(|| format!("writing {}", path.display()))?;
        }
        render_models(&models, format)?
    };
    match &args.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}
