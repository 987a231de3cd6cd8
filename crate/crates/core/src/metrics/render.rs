use std::str::FromStr;

use serde::Serialize;

use super::{MetricsError, OutcomeTally, PassTable, SuiteReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(Self::Markdown),
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown report format {other:?} (expected markdown, csv or json)")),
        }
    }
}

/// A probability as a percentage with two decimals. Exact ties round half
/// to even.
pub fn format_percent(p: f64) -> String {
    format!("{:.2}", p * 100.0)
}

/// A per-problem program count with one decimal.
pub fn format_count(v: f64) -> String {
    format!("{v:.1}")
}

/// Distance between the sum of rendered cells and the value they should add
/// up to. Rounding each cell makes small drift unavoidable.
pub fn rendered_row_drift(cells: &[&str], expected: f64) -> Result<f64, MetricsError> {
    let mut sum = 0.0;
    for cell in cells {
        sum += cell.trim().parse::<f64>().map_err(|_| MetricsError::BadCell((*cell).to_owned()))?;
    }
    Ok((sum - expected).abs())
}

fn markdown_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut out = format!("| {} |\n|", header.join(" | "));
    for i in 0..header.len() {
        out.push_str(if i == 0 { "---|" } else { "---:|" });
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("| {} |\n", row.join(" | ")));
    }
    out
}

fn csv_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// A plain table as Markdown or CSV. JSON callers serialize their own data.
pub fn render_rows(header: &[String], rows: &[Vec<String>], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => csv_table(header, rows),
        _ => markdown_table(header, rows),
    }
}

fn table(header: Vec<String>, rows: Vec<Vec<String>>, format: ReportFormat) -> String {
    render_rows(&header, &rows, format)
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn pass_header(first: &str, ks: &[u32]) -> Vec<String> {
    std::iter::once(first.to_owned()).chain(ks.iter().map(|k| format!("@{k}"))).collect()
}

fn pass_cells(table: &PassTable, ks: &[u32]) -> Vec<String> {
    ks.iter().map(|k| table.get(k).map_or_else(|| "---".to_owned(), |v| format_percent(*v))).collect()
}

/// One row per model, one column per k, values in percent.
pub fn render_pass_table(rows: &[(&str, &PassTable)], ks: &[u32], format: ReportFormat) -> String {
    if format == ReportFormat::Json {
        let map: std::collections::BTreeMap<&str, &PassTable> = rows.iter().copied().collect();
        return json(&map);
    }
    let body = rows
        .iter()
        .map(|(label, t)| std::iter::once((*label).to_owned()).chain(pass_cells(t, ks)).collect())
        .collect();
    table(pass_header("Model", ks), body, format)
}

/// S/R/T/C columns with timeouts folded into R.
pub fn render_error_table(rows: &[(&str, &OutcomeTally<f64>)], format: ReportFormat) -> String {
    if format == ReportFormat::Json {
        let map: std::collections::BTreeMap<&str, [f64; 4]> = rows.iter().map(|(l, t)| (*l, t.folded())).collect();
        return json(&map);
    }
    let header = ["Model", "S", "R", "T", "C"].map(String::from).to_vec();
    let body = rows
        .iter()
        .map(|(label, t)| std::iter::once((*label).to_owned()).chain(t.folded().map(format_count)).collect())
        .collect();
    table(header, body, format)
}

/// Per-temperature outcome fractions at full precision, for plotting.
pub fn render_proportions_csv(report: &SuiteReport) -> String {
    let header = ["temperature", "programs", "syntax_error", "runtime_error", "timeout", "test_failure", "correct"]
        .map(String::from)
        .to_vec();
    let rows: Vec<Vec<String>> = report
        .proportions
        .iter()
        .map(|p| {
            let f = &p.fractions;
            vec![
                p.temperature.to_string(),
                p.programs.to_string(),
                f.syntax_error.to_string(),
                f.runtime_error.to_string(),
                f.timeout.to_string(),
                f.test_failure.to_string(),
                f.correct.to_string(),
            ]
        })
        .collect();
    csv_table(&header, &rows)
}

fn per_temperature_rows(report: &SuiteReport) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> = report
        .per_temperature
        .iter()
        .map(|t| std::iter::once(t.temperature.to_string()).chain(pass_cells(&t.pass_at_k, &report.ks)).collect())
        .collect();
    if !report.best_per_k.is_empty() {
        rows.push(std::iter::once("best".to_owned()).chain(pass_cells(&report.best_table(), &report.ks)).collect());
    }
    rows
}

/// Markdown: best pass@k, pass@k per temperature, the S/R/T/C table and
/// outcome percentages. CSV: pass@k per temperature plus a `best` row.
/// JSON: the full report.
pub fn render_report(report: &SuiteReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => json(report),
        ReportFormat::Csv => table(pass_header("temperature", &report.ks), per_temperature_rows(report), format),
        ReportFormat::Markdown => {
            let label = report.model_label.as_str();
            let has_rows = !report.per_temperature.is_empty();
            let best = report.best_table();
            let best_rows: &[(&str, &PassTable)] = if has_rows { &[(label, &best)] } else { &[] };
            let error_rows: &[(&str, &OutcomeTally<f64>)] =
                if has_rows { &[(label, &report.error_averages)] } else { &[] };

            let mut out = format!("## {} ({})\n\n", report.suite, label);
            if report.partial {
                out.push_str("Partial results: some problems have fewer samples than expected.\n\n");
            }
            out.push_str("### pass@k, best over temperatures\n\n");
            out.push_str(&render_pass_table(best_rows, &report.ks, format));
            out.push_str("\n### pass@k per temperature\n\n");
            let mut rows = per_temperature_rows(report);
            rows.retain(|r| r[0] != "best");
            out.push_str(&markdown_table(&pass_header("T", &report.ks), &rows));
            out.push_str("\n### Programs per problem by outcome\n\n");
            out.push_str(&render_error_table(error_rows, format));
            out.push_str("\n### Outcome share per temperature (%)\n\n");
            let header = ["T", "Syntax", "Runtime", "Timeout", "Test failure", "Correct"].map(String::from).to_vec();
            let rows: Vec<Vec<String>> = report
                .proportions
                .iter()
                .map(|p| {
                    let f = &p.fractions;
                    std::iter::once(p.temperature.to_string())
                        .chain([f.syntax_error, f.runtime_error, f.timeout, f.test_failure, f.correct].map(format_percent))
                        .collect()
                })
                .collect();
            out.push_str(&markdown_table(&header, &rows));
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::Suite;

    #[test]
    fn ties_round_half_even() {
        assert_eq!(format_count(0.25), "0.2");
        assert_eq!(format_count(0.75), "0.8");
        assert_eq!(format_percent(0.00125), "0.12");
        assert_eq!(format_percent(0.0553), "5.53");
    }

    #[test]
    fn pass_row_layout() {
        let t: PassTable = [(1, 0.0553), (10, 0.0883), (100, 0.1578)].into_iter().collect();
        let md = render_pass_table(&[("+SO", &t)], &[1, 10, 100], ReportFormat::Markdown);
        assert_eq!(md, "| Model | @1 | @10 | @100 |\n|---|---:|---:|---:|\n| +SO | 5.53 | 8.83 | 15.78 |\n");
        let csv = render_pass_table(&[("a, b", &t)], &[1], ReportFormat::Csv);
        assert_eq!(csv, "Model,@1\n\"a, b\",5.53\n");
    }

    #[test]
    fn missing_k_renders_as_dash() {
        let t: PassTable = [(1, 0.5)].into_iter().collect();
        let md = render_pass_table(&[("m", &t)], &[1, 10], ReportFormat::Markdown);
        assert!(md.ends_with("| m | 50.00 | --- |\n"));
    }

    #[test]
    fn error_row_layout() {
        let t = OutcomeTally { syntax_error: 43.5, runtime_error: 40.0, timeout: 2.9, test_failure: 105.4, correct: 7.5 };
        let md = render_error_table(&[("+SO", &t)], ReportFormat::Markdown);
        assert!(md.ends_with("| +SO | 43.5 | 42.9 | 105.4 | 7.5 |\n"), "{md}");
        assert!(rendered_row_drift(&["43.5", "42.9", "105.4", "7.5"], 200.0).unwrap() <= 1.0);
        assert!(rendered_row_drift(&["x"], 1.0).is_err());
    }

    #[test]
    fn empty_report_is_header_only() {
        let report = SuiteReport::from_temperatures(Suite::HumanEval, "m", vec![1, 10, 100], 0, false, vec![]).unwrap();
        let md = render_report(&report, ReportFormat::Markdown);
        assert!(md.contains("| Model | @1 | @10 | @100 |\n|---|---:|---:|---:|\n\n"), "{md}");
        assert!(md.contains("| Model | S | R | T | C |\n|---|---:|---:|---:|---:|\n\n"), "{md}");
        assert_eq!(render_report(&report, ReportFormat::Csv), "temperature,@1,@10,@100\n");
        assert_eq!(render_proportions_csv(&report), "temperature,programs,syntax_error,runtime_error,timeout,test_failure,correct\n");
    }

    #[test]
    fn format_names_parse() {
        assert_eq!("CSV".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert_eq!("md".parse::<ReportFormat>().unwrap(), ReportFormat::Markdown);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
