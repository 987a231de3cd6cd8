use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::time::Duration;

use anyhow::Context;
use sobench::metrics::{render_report, AggregateOptions, ReportFormat, SuiteReport};
use sobench::sandbox::{run_batch, ExecLimits, Job, PythonSandbox, ResultKey};
use sobench::tasks::{assemble_program, load_suite, Completion, EvalTask, Suite};

use crate::cli::EvalArgs;
use crate::config::{apply, Config};
use crate::io::{read_jsonl, write_json, write_jsonl};
use crate::manifest::RunManifest;

/// The configured k set, or the suite's standard set restricted to k <= n.
fn choose_ks(configured: &[u32], suite: Suite, n: u64) -> Vec<u32> {
    if !configured.is_empty() {
        return configured.to_vec();
    }
    let (kept, dropped): (Vec<u32>, Vec<u32>) = suite.default_ks().into_iter().partition(|&k| u64::from(k) <= n);
    if !dropped.is_empty() {
        log::warn!("only {n} samples per problem; pass@k not reported for k = {dropped:?}");
    }
    kept
}

pub fn run(args: EvalArgs, mut config: Config, out: &mut dyn Write) -> anyhow::Result<()> {
    let e = &mut config.eval;
    apply(&mut e.timeout_s, args.timeout_s);
    apply(&mut e.memory_mb, args.memory_mb);
    apply(&mut e.ks, args.ks);
    apply(&mut e.label, args.label);
    if args.python.is_some() {
        e.python = args.python;
    }
    e.allow_partial |= args.allow_partial;
    let e = &config.eval;

    let suite_kind: Suite = args.suite.suite_kind.into();
    let suite = load_suite(&args.suite.suite, suite_kind)?;
    for w in &suite.warnings {
        log::warn!("{w}");
    }
    let tasks: BTreeMap<&str, &EvalTask> = suite.tasks.iter().map(|t| (t.task_id.as_str(), t)).collect();
    let completions: Vec<Completion> = read_jsonl(&args.completions)?;

    let unknown: BTreeSet<&str> =
        completions.iter().map(|c| c.task_id.as_str()).filter(|id| !tasks.contains_key(id)).collect();
    if !unknown.is_empty() {
        anyhow::bail!(
            "completions reference tasks not in {}: {}",
            args.suite.suite.display(),
            unknown.into_iter().collect::<Vec<_>>().join(", ")
        );
    }
    let covered: BTreeSet<&str> = completions.iter().map(|c| c.task_id.as_str()).collect();
    let uncovered: Vec<&str> = tasks.keys().copied().filter(|id| !covered.contains(id)).collect();
    if !uncovered.is_empty() {
        if !e.allow_partial {
            anyhow::bail!(
                "no completions for {} task(s): {} (pass --allow-partial to score the rest)",
                uncovered.len(),
                uncovered.join(", ")
            );
        }
        log::warn!("no completions for {} task(s); scoring the rest", uncovered.len());
    }

    let sandbox = match &e.python {
        Some(p) => PythonSandbox::new(p)?,
        None => PythonSandbox::from_env()?,
    };
    let mut manifest = RunManifest::start("eval", &config);
    manifest.interpreter_version = Some(sandbox.version().to_owned());
    manifest.add_input(&args.suite.suite)?;
    manifest.add_input(&args.completions)?;

    let mut stops = suite_kind.default_stops();
    stops.extend(config.generation.stop_sequences.iter().cloned());
    let jobs: Vec<Job> = completions
        .iter()
        .map(|c| Job {
            key: ResultKey { task_id: c.task_id.clone(), temperature: c.temperature, sample_index: c.sample_index },
            source: assemble_program(tasks[c.task_id.as_str()], &c.text, &stops),
        })
        .collect();
    let generation_errors = completions.iter().filter(|c| c.error.is_some()).count();
    if generation_errors > 0 {
        log::warn!("{generation_errors} completions carry a generation error and are scored as empty programs");
    }

    let limits = ExecLimits {
        wall_timeout: Duration::from_secs_f64(e.timeout_s),
        memory_cap: e.memory_mb * 1024 * 1024,
        temp_root: None,
    };
    let batch = run_batch(&sandbox, jobs, &limits, config.workers)?;

    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    write_jsonl(&args.out.join("results.jsonl"), &batch.results)?;
    if !batch.harness_failures.is_empty() {
        log::error!("{} programs could not be run; see harness_failures.json", batch.harness_failures.len());
        write_json(&args.out.join("harness_failures.json"), &batch.harness_failures)?;
    }

    let mut per_cell: BTreeMap<(&str, u64), u64> = BTreeMap::new();
    for c in &completions {
        *per_cell.entry((c.task_id.as_str(), c.temperature.to_bits())).or_default() += 1;
    }
    let n = per_cell.values().copied().max().unwrap_or(0);
    let options = AggregateOptions {
        ks: choose_ks(&e.ks, suite_kind, n),
        expected_tasks: Some(suite.tasks.iter().map(|t| t.task_id.clone()).collect()),
        samples_per_problem: Some(n),
        allow_partial: e.allow_partial,
    };
    let (report, warnings) = SuiteReport::from_results(suite_kind, e.label.clone(), &batch.results, &options)
        .context("aggregating results")?;
    for w in &warnings {
        log::warn!("partial: {w}");
    }
    write_json(&args.out.join("report.json"), &report)?;
    let markdown = render_report(&report, ReportFormat::Markdown);
    fs::write(args.out.join("report.md"), &markdown)?;

    manifest.detail("programs", batch.results.len());
    manifest.detail("harness_failures", batch.harness_failures.len());
    manifest.detail("generation_errors", generation_errors);
    manifest.finish(&args.out.join("manifest.json"))?;
    out.write_all(markdown.as_bytes())?;
    Ok(())
}
