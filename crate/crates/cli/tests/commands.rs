mod common;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::Command;

use common::{core_fixture, fixture, sobench};
use sobench::metrics::SuiteReport;
use sobench_cli::manifest::{sha256_file, RunManifest};

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_corpus_writes_variants_stats_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("corpus");
    let stdout = sobench(&["build-corpus", "--dump", s(&core_fixture("mini_posts.xml")), "--out", s(&out)]).unwrap();
    assert!(stdout.starts_with("4 questions, 10 answers"), "{stdout}");
    for name in ["full.jsonl", "no_code.jsonl", "no_nl.jsonl", "stats.json", "manifest.json"] {
        assert!(out.join(name).exists(), "{name}");
    }
    assert_eq!(fs::read_to_string(out.join("full.jsonl")).unwrap().lines().count(), 4);
    let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["question_count"], 4);
    assert_eq!(stats["skipped_rows"], 1);
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.input_checksums.values().next().unwrap(), &sha256_file(&core_fixture("mini_posts.xml")).unwrap());
}

#[test]
fn variant_selection_and_packing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("corpus");
    sobench(&[
        "build-corpus", "--dump", s(&core_fixture("mini_posts.xml")), "--out", s(&out),
        "--variants", "full", "--pack", "--window-size", "64",
    ])
    .unwrap();
    let mut names: Vec<String> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["full.jsonl", "full.windows.jsonl", "manifest.json", "stats.json"]);
    let windows = fs::read_to_string(out.join("full.windows.jsonl")).unwrap();
    for line in windows.lines() {
        let w: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(w["tokens"].as_u64().unwrap() <= 64);
    }
    let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["packing"]["full"]["windows"].as_u64().unwrap() as usize, windows.lines().count());
}

#[test]
fn gzipped_dump_gives_the_same_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let gz = dir.path().join("Posts.xml.gz");
    let mut enc = flate2::write::GzEncoder::new(fs::File::create(&gz).unwrap(), flate2::Compression::default());
    enc.write_all(&fs::read(core_fixture("mini_posts.xml")).unwrap()).unwrap();
    enc.finish().unwrap();
    sobench(&["build-corpus", "--dump", s(&gz), "--out", s(&dir.path().join("a"))]).unwrap();
    sobench(&["build-corpus", "--dump", s(&core_fixture("mini_posts.xml")), "--out", s(&dir.path().join("b"))]).unwrap();
    assert_eq!(
        fs::read(dir.path().join("a/no_nl.jsonl")).unwrap(),
        fs::read(dir.path().join("b/no_nl.jsonl")).unwrap()
    );
}

#[test]
fn missing_dump_exits_nonzero_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope/Posts.xml");
    let output = Command::new(env!("CARGO_BIN_EXE_sobench"))
        .args(["build-corpus", "--dump", s(&missing), "--out", s(&dir.path().join("out"))])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains(s(&missing)), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

fn canonical_completions(dir: &Path, suite: &str, take: usize) -> std::path::PathBuf {
    let text = fs::read_to_string(fixture(suite)).unwrap();
    let path = dir.join("canonical.jsonl");
    let mut out = String::new();
    for line in text.lines().take(take) {
        let task: serde_json::Value = serde_json::from_str(line).unwrap();
        let record = serde_json::json!({
            "task_id": task["task_id"], "sample_index": 0, "temperature": 0.2, "text": task["canonical_solution"],
        });
        out.push_str(&format!("{record}\n"));
    }
    fs::write(&path, out).unwrap();
    path
}

fn three_task_suite(dir: &Path) -> std::path::PathBuf {
    let text = fs::read_to_string(fixture("humaneval_mini.jsonl")).unwrap();
    let path = dir.join("suite.jsonl");
    fs::write(&path, text.lines().take(3).map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    path
}

#[test]
fn eval_of_canonical_solutions_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let suite = three_task_suite(dir.path());
    let completions = canonical_completions(dir.path(), "humaneval_mini.jsonl", 3);
    let before = (sha256_file(&suite).unwrap(), sha256_file(&completions).unwrap());
    let out = dir.path().join("eval");
    let stdout = sobench(&[
        "--workers", "2", "eval", "--suite", s(&suite), "--suite-kind", "humaneval",
        "--completions", s(&completions), "--out", s(&out),
    ])
    .unwrap();
    assert!(stdout.contains("| model | 100.00 |"), "{stdout}");
    let report: SuiteReport = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report.ks, vec![1]);
    assert_eq!(report.best_per_k[&1].value, 1.0);
    assert_eq!(fs::read_to_string(out.join("results.jsonl")).unwrap().lines().count(), 3);
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.interpreter_version.unwrap().starts_with("3."));
    assert_eq!(manifest.config.workers, 2);
    assert_eq!(manifest.input_checksums.len(), 2);
    assert_eq!(before, (sha256_file(&suite).unwrap(), sha256_file(&completions).unwrap()));

    // Identical inputs give an identical report.
    let again = dir.path().join("again");
    sobench(&["eval", "--suite", s(&suite), "--suite-kind", "humaneval", "--completions", s(&completions), "--out", s(&again)])
        .unwrap();
    assert_eq!(fs::read(out.join("report.json")).unwrap(), fs::read(again.join("report.json")).unwrap());
}

#[test]
fn eval_lists_tasks_without_completions() {
    let dir = tempfile::tempdir().unwrap();
    let suite = three_task_suite(dir.path());
    let completions = canonical_completions(dir.path(), "humaneval_mini.jsonl", 1);
    let args = |out: &str| {
        vec![
            "eval".to_owned(), "--suite".into(), s(&suite).into(), "--suite-kind".into(), "humaneval".into(),
            "--completions".into(), s(&completions).into(), "--out".into(), s(&dir.path().join(out)).into(),
        ]
    };
    let strict: Vec<String> = args("strict");
    let err = sobench(&strict.iter().map(String::as_str).collect::<Vec<_>>()).unwrap_err().to_string();
    assert!(err.contains("HumanEval/1, HumanEval/2"), "{err}");
    assert!(!dir.path().join("strict/report.json").exists());

    let mut partial = args("partial");
    partial.push("--allow-partial".into());
    sobench(&partial.iter().map(String::as_str).collect::<Vec<_>>()).unwrap();
    let report: SuiteReport =
        serde_json::from_str(&fs::read_to_string(dir.path().join("partial/report.json")).unwrap()).unwrap();
    assert!(report.partial);
    assert_eq!(report.per_temperature[0].problems.len(), 1);
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sobench.toml");
    fs::write(&config, "workers = 3\n[eval]\nlabel = \"from-config\"\ntimeout_s = 4.0\n").unwrap();
    let suite = three_task_suite(dir.path());
    let completions = canonical_completions(dir.path(), "humaneval_mini.jsonl", 3);
    let out = dir.path().join("eval");
    sobench(&[
        "--config", s(&config), "eval", "--suite", s(&suite), "--suite-kind", "humaneval",
        "--completions", s(&completions), "--out", s(&out), "--label", "from-flag",
    ])
    .unwrap();
    let manifest: RunManifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.config.workers, 3);
    assert_eq!(manifest.config.eval.label, "from-flag");
    assert_eq!(manifest.config.eval.timeout_s, 4.0);
    assert_eq!(manifest.config.eval.memory_mb, 512);

    fs::write(&config, "[eval]\nunknown = 1\n").unwrap();
    assert!(sobench(&["--config", s(&config), "stats", s(&completions)]).is_err());
}

fn report_file(dir: &Path, name: &str, label: &str, t: f64, values: &[(u32, f64)]) -> std::path::PathBuf {
    use sobench::metrics::TemperatureReport;
    let table = values.iter().copied().collect();
    let temp = TemperatureReport { temperature: t, problems: vec![], pass_at_k: table };
    let ks = values.iter().map(|v| v.0).collect();
    let report = SuiteReport::from_temperatures(sobench::tasks::Suite::Mbpp, label, ks, 200, false, vec![temp]).unwrap();
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string(&report).unwrap()).unwrap();
    path
}

#[test]
fn report_merges_renders_and_compares() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let runs = [
        report_file(d, "t02.json", "base", 0.2, &[(1, 0.025), (10, 0.10)]),
        report_file(d, "t06.json", "base", 0.6, &[(1, 0.020), (10, 0.1155)]),
        report_file(d, "t08.json", "base", 0.8, &[(1, 0.015), (10, 0.11)]),
    ];
    let csv = sobench(&["report", "--format", "csv", s(&runs[0]), s(&runs[1]), s(&runs[2])]).unwrap();
    assert_eq!(csv, "temperature,@1,@10\n0.2,2.50,10.00\n0.6,2.00,11.55\n0.8,1.50,11.00\nbest,2.50,11.55\n");

    let treated = report_file(d, "so.json", "so", 0.2, &[(1, 0.058), (10, 0.1919)]);
    let merged = d.join("base.json");
    sobench(&["report", "--format", "json", "--out", s(&merged), s(&runs[0]), s(&runs[1]), s(&runs[2])]).unwrap();
    let md = sobench(&["report", "--compare", s(&merged), s(&treated)]).unwrap();
    assert!(md.contains("| 1 | 2.50 | 5.80 | 132.00 |"), "{md}");
    assert!(md.contains("| 10 | 11.55 | 19.19 | 66.15 |"), "{md}");
    assert!(md.contains("Mean percent change: 99.07% over k = 1, 10"), "{md}");

    let props = d.join("props.csv");
    sobench(&["report", "--proportions-csv", s(&props), s(&runs[0])]).unwrap();
    assert!(fs::read_to_string(&props).unwrap().starts_with("temperature,programs,"));
}

#[test]
fn stats_recognises_output_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    sobench(&["build-corpus", "--dump", s(&core_fixture("mini_posts.xml")), "--out", s(&corpus), "--pack", "--window-size", "32"])
        .unwrap();
    let out = sobench(&[
        "stats",
        s(&corpus.join("full.jsonl")),
        s(&corpus.join("full.windows.jsonl")),
        s(&fixture("mbpp_replay.jsonl")),
    ])
    .unwrap();
    assert!(out.contains("full.jsonl (corpus, 4 lines)"), "{out}");
    assert!(out.contains("4 questions"), "{out}");
    assert!(out.contains("(windows,"), "{out}");
    assert!(out.contains("(completions, 75 lines)\n  5 tasks, 0 generation errors"), "{out}");
}
