use std::collections::BTreeMap;
use std::fs;
use std::io::Write;

use anyhow::Context;
use serde::Serialize;
use sobench::corpus::{
    build_corpus, pack_windows, CorpusConfig, CorpusStats, ExternalCounts, PackConfig, PackSummary, StripOptions,
    TagFilter, TokenCounter, WhitespaceCounter,
};

use crate::cli::BuildCorpusArgs;
use crate::config::{apply, Config};
use crate::io::{open_input, write_json, write_jsonl};
use crate::manifest::RunManifest;

#[derive(Serialize)]
struct StatsFile<'a> {
    #[serde(flatten)]
    corpus: &'a CorpusStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    token_count_misses: Option<u64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    packing: BTreeMap<String, PackSummary>,
}

pub fn run(args: BuildCorpusArgs, mut config: Config, out: &mut dyn Write) -> anyhow::Result<()> {
    let section = &mut config.corpus;
    apply(&mut section.variants, args.variants);
    apply(&mut section.tags, args.tags);
    apply(&mut section.window_size, args.window_size);
    section.inline_code_as_code |= args.inline_code_as_code;
    section.pack |= args.pack;
    if section.variants.is_empty() {
        anyhow::bail!("no corpus variants selected");
    }

    let mut manifest = RunManifest::start("build-corpus", &config);
    let dump = open_input(&args.dump)?;
    manifest.add_input(&args.dump)?;

    let section = &config.corpus;
    let corpus_config = CorpusConfig {
        variants: section.variants.clone(),
        tag_filter: TagFilter::from_specs(&section.tags),
        separator: section.separator.clone(),
        strip: StripOptions { inline_code_as_code: section.inline_code_as_code },
    };
    let external = match &args.token_counts {
        Some(path) => {
            manifest.add_input(path)?;
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            Some(ExternalCounts::from_jsonl(&text)?)
        }
        None => None,
    };
    let counter: &dyn TokenCounter = match &external {
        Some(counts) => counts,
        None => &WhitespaceCounter,
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers).build()?;
    let output = pool
        .install(|| build_corpus(dump, &corpus_config, counter))
        .with_context(|| format!("building corpus from {}", args.dump.display()))?;

    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let mut packing = BTreeMap::new();
    for (variant, records) in &output.records {
        write_jsonl(&args.out.join(format!("{variant}.jsonl")), records)?;
        if section.pack {
            let pack = PackConfig {
                window_size: section.window_size,
                record_separator: section.record_separator.clone(),
                min_window_fill: section.min_window_fill,
            };
            let (windows, summary) = pack_windows(records, &pack)?;
            write_jsonl(&args.out.join(format!("{variant}.windows.jsonl")), &windows)?;
            packing.insert(variant.to_string(), summary);
        }
    }
    let misses = external.as_ref().map(ExternalCounts::misses);
    if let Some(m) = misses.filter(|&m| m > 0) {
        log::warn!("{m} records had no external token count; whitespace counts were used");
    }
    let stats = StatsFile { corpus: &output.stats, token_count_misses: misses, packing };
    write_json(&args.out.join("stats.json"), &stats)?;
    manifest.finish(&args.out.join("manifest.json"))?;

    let s = &output.stats;
    writeln!(
        out,
        "{} questions, {} answers, {} records, {} approx tokens -> {}",
        s.question_count,
        s.answer_count,
        s.record_count,
        s.total_approx_tokens,
        args.out.display()
    )?;
    Ok(())
}
