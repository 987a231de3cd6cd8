//! StackOverflow corpus construction.

mod align;
mod dump;
mod html;
mod pack;
mod record;
mod stats;

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use align::{filter_and_align, sort_answers, AlignOutput, QAThread, TagFilter, TagPredicate};
pub use dump::{parse_dump, parse_tags, DumpError, DumpReader, PostKind, RawPost};
pub use html::{strip_html, strip_html_with, Segment, SegmentKind, SegmentList, StripOptions};
pub use pack::{pack_windows, token_spans, PackConfig, PackSummary, PackedWindow, Packer};
pub use record::{
    build_record, render_variant, ExternalCounts, ModalityVariant, PreparedThread, TokenCounter, TrainingRecord,
    WhitespaceCounter,
};
pub use stats::{corpus_stats, CorpusStats, SkipCounters};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error(transparent)]
    Dump(#[from] DumpError),
    #[error("unknown modality variant `{0}` (expected full, no_code or no_nl)")]
    UnknownVariant(String),
    #[error("window size must be at least 2, got {0}")]
    WindowTooSmall(usize),
    #[error("minimum window fill {min_fill} exceeds window size {window}")]
    MinFillTooLarge { min_fill: usize, window: usize },
    #[error("token count file line {line}: {message}")]
    CountFile { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub variants: Vec<ModalityVariant>,
    pub tag_filter: TagFilter,
    /// Joins title, question body and answers inside a record.
    pub separator: String,
    pub strip: StripOptions,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            variants: ModalityVariant::ALL.to_vec(),
            tag_filter: TagFilter::default(),
            separator: "\n".into(),
            strip: StripOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusOutput {
    /// Records per variant, each ordered by question id.
    pub records: BTreeMap<ModalityVariant, Vec<TrainingRecord>>,
    pub stats: CorpusStats,
}

/// Runs the whole corpus pipeline over a dump: parse, filter and align,
/// sort answers, strip HTML and render one record per thread and variant.
/// Per-thread work runs on the rayon pool; output order is by question id.
pub fn build_corpus<R: BufRead>(
    dump: R,
    config: &CorpusConfig,
    counter: &dyn TokenCounter,
) -> Result<CorpusOutput, CorpusError> {
    let mut reader = DumpReader::new(dump);
    let mut fatal = None;
    let posts = reader.by_ref().map_while(|row| match row {
        Ok(post) => Some(post),
        Err(err) => {
            fatal = Some(err);
            None
        }
    });
    let aligned = filter_and_align(posts, &config.tag_filter);
    if let Some(err) = fatal {
        return Err(err.into());
    }
    let skipped = SkipCounters {
        skipped_rows: reader.skipped_rows(),
        orphan_answers: aligned.orphan_answers,
        unanswered_questions: aligned.unanswered_questions,
    };
    Ok(build_from_threads(aligned.threads, config, counter, skipped))
}

pub fn build_from_threads(
    threads: Vec<QAThread>,
    config: &CorpusConfig,
    counter: &dyn TokenCounter,
    skipped: SkipCounters,
) -> CorpusOutput {
    let answer_count: u64 = threads.iter().map(|t| t.answers.len() as u64).sum();
    let prepared: Vec<PreparedThread> = threads
        .into_par_iter()
        .map(|t| PreparedThread::from_thread(&sort_answers(t), config.strip))
        .collect();

    let variants: BTreeSet<ModalityVariant> = config.variants.iter().copied().collect();
    let mut records = BTreeMap::new();
    for variant in variants {
        let built: Vec<TrainingRecord> = prepared
            .par_iter()
            .map(|t| build_record(t, variant, &config.separator, counter))
            .collect();
        records.insert(variant, built);
    }
    let stats = corpus_stats(records.values().flatten(), answer_count, skipped);
    CorpusOutput { records, stats }
}
