use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::align::QAThread;
use super::html::{strip_html_with, SegmentKind, SegmentList, StripOptions};
use super::CorpusError;

/// Which modalities of the answer bodies are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModalityVariant {
    Full,
    NoCode,
    #[serde(rename = "no_nl")]
    NoNl,
}

impl ModalityVariant {
    pub const ALL: [ModalityVariant; 3] = [ModalityVariant::Full, ModalityVariant::NoCode, ModalityVariant::NoNl];

    pub fn as_str(self) -> &'static str {
        match self {
            ModalityVariant::Full => "full",
            ModalityVariant::NoCode => "no_code",
            ModalityVariant::NoNl => "no_nl",
        }
    }
}

impl fmt::Display for ModalityVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModalityVariant {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "full" => Ok(ModalityVariant::Full),
            "no_code" | "nocode" => Ok(ModalityVariant::NoCode),
            "no_nl" | "nonl" => Ok(ModalityVariant::NoNl),
            _ => Err(CorpusError::UnknownVariant(s.to_string())),
        }
    }
}

/// Renders a segment list under a variant. Nothing marks where content was
/// removed.
pub fn render_variant(segments: &SegmentList, variant: ModalityVariant) -> String {
    let pick = |kind: SegmentKind| {
        segments
            .segments()
            .iter()
            .filter(move |s| s.kind == kind)
            .map(|s| s.text.as_str())
    };
    match variant {
        ModalityVariant::Full => segments.segments().iter().map(|s| s.text.as_str()).collect(),
        ModalityVariant::NoCode => pick(SegmentKind::Nl).collect(),
        ModalityVariant::NoNl => pick(SegmentKind::Code).collect::<Vec<_>>().join("\n"),
    }
}

/// A sorted thread with every body already split into segments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedThread {
    pub question_id: u64,
    pub title: String,
    pub question: SegmentList,
    /// In sorted order.
    pub answers: Vec<SegmentList>,
}

/// Titles are stored as plain text in the dump, so they only get entity
/// decoding and whitespace collapsing.
fn clean_title(title: &str) -> String {
    html_escape::decode_html_entities(title)
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

impl PreparedThread {
    pub fn from_thread(thread: &QAThread, options: StripOptions) -> Self {
        PreparedThread {
            question_id: thread.question.id,
            title: clean_title(thread.question.title.as_deref().unwrap_or("")),
            question: strip_html_with(&thread.question.body_html, options),
            answers: thread
                .answers
                .iter()
                .map(|a| strip_html_with(&a.body_html, options))
                .collect(),
        }
    }
}

/// Token-count proxy used for corpus accounting.
pub trait TokenCounter: Sync {
    fn count(&self, question_id: u64, variant: ModalityVariant, text: &str) -> u64;
}

/// Whitespace-delimited words.
#[derive(Debug, Default, Clone, Copy)]
pub struct WhitespaceCounter;

impl TokenCounter for WhitespaceCounter {
    fn count(&self, _question_id: u64, _variant: ModalityVariant, text: &str) -> u64 {
        text.split_whitespace().count() as u64
    }
}

#[derive(Debug, Deserialize)]
struct CountLine {
    question_id: u64,
    variant: ModalityVariant,
    tokens: u64,
}

/// Exact per-record counts produced by an external tokenizer, one JSONL line
/// `{"question_id", "variant", "tokens"}` per record. Records missing from
/// the file fall back to the whitespace proxy and are tallied.
#[derive(Debug, Default)]
pub struct ExternalCounts {
    counts: HashMap<(u64, ModalityVariant), u64>,
    misses: AtomicU64,
}

impl ExternalCounts {
    pub fn from_jsonl(input: &str) -> Result<Self, CorpusError> {
        let mut counts = HashMap::new();
        for (i, line) in input.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: CountLine = serde_json::from_str(line)
                .map_err(|e| CorpusError::CountFile { line: i + 1, message: e.to_string() })?;
            counts.insert((parsed.question_id, parsed.variant), parsed.tokens);
        }
        Ok(ExternalCounts { counts, misses: AtomicU64::new(0) })
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

impl TokenCounter for ExternalCounts {
    fn count(&self, question_id: u64, variant: ModalityVariant, text: &str) -> u64 {
        match self.counts.get(&(question_id, variant)) {
            Some(n) => *n,
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                WhitespaceCounter.count(question_id, variant, text)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub question_id: u64,
    pub variant: ModalityVariant,
    pub text: String,
    #[serde(rename = "approx_tokens")]
    pub approx_token_count: u64,
}

/// Title, question body and every answer packed into one sequence. The
/// question part is always rendered in full; only answers are ablated.
pub fn build_record(
    thread: &PreparedThread,
    variant: ModalityVariant,
    separator: &str,
    counter: &dyn TokenCounter,
) -> TrainingRecord {
    let mut text = String::new();
    text.push_str(&thread.title);
    text.push_str(separator);
    text.push_str(&render_variant(&thread.question, ModalityVariant::Full));
    text.push_str(separator);
    let answers: Vec<String> = thread.answers.iter().map(|a| render_variant(a, variant)).collect();
    text.push_str(&answers.join(separator));
    let approx_token_count = counter.count(thread.question_id, variant, &text);
    TrainingRecord { question_id: thread.question_id, variant, text, approx_token_count }
}
