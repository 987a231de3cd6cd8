//! Fixed-size packing of training records.
//!
//! Records are joined into one token stream with a separator between
//! consecutive records, and the stream is cut at exact `window_size`
//! boundaries. Tokens are whitespace-delimited words; each token carries the
//! whitespace that precedes it so window text keeps the original layout.

use serde::{Deserialize, Serialize};

use super::record::TrainingRecord;
use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackedWindow {
    pub window_index: u64,
    pub text: String,
    pub source_question_ids: Vec<u64>,
    #[serde(rename = "tokens")]
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackConfig {
    pub window_size: usize,
    pub record_separator: String,
    /// Smallest trailing window that is still emitted. Defaults to half the
    /// window size.
    pub min_window_fill: Option<usize>,
}

impl Default for PackConfig {
    fn default() -> Self {
        PackConfig {
            window_size: 1024,
            record_separator: "\n<|endoftext|>\n".into(),
            min_window_fill: None,
        }
    }
}

impl PackConfig {
    pub fn min_fill(&self) -> usize {
        self.min_window_fill.unwrap_or(self.window_size / 2)
    }
}

/// Splits text into whitespace-delimited tokens. Each token starts right
/// after the previous word (so it owns the whitespace before its own word)
/// and the last token runs to the end of the text. For text containing at
/// least one word the spans concatenate back to the input.
pub fn token_spans(text: &str) -> Vec<&str> {
    let mut word_ends = Vec::new();
    let mut in_word = false;
    for (i, c) in text.char_indices() {
        match (c.is_whitespace(), in_word) {
            (true, true) => {
                word_ends.push(i);
                in_word = false;
            }
            (false, false) => in_word = true,
            _ => {}
        }
    }
    if in_word {
        word_ends.push(text.len());
    }
    let last = word_ends.len().saturating_sub(1);
    let mut begin = 0;
    word_ends
        .iter()
        .enumerate()
        .map(|(k, &end)| {
            let end = if k == last { text.len() } else { end };
            let span = &text[begin..end];
            begin = end;
            span
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackSummary {
    pub windows: u64,
    pub total_tokens: u64,
    pub dropped_tail_tokens: u64,
}

/// Incremental packer. Feed records in order with [`Packer::push`], then call
/// [`Packer::finish`] for the trailing window.
#[derive(Debug)]
pub struct Packer {
    config: PackConfig,
    separator_tokens: Vec<String>,
    current: String,
    current_tokens: usize,
    current_ids: Vec<u64>,
    next_index: u64,
    records_seen: u64,
    total_tokens: u64,
    emitted_tokens: u64,
}

impl Packer {
    pub fn new(config: PackConfig) -> Result<Self, CorpusError> {
        if config.window_size < 2 {
            return Err(CorpusError::WindowTooSmall(config.window_size));
        }
        if config.min_fill() > config.window_size {
            return Err(CorpusError::MinFillTooLarge { min_fill: config.min_fill(), window: config.window_size });
        }
        let separator_tokens = token_spans(&config.record_separator).into_iter().map(str::to_string).collect();
        Ok(Packer {
            config,
            separator_tokens,
            current: String::new(),
            current_tokens: 0,
            current_ids: Vec::new(),
            next_index: 0,
            records_seen: 0,
            total_tokens: 0,
            emitted_tokens: 0,
        })
    }

    fn emit(&mut self) -> PackedWindow {
        let window = PackedWindow {
            window_index: self.next_index,
            text: std::mem::take(&mut self.current),
            source_question_ids: std::mem::take(&mut self.current_ids),
            token_count: self.current_tokens,
        };
        self.emitted_tokens += self.current_tokens as u64;
        self.current_tokens = 0;
        self.next_index += 1;
        window
    }

    fn push_token(&mut self, token: &str, source: Option<u64>, out: &mut Vec<PackedWindow>) {
        let token = if self.current_tokens == 0 { token.trim_start() } else { token };
        self.current.push_str(token);
        self.current_tokens += 1;
        self.total_tokens += 1;
        if let Some(id) = source {
            if self.current_ids.last() != Some(&id) {
                self.current_ids.push(id);
            }
        }
        if self.current_tokens == self.config.window_size {
            out.push(self.emit());
        }
    }

    /// Adds one record and returns any windows it completed.
    pub fn push(&mut self, record: &TrainingRecord) -> Vec<PackedWindow> {
        let mut out = Vec::new();
        if self.records_seen > 0 {
            let separator = std::mem::take(&mut self.separator_tokens);
            for token in &separator {
                self.push_token(token, None, &mut out);
            }
            self.separator_tokens = separator;
        }
        self.records_seen += 1;
        for token in token_spans(&record.text) {
            self.push_token(token, Some(record.question_id), &mut out);
        }
        out
    }

    /// Emits the trailing partial window when it is full enough.
    pub fn finish(mut self) -> (Option<PackedWindow>, PackSummary) {
        let tail = if self.current_tokens > 0 && self.current_tokens >= self.config.min_fill() {
            Some(self.emit())
        } else {
            None
        };
        let summary = PackSummary {
            windows: self.next_index,
            total_tokens: self.total_tokens,
            dropped_tail_tokens: self.total_tokens - self.emitted_tokens,
        };
        (tail, summary)
    }
}

pub fn pack_windows<'a, I>(records: I, config: &PackConfig) -> Result<(Vec<PackedWindow>, PackSummary), CorpusError>
where
    I: IntoIterator<Item = &'a TrainingRecord>,
{
    let mut packer = Packer::new(config.clone())?;
    let mut windows = Vec::new();
    for record in records {
        windows.extend(packer.push(record));
    }
    let (tail, summary) = packer.finish();
    windows.extend(tail);
    Ok((windows, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::record::ModalityVariant;
    use proptest::prelude::*;

    fn record(id: u64, words: usize) -> TrainingRecord {
        let text = (0..words).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        TrainingRecord { question_id: id, variant: ModalityVariant::Full, text, approx_token_count: words as u64 }
    }

    fn config(window: usize, sep: &str) -> PackConfig {
        PackConfig { window_size: window, record_separator: sep.into(), min_window_fill: None }
    }

    #[test]
    fn token_spans_round_trip() {
        assert_eq!(token_spans("a  b\nc \n"), vec!["a", "  b", "\nc \n"]);
        assert_eq!(token_spans("  lead"), vec!["  lead"]);
        assert!(token_spans("   ").is_empty());
        assert!(token_spans("").is_empty());
    }

    #[test]
    fn two_records_overflow_then_tail_dropped() {
        let records = [record(1, 600), record(2, 600)];
        let (windows, summary) = pack_windows(&records, &config(1024, "<|endoftext|>")).unwrap();
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].token_count, 1024);
        assert_eq!(windows[0].source_question_ids, vec![1, 2]);
        assert_eq!(summary.total_tokens, 1201);
        assert_eq!(summary.dropped_tail_tokens, 177);
    }

    #[test]
    fn exact_window_record() {
        let (windows, summary) = pack_windows(&[record(7, 1024)], &config(1024, "<|endoftext|>")).unwrap();
        assert_eq!(windows.len(), 1);
        assert_eq!(windows[0].token_count, 1024);
        assert_eq!(windows[0].window_index, 0);
        assert_eq!(summary.dropped_tail_tokens, 0);
    }

    #[test]
    fn empty_stream() {
        let (windows, summary) = pack_windows(&[], &PackConfig::default()).unwrap();
        assert!(windows.is_empty());
        assert_eq!(summary, PackSummary::default());
    }

    #[test]
    fn long_record_is_split_not_dropped() {
        let (windows, _) = pack_windows(&[record(3, 10)], &config(4, "|")).unwrap();
        assert_eq!(windows.iter().map(|w| w.token_count).collect::<Vec<_>>(), vec![4, 4, 2]);
        assert_eq!(windows[1].text, "w4 w5 w6 w7");
        assert!(windows.iter().all(|w| w.source_question_ids == vec![3]));
    }

    #[test]
    fn trailing_window_kept_when_half_full() {
        let (windows, summary) = pack_windows(&[record(1, 6)], &config(4, "|")).unwrap();
        assert_eq!(windows.len(), 2);
        assert_eq!(windows[1].token_count, 2);
        assert_eq!(summary.dropped_tail_tokens, 0);
    }

    #[test]
    fn window_size_validation() {
        assert!(matches!(Packer::new(config(1, "|")), Err(CorpusError::WindowTooSmall(1))));
    }

    proptest! {
        #[test]
        fn conservation(sizes in proptest::collection::vec(0usize..40, 0..12), window in 2usize..32) {
            let records: Vec<_> = sizes.iter().enumerate().map(|(i, n)| record(i as u64 + 1, *n)).collect();
            let cfg = config(window, "\n<sep>\n");
            let (windows, summary) = pack_windows(&records, &cfg).unwrap();
            let stream: usize = sizes.iter().sum::<usize>() + records.len().saturating_sub(1);
            prop_assert_eq!(summary.total_tokens as usize, stream);
            let packed: usize = windows.iter().map(|w| w.token_count).sum();
            prop_assert_eq!(packed as u64 + summary.dropped_tail_tokens, summary.total_tokens);
            for (i, w) in windows.iter().enumerate() {
                prop_assert_eq!(w.window_index, i as u64);
                prop_assert!(w.token_count <= window);
                prop_assert!(w.token_count >= cfg.min_fill());
                prop_assert_eq!(w.text.split_whitespace().count(), w.token_count);
            }
        }
    }
}
