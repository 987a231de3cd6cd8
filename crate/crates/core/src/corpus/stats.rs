use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::record::TrainingRecord;

/// Counts gathered while reading and aligning the dump.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipCounters {
    pub skipped_rows: u64,
    pub orphan_answers: u64,
    pub unanswered_questions: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub question_count: u64,
    pub answer_count: u64,
    pub record_count: u64,
    pub total_approx_tokens: u64,
    pub skipped_rows: u64,
    pub orphan_answers: u64,
    pub unanswered_questions: u64,
}

/// `answer_count` is the number of answers across the distinct questions in
/// `records` (records do not carry it).
pub fn corpus_stats<'a, I>(records: I, answer_count: u64, skipped: SkipCounters) -> CorpusStats
where
    I: IntoIterator<Item = &'a TrainingRecord>,
{
    let mut questions = BTreeSet::new();
    let mut record_count = 0;
    let mut total_approx_tokens = 0;
    for record in records {
        questions.insert(record.question_id);
        record_count += 1;
        total_approx_tokens += record.approx_token_count;
    }
    CorpusStats {
        question_count: questions.len() as u64,
        answer_count,
        record_count,
        total_approx_tokens,
        skipped_rows: skipped.skipped_rows,
        orphan_answers: skipped.orphan_answers,
        unanswered_questions: skipped.unanswered_questions,
    }
}
