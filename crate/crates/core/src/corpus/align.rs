use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::dump::{PostKind, RawPost};

/// A single tag test. A question is kept when any of its tags satisfies any
/// predicate of the filter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TagPredicate {
    Exact(String),
    Prefix(String),
}

impl TagPredicate {
    /// `python*` is a prefix predicate, anything else an exact match.
    pub fn parse(spec: &str) -> Self {
        let spec = spec.trim().to_ascii_lowercase();
        match spec.strip_suffix('*') {
            Some(prefix) => TagPredicate::Prefix(prefix.to_string()),
            None => TagPredicate::Exact(spec),
        }
    }

    pub fn matches(&self, tag: &str) -> bool {
        match self {
            TagPredicate::Exact(t) => tag == t,
            TagPredicate::Prefix(p) => tag.starts_with(p.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagFilter {
    pub predicates: Vec<TagPredicate>,
}

impl Default for TagFilter {
    /// `python` exactly, or any tag starting with `python` (`python-3.x`,
    /// `python-2.7`, ...).
    fn default() -> Self {
        TagFilter {
            predicates: vec![
                TagPredicate::Exact("python".into()),
                TagPredicate::Prefix("python".into()),
            ],
        }
    }
}

impl TagFilter {
    pub fn from_specs<S: AsRef<str>>(specs: &[S]) -> Self {
        TagFilter {
            predicates: specs.iter().map(|s| TagPredicate::parse(s.as_ref())).collect(),
        }
    }

    pub fn accepts(&self, tags: &[String]) -> bool {
        tags.iter()
            .any(|tag| self.predicates.iter().any(|p| p.matches(tag)))
    }
}

/// A question together with its answers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAThread {
    pub question: RawPost,
    pub answers: Vec<RawPost>,
}

#[derive(Debug, Default, Clone)]
pub struct AlignOutput {
    /// Ordered by question id ascending.
    pub threads: Vec<QAThread>,
    /// Answers whose parent question never appeared in the input.
    pub orphan_answers: u64,
    /// Matching questions dropped because they had no answers.
    pub unanswered_questions: u64,
}

enum Slot {
    Kept(RawPost, Vec<RawPost>),
    Rejected,
}

/// Joins answers to tag-matching questions. Posts may arrive in any order;
/// answers seen before their question are buffered until it shows up, and
/// answers to rejected questions are dropped as soon as possible.
pub fn filter_and_align<I>(posts: I, filter: &TagFilter) -> AlignOutput
where
    I: IntoIterator<Item = RawPost>,
{
    let mut slots: HashMap<u64, Slot> = HashMap::new();
    let mut pending: HashMap<u64, Vec<RawPost>> = HashMap::new();

    for post in posts {
        match post.kind {
            PostKind::Question => {
                let id = post.id;
                if slots.contains_key(&id) {
                    continue;
                }
                let waiting = pending.remove(&id).unwrap_or_default();
                let slot = if filter.accepts(&post.tags) {
                    Slot::Kept(post, waiting)
                } else {
                    Slot::Rejected
                };
                slots.insert(id, slot);
            }
            PostKind::Answer => {
                let Some(parent) = post.parent_id else { continue };
                match slots.get_mut(&parent) {
                    Some(Slot::Kept(_, answers)) => answers.push(post),
                    Some(Slot::Rejected) => {}
                    None => pending.entry(parent).or_default().push(post),
                }
            }
        }
    }

    let orphan_answers = pending.values().map(|v| v.len() as u64).sum();
    let mut ordered: BTreeMap<u64, QAThread> = BTreeMap::new();
    let mut unanswered_questions = 0;
    for slot in slots.into_values() {
        if let Slot::Kept(question, answers) = slot {
            if answers.is_empty() {
                unanswered_questions += 1;
            } else {
                ordered.insert(question.id, QAThread { question, answers });
            }
        }
    }
    AlignOutput {
        threads: ordered.into_values().collect(),
        orphan_answers,
        unanswered_questions,
    }
}

fn creation_order(a: &RawPost, b: &RawPost) -> Ordering {
    // Posts without a creation date sort after dated ones.
    match (&a.creation_date, &b.creation_date) {
        (Some(x), Some(y)) => x.cmp(y),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
    .then(a.id.cmp(&b.id))
}

/// Accepted answer first (when it resolves to one of the answers), then the
/// rest by score descending, ties broken by creation date then id.
pub fn sort_answers(mut thread: QAThread) -> QAThread {
    let accepted = thread
        .question
        .accepted_answer_id
        .filter(|id| thread.answers.iter().any(|a| a.id == *id));
    thread.answers.sort_by(|a, b| {
        let a_first = Some(a.id) == accepted;
        let b_first = Some(b.id) == accepted;
        b_first
            .cmp(&a_first)
            .then(b.score.cmp(&a.score))
            .then_with(|| creation_order(a, b))
    });
    thread
}
