//! Streaming reader for the StackExchange `Posts.xml` dump.
//!
//! The dump is one `<posts>` element holding millions of self-closing
//! `<row .../>` elements. Rows are decoded one at a time, so memory use does
//! not grow with the size of the dump.

use std::io::BufRead;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("failed to read dump: {0}")]
    Io(#[from] std::io::Error),
    #[error("dump is not well-formed XML at byte {position}: {message}")]
    Xml { position: u64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PostKind {
    Question,
    Answer,
}

/// One question or answer row from the dump.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPost {
    pub id: u64,
    pub kind: PostKind,
    /// Set for answers only.
    pub parent_id: Option<u64>,
    /// Set for questions only.
    pub accepted_answer_id: Option<u64>,
    pub score: i64,
    /// Set for questions only.
    pub title: Option<String>,
    pub body_html: String,
    /// Lowercase tags; always empty for answers.
    pub tags: Vec<String>,
    /// `CreationDate` as written in the dump (ISO-8601, fixed width, so
    /// lexicographic order is chronological).
    pub creation_date: Option<String>,
}

impl RawPost {
    pub fn question(id: u64, score: i64, title: &str, body_html: &str, tags: &[&str]) -> Self {
        RawPost {
            id,
            kind: PostKind::Question,
            parent_id: None,
            accepted_answer_id: None,
            score,
            title: Some(title.to_string()),
            body_html: body_html.to_string(),
            tags: tags.iter().map(|t| t.to_ascii_lowercase()).collect(),
            creation_date: None,
        }
    }

    pub fn answer(id: u64, parent_id: u64, score: i64, body_html: &str) -> Self {
        RawPost {
            id,
            kind: PostKind::Answer,
            parent_id: Some(parent_id),
            accepted_answer_id: None,
            score,
            title: None,
            body_html: body_html.to_string(),
            tags: Vec::new(),
            creation_date: None,
        }
    }

    pub fn with_accepted(mut self, answer_id: u64) -> Self {
        if self.kind == PostKind::Question {
            self.accepted_answer_id = Some(answer_id);
        }
        self
    }

    pub fn with_creation_date(mut self, date: &str) -> Self {
        self.creation_date = Some(date.to_string());
        self
    }
}

/// Splits a dump `Tags` attribute. Older dumps use `<a><b>`, newer ones `|a|b|`.
pub fn parse_tags(raw: &str) -> Vec<String> {
    raw.split(['<', '>', '|'])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::to_ascii_lowercase)
        .collect()
}

#[derive(Default)]
struct RowFields {
    id: Option<String>,
    post_type: Option<String>,
    parent_id: Option<String>,
    accepted_answer_id: Option<String>,
    score: Option<String>,
    title: Option<String>,
    body: Option<String>,
    tags: Option<String>,
    creation_date: Option<String>,
}

enum RowOutcome {
    Post(RawPost),
    Ignored,
    Malformed,
}

fn parse_id(raw: &Option<String>) -> Result<Option<u64>, ()> {
    match raw {
        None => Ok(None),
        Some(s) => match s.trim().parse::<u64>() {
            Ok(0) | Err(_) => Err(()),
            Ok(v) => Ok(Some(v)),
        },
    }
}

fn decode_row(start: &BytesStart<'_>) -> RowOutcome {
    let mut fields = RowFields::default();
    for attr in start.attributes() {
        let Ok(attr) = attr else {
            return RowOutcome::Malformed;
        };
        let Ok(value) = attr.unescape_value() else {
            return RowOutcome::Malformed;
        };
        let value = value.into_owned();
        match attr.key.as_ref() {
            b"Id" => fields.id = Some(value),
            b"PostTypeId" => fields.post_type = Some(value),
            b"ParentId" => fields.parent_id = Some(value),
            b"AcceptedAnswerId" => fields.accepted_answer_id = Some(value),
            b"Score" => fields.score = Some(value),
            b"Title" => fields.title = Some(value),
            b"Body" => fields.body = Some(value),
            b"Tags" => fields.tags = Some(value),
            b"CreationDate" => fields.creation_date = Some(value),
            _ => {}
        }
    }

    let kind = match fields.post_type.as_deref().map(str::trim) {
        Some("1") => PostKind::Question,
        Some("2") => PostKind::Answer,
        Some(other) if other.parse::<u64>().is_ok() => return RowOutcome::Ignored,
        _ => return RowOutcome::Malformed,
    };
    let Ok(Some(id)) = parse_id(&fields.id) else {
        return RowOutcome::Malformed;
    };
    let score = match fields.score.as_deref() {
        None => 0,
        Some(s) => match s.trim().parse::<i64>() {
            Ok(v) => v,
            Err(_) => return RowOutcome::Malformed,
        },
    };
    let Ok(parent_id) = parse_id(&fields.parent_id) else {
        return RowOutcome::Malformed;
    };
    let Ok(accepted_answer_id) = parse_id(&fields.accepted_answer_id) else {
        return RowOutcome::Malformed;
    };

    let post = match kind {
        PostKind::Question => RawPost {
            id,
            kind,
            parent_id: None,
            accepted_answer_id,
            score,
            title: fields.title,
            body_html: fields.body.unwrap_or_default(),
            tags: fields.tags.as_deref().map(parse_tags).unwrap_or_default(),
            creation_date: fields.creation_date,
        },
        PostKind::Answer => {
            let Some(parent_id) = parent_id else {
                return RowOutcome::Malformed;
            };
            RawPost {
                id,
                kind,
                parent_id: Some(parent_id),
                accepted_answer_id: None,
                score,
                title: None,
                body_html: fields.body.unwrap_or_default(),
                tags: Vec::new(),
                creation_date: fields.creation_date,
            }
        }
    };
    RowOutcome::Post(post)
}

/// Iterator over the question and answer rows of a dump.
///
/// Rows with other `PostTypeId`s are ignored silently. Rows that cannot be
/// decoded are skipped and counted in [`DumpReader::skipped_rows`]. An I/O or
/// document-level XML error is yielded once as `Err` and ends the iteration.
pub struct DumpReader<R: BufRead> {
    reader: Reader<R>,
    buf: Vec<u8>,
    skipped_rows: u64,
    finished: bool,
}

impl<R: BufRead> DumpReader<R> {
    pub fn new(input: R) -> Self {
        DumpReader {
            reader: Reader::from_reader(input),
            buf: Vec::with_capacity(64 * 1024),
            skipped_rows: 0,
            finished: false,
        }
    }

    pub fn skipped_rows(&self) -> u64 {
        self.skipped_rows
    }
}

impl<R: BufRead> Iterator for DumpReader<R> {
    type Item = Result<RawPost, DumpError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.finished {
            return None;
        }
        loop {
            self.buf.clear();
            let event = match self.reader.read_event_into(&mut self.buf) {
                Ok(event) => event,
                Err(quick_xml::Error::Io(err)) => {
                    self.finished = true;
                    let err = std::sync::Arc::try_unwrap(err)
                        .unwrap_or_else(|shared| std::io::Error::new(shared.kind(), shared.to_string()));
                    return Some(Err(DumpError::Io(err)));
                }
                Err(err) => {
                    self.finished = true;
                    return Some(Err(DumpError::Xml {
                        position: self.reader.error_position(),
                        message: err.to_string(),
                    }));
                }
            };
            match event {
                Event::Empty(ref start) | Event::Start(ref start) if start.name().as_ref() == b"row" => {
                    match decode_row(start) {
                        RowOutcome::Post(post) => return Some(Ok(post)),
                        RowOutcome::Ignored => {}
                        RowOutcome::Malformed => self.skipped_rows += 1,
                    }
                }
                Event::Eof => {
                    self.finished = true;
                    return None;
                }
                _ => {}
            }
        }
    }
}

/// Parses a whole dump into memory. Convenience for small inputs and tests;
/// use [`DumpReader`] directly to stream.
pub fn parse_dump<R: BufRead>(input: R) -> Result<(Vec<RawPost>, u64), DumpError> {
    let mut reader = DumpReader::new(input);
    let posts = reader.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((posts, reader.skipped_rows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(xml: &str) -> (Vec<RawPost>, u64) {
        parse_dump(xml.as_bytes()).unwrap()
    }

    #[test]
    fn question_row_maps_fields() {
        let (posts, skipped) = parse(
            r#"<posts><row Id="1" PostTypeId="1" Tags="&lt;python&gt;&lt;list&gt;" Title="T" Body="&lt;p&gt;b&lt;/p&gt;" Score="3" /></posts>"#,
        );
        assert_eq!(skipped, 0);
        assert_eq!(posts.len(), 1);
        let q = &posts[0];
        assert_eq!(q.kind, PostKind::Question);
        assert_eq!(q.tags, vec!["python", "list"]);
        assert_eq!(q.title.as_deref(), Some("T"));
        assert_eq!(q.body_html, "<p>b</p>");
        assert_eq!(q.score, 3);
        assert_eq!(q.parent_id, None);
    }

    #[test]
    fn answer_row_maps_parent() {
        let (posts, _) = parse(r#"<posts><row Id="2" PostTypeId="2" ParentId="1" Score="5" Body="&lt;p&gt;a&lt;/p&gt;" /></posts>"#);
        assert_eq!(posts[0].kind, PostKind::Answer);
        assert_eq!(posts[0].parent_id, Some(1));
        assert_eq!(posts[0].score, 5);
        assert!(posts[0].tags.is_empty());
    }

    #[test]
    fn other_post_types_are_ignored_not_skipped() {
        let (posts, skipped) = parse(r#"<posts><row Id="3" PostTypeId="4" Body="wiki" /><row Id="4" PostTypeId="5" /></posts>"#);
        assert!(posts.is_empty());
        assert_eq!(skipped, 0);
    }

    #[test]
    fn malformed_rows_are_counted() {
        let xml = r#"<posts>
  <row Id="x" PostTypeId="1" Body="" />
  <row PostTypeId="1" Body="" />
  <row Id="5" PostTypeId="2" Body="orphan without parent" />
  <row Id="6" PostTypeId="1" Score="many" />
  <row Id="7" Body="no type" />
  <row Id="8" PostTypeId="1" Score="-2" Title="ok" Body="" Tags="|python|pandas|" CreationDate="2010-01-01T00:00:00.000" />
</posts>"#;
        let (posts, skipped) = parse(xml);
        assert_eq!(skipped, 5);
        assert_eq!(posts.len(), 1);
        assert_eq!(posts[0].score, -2);
        assert_eq!(posts[0].tags, vec!["python", "pandas"]);
        assert_eq!(posts[0].creation_date.as_deref(), Some("2010-01-01T00:00:00.000"));
    }

    #[test]
    fn newline_char_refs_are_decoded() {
        let (posts, _) = parse(r#"<posts><row Id="1" PostTypeId="2" ParentId="9" Body="&lt;pre&gt;&lt;code&gt;a&#xA;b&#xA;&lt;/code&gt;&lt;/pre&gt;" /></posts>"#);
        assert_eq!(posts[0].body_html, "<pre><code>a\nb\n</code></pre>");
    }

    #[test]
    fn answer_attributes_are_normalized() {
        let (posts, _) = parse(r#"<posts><row Id="2" PostTypeId="2" ParentId="1" Title="x" Tags="&lt;python&gt;" AcceptedAnswerId="3" /></posts>"#);
        assert_eq!(posts[0].title, None);
        assert!(posts[0].tags.is_empty());
        assert_eq!(posts[0].accepted_answer_id, None);
    }

    #[test]
    fn broken_document_is_fatal() {
        let mut reader = DumpReader::new(r#"<posts><row Id="1" PostTypeId="1" /></wrong>"#.as_bytes());
        assert!(reader.next().unwrap().is_ok());
        assert!(matches!(reader.next(), Some(Err(DumpError::Xml { .. }))));
        assert!(reader.next().is_none());
    }

    #[test]
    fn empty_input_yields_nothing() {
        let (posts, skipped) = parse("");
        assert!(posts.is_empty());
        assert_eq!(skipped, 0);
    }
}
