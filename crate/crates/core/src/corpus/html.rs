//! HTML to plain text with NL / code separation.
//!
//! StackOverflow bodies are a small, well-behaved subset of HTML: paragraphs,
//! lists, headings, block quotes, `<pre><code>` blocks and inline markup. The
//! extractor is a single forward scan that never fails; unknown or broken
//! markup degrades to text.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SegmentKind {
    Nl,
    Code,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub text: String,
}

impl Segment {
    pub fn nl(text: impl Into<String>) -> Self {
        Segment { kind: SegmentKind::Nl, text: text.into() }
    }

    pub fn code(text: impl Into<String>) -> Self {
        Segment { kind: SegmentKind::Code, text: text.into() }
    }
}

/// Ordered NL / code segments of one body. Consecutive NL segments are always
/// merged; consecutive code segments are kept apart (they are separate
/// blocks in the source).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SegmentList {
    segments: Vec<Segment>,
}

impl SegmentList {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a segment, merging into a preceding NL segment and dropping
    /// empty text.
    pub fn push(&mut self, segment: Segment) {
        if segment.text.is_empty() {
            return;
        }
        if segment.kind == SegmentKind::Nl {
            if let Some(last) = self.segments.last_mut() {
                if last.kind == SegmentKind::Nl {
                    last.text.push_str(&segment.text);
                    return;
                }
            }
        }
        self.segments.push(segment);
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn code_blocks(&self) -> impl Iterator<Item = &str> {
        self.segments
            .iter()
            .filter(|s| s.kind == SegmentKind::Code)
            .map(|s| s.text.as_str())
    }
}

impl FromIterator<Segment> for SegmentList {
    fn from_iter<T: IntoIterator<Item = Segment>>(iter: T) -> Self {
        let mut list = SegmentList::new();
        for segment in iter {
            list.push(segment);
        }
        list
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripOptions {
    /// Treat inline `<code>` spans outside `<pre>` as code segments instead
    /// of NL text.
    pub inline_code_as_code: bool,
}

const BLOCK_TAGS: &[&str] = &[
    "p", "div", "li", "ul", "ol", "h1", "h2", "h3", "h4", "h5", "h6", "blockquote", "hr", "table",
    "tr", "dl", "dt", "dd", "section", "article", "header", "footer", "details", "summary",
];

// Tags whose content is not text.
const RAW_TEXT_TAGS: &[&str] = &["script", "style"];

fn is_html_space(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r' | '\x0c')
}

enum Mode {
    Text,
    /// Inside `<pre>`; nesting depth.
    Pre(usize),
    InlineCode,
}

struct Extractor {
    out: SegmentList,
    nl: String,
    code: String,
    mode: Mode,
    at_block_start: bool,
    pending_space: bool,
    options: StripOptions,
}

impl Extractor {
    fn new(options: StripOptions) -> Self {
        Extractor {
            out: SegmentList::new(),
            nl: String::new(),
            code: String::new(),
            mode: Mode::Text,
            at_block_start: true,
            pending_space: false,
            options,
        }
    }

    fn text(&mut self, raw: &str) {
        if raw.is_empty() {
            return;
        }
        let decoded = html_escape::decode_html_entities(raw);
        match self.mode {
            Mode::Pre(_) | Mode::InlineCode => self.code.push_str(&decoded),
            Mode::Text => {
                for c in decoded.chars() {
                    if is_html_space(c) {
                        if !self.at_block_start {
                            self.pending_space = true;
                        }
                    } else {
                        if self.pending_space {
                            self.nl.push(' ');
                            self.pending_space = false;
                        }
                        self.nl.push(c);
                        self.at_block_start = false;
                    }
                }
            }
        }
    }

    fn block_boundary(&mut self) {
        self.pending_space = false;
        if !self.at_block_start {
            self.nl.push('\n');
            self.at_block_start = true;
        }
    }

    fn line_break(&mut self) {
        match self.mode {
            Mode::Pre(_) | Mode::InlineCode => self.code.push('\n'),
            Mode::Text => {
                self.pending_space = false;
                self.nl.push('\n');
                self.at_block_start = true;
            }
        }
    }

    fn flush_nl(&mut self) {
        let nl = std::mem::take(&mut self.nl);
        self.out.push(Segment::nl(nl));
    }

    fn flush_code(&mut self) {
        let code = std::mem::take(&mut self.code);
        self.out.push(Segment::code(code));
    }

    fn open_tag(&mut self, name: &str) {
        match self.mode {
            Mode::Pre(depth) => {
                if name == "pre" {
                    self.mode = Mode::Pre(depth + 1);
                } else if name == "br" {
                    self.line_break();
                }
            }
            Mode::InlineCode => {
                if name == "br" {
                    self.line_break();
                }
            }
            Mode::Text => {
                if name == "pre" {
                    self.block_boundary();
                    self.flush_nl();
                    self.mode = Mode::Pre(1);
                } else if name == "br" {
                    self.line_break();
                } else if name == "code" && self.options.inline_code_as_code {
                    if self.pending_space {
                        self.nl.push(' ');
                        self.pending_space = false;
                    }
                    self.flush_nl();
                    self.mode = Mode::InlineCode;
                } else if BLOCK_TAGS.contains(&name) {
                    self.block_boundary();
                }
            }
        }
    }

    fn close_tag(&mut self, name: &str) {
        match self.mode {
            Mode::Pre(depth) => {
                if name == "pre" {
                    if depth > 1 {
                        self.mode = Mode::Pre(depth - 1);
                    } else {
                        self.flush_code();
                        self.mode = Mode::Text;
                        self.at_block_start = true;
                        self.pending_space = false;
                    }
                }
            }
            Mode::InlineCode => {
                if name == "code" {
                    self.flush_code();
                    self.mode = Mode::Text;
                    self.at_block_start = false;
                }
            }
            Mode::Text => {
                if BLOCK_TAGS.contains(&name) || name == "pre" {
                    self.block_boundary();
                }
            }
        }
    }

    fn finish(mut self) -> SegmentList {
        match self.mode {
            Mode::Pre(_) | Mode::InlineCode => self.flush_code(),
            Mode::Text => {}
        }
        self.flush_nl();
        self.out
    }
}

/// Byte offset just past the `>` that closes a tag starting at `start`
/// (which points at `<`). Quoted attribute values may contain `>`.
fn tag_end(html: &str, start: usize) -> Option<usize> {
    let bytes = html.as_bytes();
    let mut quote: Option<u8> = None;
    let mut i = start + 1;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) if b == q => quote = None,
            Some(_) => {}
            None if b == b'"' || b == b'\'' => quote = Some(b),
            None if b == b'>' => return Some(i + 1),
            None => {}
        }
        i += 1;
    }
    None
}

fn tag_name(tag: &str) -> String {
    tag.trim_start_matches(['<', '/'])
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

/// Splits `body_html` into NL and code segments using default options.
pub fn strip_html(body_html: &str) -> SegmentList {
    strip_html_with(body_html, StripOptions::default())
}

pub fn strip_html_with(body_html: &str, options: StripOptions) -> SegmentList {
    let mut ex = Extractor::new(options);
    let html = body_html;
    let bytes = html.as_bytes();
    let mut text_start = 0;
    let mut i = 0;

    while i < bytes.len() {
        if bytes[i] != b'<' {
            i += 1;
            continue;
        }
        let next = bytes.get(i + 1).copied();
        let after = bytes.get(i + 2).copied();

        if html[i..].starts_with("<!--") {
            ex.text(&html[text_start..i]);
            let end = html[i + 4..].find("-->").map_or(html.len(), |p| i + 4 + p + 3);
            i = end;
            text_start = i;
            continue;
        }
        let is_open = next.is_some_and(|b| b.is_ascii_alphabetic());
        let is_close = next == Some(b'/') && after.is_some_and(|b| b.is_ascii_alphabetic());
        let is_decl = matches!(next, Some(b'!') | Some(b'?'));
        if !(is_open || is_close || is_decl) {
            i += 1;
            continue;
        }
        let Some(end) = tag_end(html, i) else {
            // No closing `>` anywhere: the rest is text.
            break;
        };
        ex.text(&html[text_start..i]);
        let tag = &html[i..end];
        let name = tag_name(tag);
        i = end;
        text_start = i;

        if is_decl {
            continue;
        }
        if is_close {
            ex.close_tag(&name);
            continue;
        }
        if RAW_TEXT_TAGS.contains(&name.as_str()) && !matches!(ex.mode, Mode::Pre(_)) {
            let closing = format!("</{name}");
            let lower = html[i..].to_ascii_lowercase();
            i = match lower.find(&closing) {
                Some(p) => tag_end(html, i + p).unwrap_or(html.len()),
                None => html.len(),
            };
            text_start = i;
            continue;
        }
        ex.open_tag(&name);
        if tag.ends_with("/>") && name != "br" {
            ex.close_tag(&name);
        }
    }
    ex.text(&html[text_start.min(html.len())..]);
    ex.finish()
}
