//! Checks the extractor against frozen output of the standard-library based
//! reference extractor in `fixtures/reference_extract.py`.

use serde::Deserialize;
use sobench::corpus::{strip_html, SegmentKind};

#[derive(Deserialize)]
struct Case {
    html: String,
    segments: Vec<(String, String)>,
}

fn cases() -> Vec<Case> {
    serde_json::from_str(include_str!("fixtures/html_cases.json")).unwrap()
}

#[test]
fn matches_reference_extractor() {
    let cases = cases();
    assert!(cases.len() >= 30);
    for case in cases {
        let got: Vec<(String, String)> = strip_html(&case.html)
            .segments()
            .iter()
            .map(|s| {
                let kind = match s.kind {
                    SegmentKind::Nl => "nl",
                    SegmentKind::Code => "code",
                };
                (kind.to_string(), s.text.clone())
            })
            .collect();
        assert_eq!(got, case.segments, "html: {:?}", case.html);
    }
}

#[test]
fn no_tags_survive_extraction() {
    let tag = tag_finder();
    for case in cases() {
        for segment in strip_html(&case.html).segments() {
            for found in tag(&segment.text) {
                // `<x>` may appear in output only if the input had it
                // escaped; a literal occurrence in the input was a tag.
                assert!(
                    !case.html.contains(&found),
                    "tag {found:?} leaked from {:?}",
                    case.html
                );
            }
        }
    }
}

/// Finds `<name ...>` substrings.
fn tag_finder() -> impl Fn(&str) -> Vec<String> {
    |text: &str| {
        let mut found = Vec::new();
        let bytes = text.as_bytes();
        for (i, _) in text.match_indices('<') {
            let starts_tag = bytes
                .get(i + 1)
                .is_some_and(|b| b.is_ascii_alphabetic() || *b == b'/');
            if !starts_tag {
                continue;
            }
            if let Some(end) = text[i..].find('>') {
                found.push(text[i..i + end + 1].to_string());
            }
        }
        found
    }
}

#[test]
fn full_rendering_is_concatenation_and_nl_never_adjacent() {
    for case in cases() {
        let list = strip_html(&case.html);
        for pair in list.segments().windows(2) {
            assert!(!(pair[0].kind == SegmentKind::Nl && pair[1].kind == SegmentKind::Nl));
        }
        assert!(list.segments().iter().all(|s| !s.text.is_empty()));
    }
}
