//! Random inputs and brute-force oracles shared by the property tests and the
//! acceptance harness.

use chrono::NaiveDate;
use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;

use ilforge::document::{ImageFormat, ImageRef, InterleavedDocument, Segment};
use ilforge::dom::DomNode;
use ilforge::lid::LanguageVerdict;

const TAGS: &[&str] = &[
    "div", "p", "section", "article", "span", "a", "b", "em", "li", "ul", "td", "figure", "img", "br", "h2",
    "script", "style", "nav", "footer", "header", "aside", "form", "iframe", "svg", "custom-widget", "font",
];
const CLASS_WORDS: &[&str] = &[
    "content", "story", "NavBar-top", "main", "site-FOOTER", "ad-slot", "Social-icons", "more-link", "body",
    "cookieBanner", "lead", "newsletter-box", "card", "related-posts", "x",
];
const TEXTS: &[&str] = &["खबर", "नदी के किनारे", "Read more", "  ", "\n", "\n\n\n", " a ", "দুটি শব্দ", "tab\there", ""];

fn attrs() -> impl Strategy<Value = Vec<(String, String)>> {
    (option::of(prop::sample::select(CLASS_WORDS)), option::of(prop::sample::select(CLASS_WORDS))).prop_map(|(c, i)| {
        let mut out = Vec::new();
        if let Some(c) = c {
            out.push(("class".to_string(), c.to_string()));
        }
        if let Some(i) = i {
            out.push(("id".to_string(), i.to_string()));
        }
        out
    })
}

fn leaf() -> impl Strategy<Value = DomNode> {
    prop_oneof![
        4 => prop::sample::select(TEXTS).prop_map(DomNode::text),
        1 => "[a-z ]{0,8}".prop_map(DomNode::comment),
        1 => (prop::sample::select(TAGS), attrs()).prop_map(|(t, a)| DomNode::element(t, a, Vec::new())),
    ]
}

/// Arbitrary trees mixing allowlisted, blocked, unwrap and unknown tags,
/// blocked class/id substrings in mixed case, comments and whitespace runs.
pub fn dom_tree() -> impl Strategy<Value = DomNode> {
    leaf().prop_recursive(5, 64, 6, |inner| {
        (prop::sample::select(TAGS), attrs(), vec(inner, 0..6))
            .prop_map(|(tag, a, children)| DomNode::element(tag, a, children))
    })
}

/// Strings over a small alphabet so that n-grams repeat often.
pub fn repetitive_text() -> impl Strategy<Value = String> {
    vec(prop::sample::select(&["a", "b", "ब", "क", " ", "  ", "\n", "है।", "The", "the,", "x y"][..]), 0..60)
        .prop_map(|parts| parts.concat())
}

pub fn stopword_list() -> impl Strategy<Value = Vec<String>> {
    vec(prop::sample::select(&["the", "a", "है", "ब", "x", "of"][..]), 0..5)
        .prop_map(|v| v.into_iter().map(str::to_string).collect())
}

fn any_text() -> impl Strategy<Value = String> {
    prop_oneof![
        "\\PC{0,40}",
        ".{0,20}",
        Just("quote \" backslash \\ newline \n tab \t nul \u{0}".to_string()),
        Just("मिश्रित text ① 🚀".to_string()),
    ]
}

fn image_ref() -> impl Strategy<Value = ImageRef> {
    let format = prop::sample::select(vec![
        ImageFormat::Jpg,
        ImageFormat::Jpeg,
        ImageFormat::Png,
        ImageFormat::Webp,
        ImageFormat::Other,
    ]);
    (any_text(), any_text(), any_text(), option::of(any_text()), option::of(any::<u32>()), option::of(any::<u32>()), option::of(format))
        .prop_map(|(src_url, alt_text, filename, figcaption, width_px, height_px, format)| ImageRef {
            src_url,
            alt_text,
            filename,
            figcaption,
            width_px,
            height_px,
            format,
        })
}

pub fn document() -> impl Strategy<Value = InterleavedDocument> {
    let segment = prop_oneof![any_text().prop_map(Segment::Text), image_ref().prop_map(Segment::Image)];
    (
        "[0-9a-f]{32}",
        any_text(),
        any_text(),
        (1i32..=9999, 1u32..=12, 1u32..=28),
        "[a-z]{2,3}",
        0.0f64..=1.0,
        vec(segment, 0..12),
    )
        .prop_map(|(doc_id, source_url, domain, (y, m, d), lang, conf, segments)| InterleavedDocument {
            doc_id,
            source_url,
            domain,
            crawl_date: NaiveDate::from_ymd_opt(y, m, d).unwrap(),
            language: LanguageVerdict::new(lang, conf),
            segments,
        })
}

/// Character n-gram repetition by explicit enumeration and linear search.
pub fn oracle_char_rep(text: &str, n: usize) -> f64 {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() < n {
        return 0.0;
    }
    let mut distinct: Vec<&[char]> = Vec::new();
    let mut total = 0usize;
    for start in 0..=chars.len() - n {
        let gram = &chars[start..start + n];
        total += 1;
        if !distinct.contains(&gram) {
            distinct.push(gram);
        }
    }
    1.0 - distinct.len() as f64 / total as f64
}

fn oracle_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else {
            cur.push(c);
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn oracle_word_rep(text: &str, n: usize) -> f64 {
    let tokens = oracle_tokens(text);
    if tokens.len() < n {
        return 0.0;
    }
    let mut distinct: Vec<&[String]> = Vec::new();
    let mut total = 0usize;
    for start in 0..=tokens.len() - n {
        let gram = &tokens[start..start + n];
        total += 1;
        if !distinct.contains(&gram) {
            distinct.push(gram);
        }
    }
    1.0 - distinct.len() as f64 / total as f64
}

const PUNCT: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~\u{0964}\u{0965}\u{2018}\u{2019}\u{201A}\u{201B}\u{201C}\u{201D}\u{201E}\u{201F}\u{2026}\u{00AB}\u{00BB}";

pub fn oracle_common(text: &str, stopwords: &[String]) -> f64 {
    let tokens = oracle_tokens(text);
    if tokens.is_empty() {
        return 0.0;
    }
    let hits = tokens
        .iter()
        .filter(|t| {
            let stripped = t.trim_matches(|c| PUNCT.contains(c)).to_lowercase();
            stopwords.contains(&stripped)
        })
        .count();
    hits as f64 / tokens.len() as f64
}
