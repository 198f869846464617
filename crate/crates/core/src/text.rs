//! Word-level helpers shared by the filters, caption extraction and stats.
//!
//! Every word count in the crate goes through [`words`], which splits on
//! Unicode whitespace. Thresholds expressed in "words" therefore mean the
//! same thing in every stage.

/// Splits on Unicode whitespace.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
}

pub fn word_count(text: &str) -> usize {
    words(text).count()
}

/// Collapses every whitespace run (newlines included) to a single space and trims.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for word in words(text) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Lowercases a token and strips leading/trailing punctuation, including the
/// Indic danda marks, so `"है।"` and `"है"` count as the same stopword.
pub fn normalize_token(token: &str) -> String {
    token
        .trim_matches(|c: char| is_punctuation(c))
        .to_lowercase()
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{0964}' | '\u{0965}' | '\u{2018}'..='\u{201F}' | '\u{2026}' | '\u{00AB}' | '\u{00BB}'
        )
}

/// True when `haystack` contains any of `needles`, ignoring case.
///
/// Needles are expected to be lowercase already (blocklists are lowercased at load).
pub fn contains_any_ci<'a, I>(haystack: &str, needles: I) -> bool
where
    I: IntoIterator<Item = &'a String>,
{
    let lowered = haystack.to_lowercase();
    needles.into_iter().any(|n| !n.is_empty() && lowered.contains(n.as_str()))
}
