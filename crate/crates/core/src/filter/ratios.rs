use std::collections::HashSet;

use crate::text::{normalize_token, words};

/// 1 − distinct/total over character n-grams (Unicode scalar values);
/// 0 when the text has fewer than `n` characters.
pub fn char_repetition_ratio(text: &str, n: usize) -> f64 {
    assert!(n >= 1, "n-gram size must be at least 1");
    let bounds: Vec<usize> = text
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(text.len()))
        .collect();
    let chars = bounds.len() - 1;
    if chars < n {
        return 0.0;
    }
    let total = chars - n + 1;
    let distinct: HashSet<&str> = (0..total).map(|i| &text[bounds[i]..bounds[i + n]]).collect();
    1.0 - distinct.len() as f64 / total as f64
}

/// 1 − distinct/total over whitespace-token n-grams; 0 when there are fewer
/// than `n` tokens.
pub fn word_repetition_ratio(text: &str, n: usize) -> f64 {
    assert!(n >= 1, "n-gram size must be at least 1");
    let tokens: Vec<&str> = words(text).collect();
    if tokens.len() < n {
        return 0.0;
    }
    let grams: Vec<&[&str]> = tokens.windows(n).collect();
    let distinct: HashSet<&[&str]> = grams.iter().copied().collect();
    1.0 - distinct.len() as f64 / grams.len() as f64
}

/// Share of tokens that are stopwords, after lowercasing and stripping
/// surrounding punctuation; 0 for empty text.
pub fn common_word_ratio(text: &str, stopwords: &HashSet<String>) -> f64 {
    let mut total = 0usize;
    let mut common = 0usize;
    for token in words(text) {
        total += 1;
        if stopwords.contains(&normalize_token(token)) {
            common += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        common as f64 / total as f64
    }
}
