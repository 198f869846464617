//! Image-node, paragraph and document filters with line-level cleaning.

mod blocklists;
mod ratios;
mod thresholds;

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use blocklists::Blocklists;
pub use ratios::{char_repetition_ratio, common_word_ratio, word_repetition_ratio};
pub use thresholds::{ThresholdError, Thresholds};

use crate::document::{ImageRef, InterleavedDocument, Segment};
use crate::lid::{classify_line_script, ScriptClass};
use crate::text::{contains_any_ci, word_count};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reason {
    Ok,
    BadFormat,
    TooSmall,
    BadAspect,
    BlockedUrl,
    BlockedFilename,
    BlockedAltWord,
    Nsfw,
    TooFewWords,
    TooManyWords,
    CharRepetition,
    WordRepetition,
    LowCommonWords,
    NoImages,
    TooManyImages,
    NsfwDocument,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Outcome of one filter. `accepted` holds exactly when `reason` is `Ok`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub accepted: bool,
    pub reason: Reason,
}

impl Verdict {
    pub const ACCEPT: Verdict = Verdict {
        accepted: true,
        reason: Reason::Ok,
    };

    pub fn reject(reason: Reason) -> Self {
        debug_assert_ne!(reason, Reason::Ok);
        Self {
            accepted: false,
            reason,
        }
    }

    fn from_check(failure: Option<Reason>) -> Self {
        failure.map_or(Self::ACCEPT, Self::reject)
    }
}

/// Where in the pipeline something was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Refine,
    Assemble,
    Lid,
    Image,
    Paragraph,
    Document,
    Fetch,
    Revalidate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("stage serializes");
        f.write_str(s.as_str().expect("string"))
    }
}

/// A segment removed from a document that itself may still be accepted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDrop {
    /// Index into the segments of the document as it was passed in.
    pub segment: usize,
    pub stage: Stage,
    pub reason: Reason,
}

pub fn filter_image_node(image: &ImageRef, th: &Thresholds, bl: &Blocklists) -> Verdict {
    Verdict::from_check(image_failure(image, th, bl))
}

fn image_failure(image: &ImageRef, th: &Thresholds, bl: &Blocklists) -> Option<Reason> {
    if image.format.is_some_and(|f| !f.is_accepted()) {
        return Some(Reason::BadFormat);
    }
    if let Some((w, h)) = image.dimensions() {
        let (short, long) = (w.min(h), w.max(h));
        if short < th.img_min_side_px {
            return Some(Reason::TooSmall);
        }
        if short == 0 || long as f64 > th.aspect_max * short as f64 {
            return Some(Reason::BadAspect);
        }
    }
    if contains_any_ci(&image.src_url, &bl.url_substrings) {
        return Some(Reason::BlockedUrl);
    }
    if contains_any_ci(&image.filename, &bl.filename_substrings) {
        return Some(Reason::BlockedFilename);
    }
    if contains_any_ci(&image.filename, &bl.alt_blockwords) || contains_any_ci(&image.alt_text, &bl.alt_blockwords) {
        return Some(Reason::BlockedAltWord);
    }
    None
}

pub fn is_nsfw_image(image: &ImageRef, bl: &Blocklists) -> bool {
    contains_any_ci(&image.filename, &bl.nsfw_substrings) || contains_any_ci(&image.alt_text, &bl.nsfw_substrings)
}

/// Line-level cleaning: keeps lines that are in an Indic script (or mixed),
/// have at least `line_min_words` words and contain no boilerplate phrase.
pub fn clean_paragraph(text: &str, bl: &Blocklists, th: &Thresholds) -> String {
    text.split('\n')
        .filter(|line| {
            !matches!(
                classify_line_script(line),
                ScriptClass::LatinOnly | ScriptClass::NumericSymbolic
            )
        })
        .filter(|line| word_count(line) >= th.line_min_words)
        .filter(|line| !contains_any_ci(line, &bl.boilerplate_phrases))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Paragraph-level checks in order: word bounds, character repetition, word
/// repetition, common-word ratio. Without a stopword list the common-word
/// check is skipped.
pub fn filter_paragraph(text: &str, th: &Thresholds, stopwords: Option<&HashSet<String>>) -> Verdict {
    Verdict::from_check(text_failure(
        text,
        th.para_min_words,
        th.para_max_words,
        th.word_rep_max_para,
        th,
        stopwords,
    ))
}

fn text_failure(
    text: &str,
    min_words: usize,
    max_words: usize,
    word_rep_max: f64,
    th: &Thresholds,
    stopwords: Option<&HashSet<String>>,
) -> Option<Reason> {
    let words = word_count(text);
    if words < min_words {
        return Some(Reason::TooFewWords);
    }
    if words > max_words {
        return Some(Reason::TooManyWords);
    }
    if char_repetition_ratio(text, th.char_ngram) > th.char_rep_max {
        return Some(Reason::CharRepetition);
    }
    if word_repetition_ratio(text, th.word_ngram) > word_rep_max {
        return Some(Reason::WordRepetition);
    }
    if let Some(stop) = stopwords {
        if common_word_ratio(text, stop) < th.common_word_min {
            return Some(Reason::LowCommonWords);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub result: Result<InterleavedDocument, Verdict>,
    /// Segments removed along the way, including for rejected documents.
    pub dropped: Vec<SegmentDrop>,
}

/// Runs the cascade on one document: image nodes, NSFW, paragraphs, then the
/// document-level bounds over what survived.
pub fn filter_document(doc: &InterleavedDocument, th: &Thresholds, bl: &Blocklists) -> FilterOutcome {
    let mut dropped = Vec::new();
    if doc.images().any(|img| is_nsfw_image(img, bl)) {
        return FilterOutcome {
            result: Err(Verdict::reject(Reason::NsfwDocument)),
            dropped,
        };
    }
    let stopwords = bl.stopwords_for(&doc.language.language);
    let mut segments = Vec::with_capacity(doc.segments.len());
    for (index, segment) in doc.segments.iter().enumerate() {
        let (stage, verdict, kept) = match segment {
            Segment::Image(img) => (Stage::Image, filter_image_node(img, th, bl), segment.clone()),
            Segment::Text(text) => {
                let cleaned = clean_paragraph(text, bl, th);
                let verdict = filter_paragraph(&cleaned, th, stopwords);
                (Stage::Paragraph, verdict, Segment::Text(cleaned))
            }
        };
        if verdict.accepted {
            segments.push(kept);
        } else {
            dropped.push(SegmentDrop {
                segment: index,
                stage,
                reason: verdict.reason,
            });
        }
    }
    let filtered = InterleavedDocument {
        segments,
        ..doc.clone()
    };
    let result = match document_failure(&filtered, th, stopwords) {
        Some(reason) => Err(Verdict::reject(reason)),
        None => Ok(filtered),
    };
    FilterOutcome { result, dropped }
}

/// Document-level bounds: image count, then the text checks over all text
/// segments joined by a blank line.
pub fn document_failure(
    doc: &InterleavedDocument,
    th: &Thresholds,
    stopwords: Option<&HashSet<String>>,
) -> Option<Reason> {
    let images = doc.image_count();
    if images < th.doc_min_images {
        return Some(Reason::NoImages);
    }
    if images > th.doc_max_images {
        return Some(Reason::TooManyImages);
    }
    text_failure(
        &doc.joined_text(),
        th.doc_min_words,
        th.doc_max_words,
        th.word_rep_max_doc,
        th,
        stopwords,
    )
}
