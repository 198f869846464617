//! Image/alt-text caption pairs and resolution classes.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::document::InterleavedDocument;
use crate::filter::Thresholds;
use crate::lid::{LanguageClassifier, LanguageVerdict};
use crate::stats::token_count;
use crate::text::{normalize_whitespace, word_count};
use crate::warc::fingerprint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ResolutionClass {
    Low,
    Mid,
    High,
}

impl ResolutionClass {
    pub const ALL: [ResolutionClass; 3] = [ResolutionClass::Low, ResolutionClass::Mid, ResolutionClass::High];
}

/// Low when either side is under 200 px, High when both exceed 600 px.
pub fn classify_resolution(width_px: u32, height_px: u32) -> ResolutionClass {
    if width_px < 200 || height_px < 200 {
        ResolutionClass::Low
    } else if width_px > 600 && height_px > 600 {
        ResolutionClass::High
    } else {
        ResolutionClass::Mid
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptionPair {
    pub image_url: String,
    pub alt_text: String,
    pub language: LanguageVerdict,
    pub resolution_class: Option<ResolutionClass>,
    pub token_count: usize,
}

/// One pair per image whose alt text has enough words and does not occur in
/// any text segment (both sides whitespace normalized). The language is that
/// of the alt text itself.
pub fn extract_pairs(
    doc: &InterleavedDocument,
    th: &Thresholds,
    classifier: &dyn LanguageClassifier,
) -> Vec<CaptionPair> {
    let texts: Vec<String> = doc.texts().map(normalize_whitespace).collect();
    doc.images()
        .filter_map(|img| {
            let alt = normalize_whitespace(&img.alt_text);
            if word_count(&alt) < th.alt_min_words || texts.iter().any(|t| t.contains(&alt)) {
                return None;
            }
            let language = classifier.classify(&alt).unwrap_or_else(|_| LanguageVerdict::unknown());
            Some(CaptionPair {
                image_url: img.src_url.clone(),
                token_count: token_count(&alt),
                alt_text: alt,
                language,
                resolution_class: img.dimensions().map(|(w, h)| classify_resolution(w, h)),
            })
        })
        .collect()
}

/// Keeps the first pair seen for each image URL across documents.
#[derive(Debug, Default)]
pub struct PairDedup {
    seen: HashSet<u64>,
}

impl PairDedup {
    pub fn admit(&mut self, pair: &CaptionPair) -> bool {
        self.seen.insert(fingerprint(pair.image_url.as_bytes()))
    }
}

#[derive(Serialize, Deserialize)]
struct WirePair {
    url: String,
    alt: String,
    lang: String,
    lang_conf: f64,
    res_class: Option<ResolutionClass>,
    tokens: usize,
}

pub fn serialize_pair(pair: &CaptionPair) -> String {
    serde_json::to_string(&WirePair {
        url: pair.image_url.clone(),
        alt: pair.alt_text.clone(),
        lang: pair.language.language.clone(),
        lang_conf: pair.language.confidence,
        res_class: pair.resolution_class,
        tokens: pair.token_count,
    })
    .expect("pair serializes")
}

pub fn parse_pair(line: &str) -> Result<CaptionPair, serde_json::Error> {
    let wire: WirePair = serde_json::from_str(line)?;
    Ok(CaptionPair {
        image_url: wire.url,
        alt_text: wire.alt,
        language: LanguageVerdict {
            language: wire.lang,
            confidence: wire.lang_conf,
        },
        resolution_class: wire.res_class,
        token_count: wire.tokens,
    })
}
