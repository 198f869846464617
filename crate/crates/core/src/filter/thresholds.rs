use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("invalid thresholds: {0}")]
pub struct ThresholdError(pub String);

/// Every cutoff used by the filters. Minimums reject strictly below,
/// maximums strictly above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub para_min_words: usize,
    pub para_max_words: usize,
    pub doc_min_words: usize,
    pub doc_max_words: usize,
    pub char_rep_max: f64,
    pub word_rep_max_para: f64,
    pub word_rep_max_doc: f64,
    pub common_word_min: f64,
    pub img_min_side_px: u32,
    pub aspect_min: f64,
    pub aspect_max: f64,
    pub doc_min_images: usize,
    pub doc_max_images: usize,
    pub alt_min_words: usize,
    pub line_min_words: usize,
    /// Character n-gram size for the character repetition ratio.
    pub char_ngram: usize,
    /// Word n-gram size for the word repetition ratio.
    pub word_ngram: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            para_min_words: 4,
            para_max_words: 1000,
            doc_min_words: 10,
            doc_max_words: 2000,
            char_rep_max: 0.1,
            word_rep_max_para: 0.1,
            word_rep_max_doc: 0.2,
            common_word_min: 0.1,
            img_min_side_px: 150,
            aspect_min: 0.2,
            aspect_max: 5.0,
            doc_min_images: 1,
            doc_max_images: 30,
            alt_min_words: 5,
            line_min_words: 4,
            char_ngram: 5,
            word_ngram: 2,
        }
    }
}

impl Thresholds {
    /// Profile with the stricter eight-word paragraph minimum.
    pub fn strict_8() -> Self {
        Self {
            para_min_words: 8,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ThresholdError> {
        let fail = |msg: &str| Err(ThresholdError(msg.to_string()));
        if self.para_min_words > self.para_max_words {
            return fail("para_min_words > para_max_words");
        }
        if self.doc_min_words > self.doc_max_words {
            return fail("doc_min_words > doc_max_words");
        }
        if self.doc_min_images > self.doc_max_images {
            return fail("doc_min_images > doc_max_images");
        }
        for (name, v) in [
            ("char_rep_max", self.char_rep_max),
            ("word_rep_max_para", self.word_rep_max_para),
            ("word_rep_max_doc", self.word_rep_max_doc),
            ("common_word_min", self.common_word_min),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ThresholdError(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        if !(self.aspect_max >= 1.0 && (self.aspect_min * self.aspect_max - 1.0).abs() < 1e-9) {
            return fail("aspect_min must equal 1 / aspect_max (with aspect_max >= 1)");
        }
        if self.char_ngram == 0 || self.word_ngram == 0 {
            return fail("n-gram sizes must be at least 1");
        }
        Ok(())
    }
}
