//! The interleaved document model and its JSONL wire format.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lid::LanguageVerdict;

/// Identifies the doc-id hash so outputs produced with different hashes are
/// never mixed.
pub const DOC_ID_SCHEME: &str = "sha256-128";
/// Version of the JSONL schema written by [`serialize_document`].
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImageFormat {
    #[serde(rename = "JPG")]
    Jpg,
    #[serde(rename = "JPEG")]
    Jpeg,
    #[serde(rename = "PNG")]
    Png,
    #[serde(rename = "WEBP")]
    Webp,
    Other,
}

impl ImageFormat {
    /// Format implied by a file extension; `None` when there is no extension.
    pub fn from_filename(filename: &str) -> Option<Self> {
        let (_, ext) = filename.rsplit_once('.')?;
        Some(match ext.to_ascii_lowercase().as_str() {
            "jpg" => ImageFormat::Jpg,
            "jpeg" => ImageFormat::Jpeg,
            "png" => ImageFormat::Png,
            "webp" => ImageFormat::Webp,
            _ => ImageFormat::Other,
        })
    }

    pub fn is_accepted(self) -> bool {
        !matches!(self, ImageFormat::Other)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    pub src_url: String,
    pub alt_text: String,
    pub filename: String,
    pub figcaption: Option<String>,
    pub width_px: Option<u32>,
    pub height_px: Option<u32>,
    pub format: Option<ImageFormat>,
}

impl ImageRef {
    pub fn dimensions(&self) -> Option<(u32, u32)> {
        self.width_px.zip(self.height_px)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Segment {
    Text(String),
    Image(ImageRef),
}

impl Segment {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            Segment::Text(t) => Some(t),
            Segment::Image(_) => None,
        }
    }

    pub fn as_image(&self) -> Option<&ImageRef> {
        match self {
            Segment::Image(i) => Some(i),
            Segment::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedDocument {
    pub doc_id: String,
    pub source_url: String,
    pub domain: String,
    pub crawl_date: NaiveDate,
    pub language: LanguageVerdict,
    pub segments: Vec<Segment>,
}

impl InterleavedDocument {
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.segments.iter().filter_map(Segment::as_text)
    }

    pub fn images(&self) -> impl Iterator<Item = &ImageRef> {
        self.segments.iter().filter_map(Segment::as_image)
    }

    pub fn image_count(&self) -> usize {
        self.images().count()
    }

    /// All text segments joined by a paragraph separator.
    pub fn joined_text(&self) -> String {
        self.texts().collect::<Vec<_>>().join("\n\n")
    }
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("invalid document line: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid date `{0}`")]
    Date(String),
}

#[derive(Serialize, Deserialize)]
struct WireDocument {
    id: String,
    url: String,
    domain: String,
    lang: String,
    lang_conf: f64,
    date: String,
    segments: Vec<WireSegment>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum WireSegment {
    Text {
        text: String,
    },
    Image {
        src: String,
        alt: String,
        filename: String,
        w: Option<u32>,
        h: Option<u32>,
        format: Option<ImageFormat>,
        caption: Option<String>,
    },
}

/// One JSON object, no trailing newline. Key order is fixed by the wire
/// structs above.
pub fn serialize_document(doc: &InterleavedDocument) -> String {
    let wire = WireDocument {
        id: doc.doc_id.clone(),
        url: doc.source_url.clone(),
        domain: doc.domain.clone(),
        lang: doc.language.language.clone(),
        lang_conf: doc.language.confidence,
        date: doc.crawl_date.format("%Y-%m-%d").to_string(),
        segments: doc
            .segments
            .iter()
            .map(|s| match s {
                Segment::Text(text) => WireSegment::Text { text: text.clone() },
                Segment::Image(img) => WireSegment::Image {
                    src: img.src_url.clone(),
                    alt: img.alt_text.clone(),
                    filename: img.filename.clone(),
                    w: img.width_px,
                    h: img.height_px,
                    format: img.format,
                    caption: img.figcaption.clone(),
                },
            })
            .collect(),
    };
    serde_json::to_string(&wire).expect("document serializes")
}

pub fn parse_document(line: &str) -> Result<InterleavedDocument, WireError> {
    let wire: WireDocument = serde_json::from_str(line)?;
    let crawl_date = NaiveDate::parse_from_str(&wire.date, "%Y-%m-%d")
        .map_err(|_| WireError::Date(wire.date.clone()))?;
    Ok(InterleavedDocument {
        doc_id: wire.id,
        source_url: wire.url,
        domain: wire.domain,
        crawl_date,
        language: LanguageVerdict {
            language: wire.lang,
            confidence: wire.lang_conf,
        },
        segments: wire
            .segments
            .into_iter()
            .map(|s| match s {
                WireSegment::Text { text } => Segment::Text(text),
                WireSegment::Image {
                    src,
                    alt,
                    filename,
                    w,
                    h,
                    format,
                    caption,
                } => Segment::Image(ImageRef {
                    src_url: src,
                    alt_text: alt,
                    filename,
                    figcaption: caption,
                    width_px: w,
                    height_px: h,
                    format,
                }),
            })
            .collect(),
    })
}
