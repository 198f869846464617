//! Linearization of a pruned DOM into an interleaved document.

use chrono::NaiveDate;
use sha2::{Digest, Sha256};
use thiserror::Error;
use url::Url;

use crate::document::{ImageFormat, ImageRef, InterleavedDocument, Segment};
use crate::dom::DomNode;
use crate::lid::LanguageVerdict;
use crate::stats::registered_domain;
use crate::text::normalize_whitespace;

#[derive(Debug, Error, PartialEq)]
pub enum AssembleError {
    #[error("empty after assembly")]
    EmptyAfterAssembly,
    #[error("invalid page URL `{0}`")]
    InvalidUrl(String),
}

/// Provenance carried from the archive record into the document.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordMeta {
    pub source_url: String,
    pub crawl_date: NaiveDate,
}

const BLOCK_TAGS: &[&str] = &[
    "address", "article", "aside", "blockquote", "body", "caption", "dd", "details", "dialog", "div",
    "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5",
    "h6", "head", "header", "hgroup", "hr", "html", "li", "main", "nav", "ol", "p", "pre", "section",
    "summary", "table", "tbody", "td", "tfoot", "th", "thead", "title", "tr", "ul",
];

/// Subtrees that never produce segments.
const SKIPPED_TAGS: &[&str] = &["video", "audio", "source", "track", "script", "style", "noscript", "template"];

/// Final path component of a URL, lowercased, without query or fragment.
pub fn filename_of(src_url: &str) -> String {
    let path = match Url::parse(src_url) {
        Ok(url) => url.path().to_string(),
        Err(_) => {
            let end = src_url.find(['?', '#']).unwrap_or(src_url.len());
            let no_query = &src_url[..end];
            match no_query.find("://") {
                Some(i) => no_query[i + 3..].find('/').map_or(String::new(), |p| no_query[i + 3 + p..].to_string()),
                None => no_query.to_string(),
            }
        }
    };
    path.rsplit('/').next().unwrap_or("").to_lowercase()
}

/// Picks the image source: `src`, else the widest `srcset` candidate, else `data-src`.
fn pick_source(node: &DomNode) -> Option<String> {
    let non_empty = |v: Option<&str>| v.map(str::trim).filter(|s| !s.is_empty()).map(str::to_string);
    non_empty(node.attr("src"))
        .or_else(|| node.attr("srcset").and_then(largest_srcset_candidate))
        .or_else(|| non_empty(node.attr("data-src")))
}

fn largest_srcset_candidate(srcset: &str) -> Option<String> {
    let mut best: Option<(f64, &str)> = None;
    for candidate in srcset.split(',') {
        let mut parts = candidate.split_whitespace();
        let Some(url) = parts.next() else { continue };
        let size = parts
            .next()
            .and_then(|d| d.get(..d.len().saturating_sub(1)).and_then(|n| n.parse::<f64>().ok()))
            .unwrap_or(1.0);
        if best.is_none_or(|(b, _)| size > b) {
            best = Some((size, url));
        }
    }
    best.map(|(_, url)| url.to_string())
}

/// Normalizes block text: whitespace collapsed within each line, lines
/// trimmed, blank lines reduced to one paragraph separator.
fn normalize_block_text(raw: &str) -> String {
    let mut out = String::new();
    let mut blank = false;
    for line in raw.split('\n') {
        let line = normalize_whitespace(line);
        if line.is_empty() {
            blank = !out.is_empty();
            continue;
        }
        if !out.is_empty() {
            out.push_str(if blank { "\n\n" } else { "\n" });
        }
        out.push_str(&line);
        blank = false;
    }
    out
}

struct Linearizer<'a> {
    base: &'a Url,
    segments: Vec<Segment>,
    buffer: String,
    figures: Vec<usize>,
}

impl Linearizer<'_> {
    fn flush(&mut self) {
        let text = normalize_block_text(&self.buffer);
        self.buffer.clear();
        if !text.is_empty() {
            self.segments.push(Segment::Text(text));
        }
    }

    fn walk(&mut self, node: &DomNode) {
        if node.is_comment() {
            return;
        }
        if node.is_text() {
            self.buffer.push_str(&node.text);
            return;
        }
        let tag = node.tag.as_str();
        if SKIPPED_TAGS.contains(&tag) {
            return;
        }
        match tag {
            "img" => {
                self.flush();
                if let Some(image) = self.image_ref(node) {
                    self.segments.push(Segment::Image(image));
                }
            }
            "figure" => {
                self.flush();
                self.figures.push(self.segments.len());
                self.walk_children(node);
                self.flush();
                self.figures.pop();
            }
            "figcaption" => {
                self.flush();
                let caption = normalize_whitespace(&node.text_content());
                if caption.is_empty() {
                    return;
                }
                let start = self.figures.last().copied();
                let target = start.and_then(|start| {
                    self.segments[start..]
                        .iter_mut()
                        .rev()
                        .find_map(|s| match s {
                            Segment::Image(img) => Some(img),
                            Segment::Text(_) => None,
                        })
                });
                match target {
                    Some(img) => {
                        img.figcaption = Some(match img.figcaption.take() {
                            Some(prev) => format!("{prev} {caption}"),
                            None => caption,
                        })
                    }
                    None => self.segments.push(Segment::Text(caption)),
                }
            }
            t if BLOCK_TAGS.contains(&t) => {
                self.flush();
                self.walk_children(node);
                self.flush();
            }
            _ => self.walk_children(node),
        }
    }

    fn walk_children(&mut self, node: &DomNode) {
        for child in &node.children {
            self.walk(child);
        }
    }

    fn image_ref(&self, node: &DomNode) -> Option<ImageRef> {
        let src = pick_source(node)?;
        let resolved = self.base.join(&src).ok()?;
        if !matches!(resolved.scheme(), "http" | "https") {
            return None;
        }
        let src_url = resolved.to_string();
        let filename = filename_of(&src_url);
        Some(ImageRef {
            format: ImageFormat::from_filename(&filename),
            filename,
            src_url,
            alt_text: normalize_whitespace(node.attr("alt").unwrap_or("")),
            figcaption: None,
            width_px: None,
            height_px: None,
        })
    }
}

/// Stable 128-bit content id over the URL and the segment sequence.
pub fn document_id(source_url: &str, segments: &[Segment]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(source_url.as_bytes());
    hasher.update([0u8]);
    for segment in segments {
        match segment {
            Segment::Text(t) => {
                hasher.update(b"T");
                hasher.update(t.as_bytes());
            }
            Segment::Image(img) => {
                hasher.update(b"I");
                hasher.update(img.src_url.as_bytes());
            }
        }
        hasher.update([0x1e]);
    }
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Walks a pruned tree in document order, emitting one text segment per
/// block of text and one image segment per `<img>`.
///
/// The document's language is left as [`LanguageVerdict::unknown`]; routing
/// assigns it afterwards.
pub fn linearize(tree: &DomNode, base_url: &str, meta: &RecordMeta) -> Result<InterleavedDocument, AssembleError> {
    let base = Url::parse(base_url).map_err(|_| AssembleError::InvalidUrl(base_url.to_string()))?;
    let domain = registered_domain(&meta.source_url)
        .map_err(|_| AssembleError::InvalidUrl(meta.source_url.clone()))?;
    let mut lin = Linearizer {
        base: &base,
        segments: Vec::new(),
        buffer: String::new(),
        figures: Vec::new(),
    };
    lin.walk(tree);
    lin.flush();
    let segments = lin.segments;
    if segments.is_empty() {
        return Err(AssembleError::EmptyAfterAssembly);
    }
    Ok(InterleavedDocument {
        doc_id: document_id(&meta.source_url, &segments),
        source_url: meta.source_url.clone(),
        domain,
        crawl_date: meta.crawl_date,
        language: LanguageVerdict::unknown(),
        segments,
    })
}
