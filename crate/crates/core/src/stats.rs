//! Corpus statistics: per-language counts, domains, histograms.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::Datelike;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use url::Url;

use crate::caption::{CaptionPair, ResolutionClass};
use crate::document::InterleavedDocument;
use crate::text::words;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("URL `{0}` has no host")]
    NoHost(String),
    #[error("cannot merge stats counted with tokenizer `{0}` and `{1}`")]
    TokenizerMismatch(String, String),
}

/// Counts tokens. The id is stamped into every stats artifact.
pub trait Tokenizer: Send + Sync {
    fn id(&self) -> &str;
    fn count(&self, text: &str) -> usize;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl WhitespaceTokenizer {
    pub const ID: &'static str = "whitespace";
}

impl Tokenizer for WhitespaceTokenizer {
    fn id(&self) -> &str {
        Self::ID
    }

    fn count(&self, text: &str) -> usize {
        token_count(text)
    }
}

/// Number of maximal non-whitespace runs.
pub fn token_count(text: &str) -> usize {
    words(text).count()
}

/// Full lowercased host of a URL, without port.
pub fn registered_domain(url: &str) -> Result<String, StatsError> {
    let parsed = Url::parse(url).map_err(|_| StatsError::NoHost(url.to_string()))?;
    match parsed.host_str() {
        Some(host) if !host.is_empty() => Ok(host.to_ascii_lowercase()),
        _ => Err(StatsError::NoHost(url.to_string())),
    }
}

/// Image size bins are this many pixels wide on each side.
pub const SIZE_BIN_PX: u32 = 64;
/// Histogram key for images whose size is unknown.
pub const UNKNOWN_SIZE: &str = "unknown";

fn size_bin(dims: Option<(u32, u32)>) -> String {
    match dims {
        Some((w, h)) => format!("{}x{}", w / SIZE_BIN_PX * SIZE_BIN_PX, h / SIZE_BIN_PX * SIZE_BIN_PX),
        None => UNKNOWN_SIZE.to_string(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageStats {
    pub documents: u64,
    pub tokens: u64,
    pub images: u64,
    pub avg_tokens_per_doc: f64,
    pub avg_images_per_doc: f64,
}

impl LanguageStats {
    fn finalize(&mut self) {
        let (t, i) = ratio_pair(self.tokens, self.images, self.documents);
        self.avg_tokens_per_doc = t;
        self.avg_images_per_doc = i;
    }
}

fn ratio_pair(a: u64, b: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        (0.0, 0.0)
    } else {
        (a as f64 / n as f64, b as f64 / n as f64)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CapLanguageStats {
    pub pairs: u64,
    pub tokens: u64,
    pub avg_tokens_per_pair: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub tokenizer: String,
    pub per_language: BTreeMap<String, LanguageStats>,
    pub domain_counts: BTreeMap<String, u64>,
    /// Images per document → number of documents.
    pub image_count_histogram: BTreeMap<u64, u64>,
    pub year_histogram: BTreeMap<i32, u64>,
    /// `"<w>x<h>"` lower bin corners (or `"unknown"`) → number of images.
    pub image_size_histogram: BTreeMap<String, u64>,
    pub cap_per_language: BTreeMap<String, CapLanguageStats>,
    pub cap_resolution_counts: BTreeMap<ResolutionClass, u64>,
    pub cap_unknown_resolution: u64,
    /// Shares among pairs with a known resolution class.
    pub cap_resolution_shares: BTreeMap<ResolutionClass, f64>,
}

impl CorpusStats {
    pub fn zero(tokenizer: &str) -> Self {
        Self {
            tokenizer: tokenizer.to_string(),
            per_language: BTreeMap::new(),
            domain_counts: BTreeMap::new(),
            image_count_histogram: BTreeMap::new(),
            year_histogram: BTreeMap::new(),
            image_size_histogram: BTreeMap::new(),
            cap_per_language: BTreeMap::new(),
            cap_resolution_counts: BTreeMap::new(),
            cap_unknown_resolution: 0,
            cap_resolution_shares: BTreeMap::new(),
        }
    }

    pub fn total_documents(&self) -> u64 {
        self.per_language.values().map(|l| l.documents).sum()
    }

    pub fn total_images(&self) -> u64 {
        self.per_language.values().map(|l| l.images).sum()
    }

    pub fn total_pairs(&self) -> u64 {
        self.cap_per_language.values().map(|l| l.pairs).sum()
    }

    /// Cumulative share of documents with at most `k` images, per `k`.
    pub fn image_count_cdf(&self) -> Vec<(u64, f64)> {
        let total = self.total_documents();
        let mut running = 0;
        self.image_count_histogram
            .iter()
            .map(|(&k, &n)| {
                running += n;
                (k, running as f64 / total as f64)
            })
            .collect()
    }

    /// Recomputes every derived field from the counts.
    fn finalize(&mut self) {
        for lang in self.per_language.values_mut() {
            lang.finalize();
        }
        for cap in self.cap_per_language.values_mut() {
            cap.avg_tokens_per_pair = if cap.pairs == 0 {
                0.0
            } else {
                cap.tokens as f64 / cap.pairs as f64
            };
        }
        let known: u64 = self.cap_resolution_counts.values().sum();
        self.cap_resolution_shares = if known == 0 {
            BTreeMap::new()
        } else {
            self.cap_resolution_counts
                .iter()
                .map(|(&class, &n)| (class, n as f64 / known as f64))
                .collect()
        };
    }
}

/// Single-pass accumulator; memory grows only with distinct languages,
/// domains and histogram keys.
pub struct StatsAggregator<'a> {
    tokenizer: &'a dyn Tokenizer,
    stats: CorpusStats,
}

impl<'a> StatsAggregator<'a> {
    pub fn new(tokenizer: &'a dyn Tokenizer) -> Self {
        Self {
            stats: CorpusStats::zero(tokenizer.id()),
            tokenizer,
        }
    }

    pub fn add_document(&mut self, doc: &InterleavedDocument) {
        let s = &mut self.stats;
        let images = doc.image_count() as u64;
        let tokens: u64 = doc.texts().map(|t| self.tokenizer.count(t) as u64).sum();
        let lang = s.per_language.entry(doc.language.language.clone()).or_default();
        lang.documents += 1;
        lang.tokens += tokens;
        lang.images += images;
        *s.domain_counts.entry(doc.domain.clone()).or_default() += 1;
        *s.image_count_histogram.entry(images).or_default() += 1;
        *s.year_histogram.entry(doc.crawl_date.year()).or_default() += 1;
        for img in doc.images() {
            *s.image_size_histogram.entry(size_bin(img.dimensions())).or_default() += 1;
        }
    }

    pub fn add_pair(&mut self, pair: &CaptionPair) {
        let s = &mut self.stats;
        let cap = s.cap_per_language.entry(pair.language.language.clone()).or_default();
        cap.pairs += 1;
        cap.tokens += pair.token_count as u64;
        match pair.resolution_class {
            Some(class) => *s.cap_resolution_counts.entry(class).or_default() += 1,
            None => s.cap_unknown_resolution += 1,
        }
    }

    pub fn finish(mut self) -> CorpusStats {
        self.stats.finalize();
        self.stats
    }
}

pub fn aggregate<'d, 'p>(
    docs: impl IntoIterator<Item = &'d InterleavedDocument>,
    pairs: impl IntoIterator<Item = &'p CaptionPair>,
    tokenizer: &dyn Tokenizer,
) -> CorpusStats {
    let mut agg = StatsAggregator::new(tokenizer);
    for doc in docs {
        agg.add_document(doc);
    }
    for pair in pairs {
        agg.add_pair(pair);
    }
    agg.finish()
}

fn add_counts<K: Ord + Clone>(into: &mut BTreeMap<K, u64>, from: &BTreeMap<K, u64>) {
    for (k, v) in from {
        *into.entry(k.clone()).or_default() += v;
    }
}

/// Pointwise sum of counts; derived fields are recomputed from the sums.
pub fn merge(a: &CorpusStats, b: &CorpusStats) -> Result<CorpusStats, StatsError> {
    if a.tokenizer != b.tokenizer {
        return Err(StatsError::TokenizerMismatch(a.tokenizer.clone(), b.tokenizer.clone()));
    }
    let mut out = a.clone();
    for (lang, s) in &b.per_language {
        let t = out.per_language.entry(lang.clone()).or_default();
        t.documents += s.documents;
        t.tokens += s.tokens;
        t.images += s.images;
    }
    for (lang, s) in &b.cap_per_language {
        let t = out.cap_per_language.entry(lang.clone()).or_default();
        t.pairs += s.pairs;
        t.tokens += s.tokens;
    }
    add_counts(&mut out.domain_counts, &b.domain_counts);
    add_counts(&mut out.image_count_histogram, &b.image_count_histogram);
    add_counts(&mut out.year_histogram, &b.year_histogram);
    add_counts(&mut out.image_size_histogram, &b.image_size_histogram);
    add_counts(&mut out.cap_resolution_counts, &b.cap_resolution_counts);
    out.cap_unknown_resolution += b.cap_unknown_resolution;
    out.finalize();
    Ok(out)
}

/// Editable host → category mapping; unlisted hosts are `unmapped`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DomainCategories {
    map: BTreeMap<String, String>,
}

pub const UNMAPPED: &str = "unmapped";

impl DomainCategories {
    pub fn parse(text: &str) -> Self {
        let map = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once('='))
            .map(|(h, c)| (h.trim().to_ascii_lowercase(), c.trim().to_string()))
            .collect();
        Self { map }
    }

    pub fn bundled() -> Self {
        Self::parse(include_str!("../data/domain_categories.txt"))
    }

    pub fn category(&self, host: &str) -> &str {
        self.map.get(host).map_or(UNMAPPED, String::as_str)
    }

    pub fn counts(&self, stats: &CorpusStats) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for (host, n) in &stats.domain_counts {
            *out.entry(self.category(host).to_string()).or_default() += n;
        }
        out
    }
}

#[derive(Serialize)]
struct StatsReport<'a> {
    schema_version: u32,
    #[serde(flatten)]
    stats: &'a CorpusStats,
    domain_categories: BTreeMap<String, u64>,
}

/// The `stats.json` document: the stats plus domain category totals.
pub fn stats_json(stats: &CorpusStats, categories: &DomainCategories) -> String {
    let report = StatsReport {
        schema_version: crate::document::SCHEMA_VERSION,
        stats,
        domain_categories: categories.counts(stats),
    };
    let mut s = serde_json::to_string_pretty(&report).expect("stats serialize");
    s.push('\n');
    s
}

/// Documents / tokens / images per language, one row per language.
pub fn language_table_csv(stats: &CorpusStats) -> String {
    let mut out = String::from("language,documents,tokens,images,avg_tokens_per_doc,avg_images_per_doc\n");
    for (lang, s) in &stats.per_language {
        let _ = writeln!(
            out,
            "{lang},{},{},{},{:.2},{:.2}",
            s.documents, s.tokens, s.images, s.avg_tokens_per_doc, s.avg_images_per_doc
        );
    }
    out
}

/// Caption pairs and tokens per language.
pub fn cap_table_csv(stats: &CorpusStats) -> String {
    let mut out = String::from("language,pairs,tokens,avg_tokens_per_pair\n");
    for (lang, s) in &stats.cap_per_language {
        let _ = writeln!(out, "{lang},{},{},{:.2}", s.pairs, s.tokens, s.avg_tokens_per_pair);
    }
    out
}
