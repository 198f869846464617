//! Bounded-parallelism image downloads, header sniffing, and post-fetch
//! revalidation of image segments.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tokio::sync::Semaphore;

use crate::document::{ImageFormat, InterleavedDocument, Segment};
use crate::filter::{filter_image_node, Blocklists, Reason, SegmentDrop, Stage, Thresholds, Verdict};
use crate::io_util::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FetchTask {
    pub src_url: String,
    pub doc_id: String,
    pub segment_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FetchOutcome {
    Ok,
    HttpError(u16),
    Timeout,
    DecodeError,
    TooLarge,
    /// Connection refused, DNS failure, malformed URL and similar.
    ConnectError,
    /// Offline mode and the URL is not in the cache.
    CacheMiss,
}

impl FetchOutcome {
    fn is_transient(self) -> bool {
        match self {
            FetchOutcome::Timeout | FetchOutcome::ConnectError => true,
            FetchOutcome::HttpError(status) => status >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageMeta {
    pub format: ImageFormat,
    pub width_px: u32,
    pub height_px: u32,
}

/// `meta` is present exactly when the outcome is `Ok`; `bytes` too unless
/// the fetcher was told not to retain them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchResult {
    pub task: FetchTask,
    pub outcome: FetchOutcome,
    pub bytes: Option<Vec<u8>>,
    pub meta: Option<ImageMeta>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchConfig {
    pub parallelism: usize,
    pub per_host: usize,
    pub timeout: Duration,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub max_bytes: usize,
    pub user_agent: String,
    pub cache_dir: Option<PathBuf>,
    pub offline: bool,
    pub retain_bytes: bool,
}

impl Default for FetchConfig {
    fn default() -> Self {
        Self {
            parallelism: 40,
            per_host: 4,
            timeout: Duration::from_secs(20),
            max_retries: 2,
            backoff_base: Duration::from_millis(500),
            max_bytes: 20 * 1024 * 1024,
            user_agent: concat!("ilforge/", env!("CARGO_PKG_VERSION")).to_string(),
            cache_dir: None,
            offline: false,
            retain_bytes: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchReport {
    /// One result per task, in task order.
    pub results: Vec<FetchResult>,
    pub ok: usize,
    /// `None` for an empty task list.
    pub success_rate: Option<f64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetaError {
    #[error("unrecognized image signature")]
    Unrecognized,
    #[error("truncated image header")]
    Truncated,
    #[error("image has a zero dimension")]
    ZeroDimension,
}

fn be16(b: &[u8], at: usize) -> Option<u32> {
    Some(u16::from_be_bytes(b.get(at..at + 2)?.try_into().ok()?) as u32)
}

fn le16(b: &[u8], at: usize) -> Option<u32> {
    Some(u16::from_le_bytes(b.get(at..at + 2)?.try_into().ok()?) as u32)
}

fn le24(b: &[u8], at: usize) -> Option<u32> {
    let s = b.get(at..at + 3)?;
    Some(s[0] as u32 | (s[1] as u32) << 8 | (s[2] as u32) << 16)
}

/// Format and dimensions read from the container headers.
pub fn decode_meta(bytes: &[u8]) -> Result<ImageMeta, MetaError> {
    const PNG: &[u8] = b"\x89PNG\r\n\x1a\n";
    let (format, dims) = if bytes.starts_with(PNG) {
        let dims = if bytes.get(12..16) == Some(b"IHDR") {
            bytes
                .get(16..24)
                .map(|d| {
                    (
                        u32::from_be_bytes(d[..4].try_into().expect("4 bytes")),
                        u32::from_be_bytes(d[4..].try_into().expect("4 bytes")),
                    )
                })
        } else {
            None
        };
        (ImageFormat::Png, dims)
    } else if bytes.starts_with(&[0xFF, 0xD8]) {
        (ImageFormat::Jpeg, jpeg_dimensions(bytes))
    } else if bytes.len() >= 12 && &bytes[..4] == b"RIFF" && &bytes[8..12] == b"WEBP" {
        (ImageFormat::Webp, webp_dimensions(bytes))
    } else {
        return Err(MetaError::Unrecognized);
    };
    let (width_px, height_px) = dims.ok_or(MetaError::Truncated)?;
    if width_px == 0 || height_px == 0 {
        return Err(MetaError::ZeroDimension);
    }
    Ok(ImageMeta {
        format,
        width_px,
        height_px,
    })
}

fn jpeg_dimensions(b: &[u8]) -> Option<(u32, u32)> {
    let mut i = 2;
    loop {
        while *b.get(i)? != 0xFF {
            i += 1;
        }
        while *b.get(i)? == 0xFF {
            i += 1;
        }
        let marker = *b.get(i)?;
        i += 1;
        match marker {
            0xD8 | 0x01 | 0xD0..=0xD7 => continue,
            0xD9 | 0xDA => return None,
            0xC0..=0xCF if !matches!(marker, 0xC4 | 0xC8 | 0xCC) => {
                return Some((be16(b, i + 5)?, be16(b, i + 3)?));
            }
            _ => {
                let len = be16(b, i)? as usize;
                if len < 2 {
                    return None;
                }
                i += len;
            }
        }
    }
}

fn webp_dimensions(b: &[u8]) -> Option<(u32, u32)> {
    match b.get(12..16)? {
        b"VP8 " => {
            if b.get(23..26)? != [0x9D, 0x01, 0x2A] {
                return None;
            }
            Some((le16(b, 26)? & 0x3FFF, le16(b, 28)? & 0x3FFF))
        }
        b"VP8L" => {
            if *b.get(20)? != 0x2F {
                return None;
            }
            let bits = u32::from_le_bytes(b.get(21..25)?.try_into().ok()?);
            Some(((bits & 0x3FFF) + 1, ((bits >> 14) & 0x3FFF) + 1))
        }
        b"VP8X" => Some((le24(b, 24)? + 1, le24(b, 27)? + 1)),
        _ => None,
    }
}

/// Cache file stem for a URL.
pub fn url_hash(url: &str) -> String {
    Sha256::digest(url.as_bytes())[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Directory cache: `<hash>.img` holds fetched bytes, `<hash>.fail` the
/// recorded failure so reruns reproduce it offline.
#[derive(Debug, Clone)]
pub struct ImageCache {
    dir: PathBuf,
}

enum Cached {
    Bytes(Vec<u8>),
    Failure(FetchOutcome),
}

impl ImageCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn lookup(&self, url: &str) -> Option<Cached> {
        let stem = self.dir.join(url_hash(url));
        if let Ok(bytes) = fs::read(stem.with_extension("img")) {
            return Some(Cached::Bytes(bytes));
        }
        let text = fs::read_to_string(stem.with_extension("fail")).ok()?;
        serde_json::from_str(&text).ok().map(Cached::Failure)
    }

    pub fn store_bytes(&self, url: &str, bytes: &[u8]) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        write_atomic(&self.dir.join(url_hash(url)).with_extension("img"), bytes)
    }

    pub fn store_failure(&self, url: &str, outcome: FetchOutcome) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let text = serde_json::to_string(&outcome).expect("outcome serializes");
        write_atomic(&self.dir.join(url_hash(url)).with_extension("fail"), text.as_bytes())
    }
}

struct Shared {
    client: reqwest::Client,
    config: FetchConfig,
    global: Semaphore,
    hosts: HashMap<String, Arc<Semaphore>>,
    cache: Option<ImageCache>,
}

fn host_key(url: &str) -> String {
    url::Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(str::to_ascii_lowercase))
        .unwrap_or_default()
}

enum Attempt {
    Bytes(Vec<u8>),
    Failed(FetchOutcome),
}

async fn attempt(shared: &Shared, url: &str) -> Attempt {
    let response = match shared.client.get(url).send().await {
        Ok(r) => r,
        Err(e) if e.is_timeout() => return Attempt::Failed(FetchOutcome::Timeout),
        Err(_) => return Attempt::Failed(FetchOutcome::ConnectError),
    };
    let status = response.status();
    if !status.is_success() {
        return Attempt::Failed(FetchOutcome::HttpError(status.as_u16()));
    }
    let max = shared.config.max_bytes;
    if response.content_length().is_some_and(|n| n as usize > max) {
        return Attempt::Failed(FetchOutcome::TooLarge);
    }
    let mut response = response;
    let mut body = Vec::new();
    loop {
        match response.chunk().await {
            Ok(Some(chunk)) => {
                if body.len() + chunk.len() > max {
                    return Attempt::Failed(FetchOutcome::TooLarge);
                }
                body.extend_from_slice(&chunk);
            }
            Ok(None) => return Attempt::Bytes(body),
            Err(e) if e.is_timeout() => return Attempt::Failed(FetchOutcome::Timeout),
            Err(_) => return Attempt::Failed(FetchOutcome::ConnectError),
        }
    }
}

async fn download(shared: &Shared, url: &str) -> Attempt {
    let host = shared.hosts.get(&host_key(url)).cloned();
    let mut tries = 0;
    loop {
        let result = {
            let _host_permit = match &host {
                Some(sem) => Some(sem.acquire().await.expect("semaphore open")),
                None => None,
            };
            let _permit = shared.global.acquire().await.expect("semaphore open");
            attempt(shared, url).await
        };
        match result {
            Attempt::Failed(outcome) if outcome.is_transient() && tries < shared.config.max_retries => {
                tokio::time::sleep(shared.config.backoff_base * 2u32.pow(tries)).await;
                tries += 1;
            }
            other => return other,
        }
    }
}

async fn run_task(shared: Arc<Shared>, task: FetchTask) -> FetchResult {
    let cached = shared.cache.as_ref().and_then(|c| c.lookup(&task.src_url));
    let fetched = match cached {
        Some(Cached::Bytes(b)) => Attempt::Bytes(b),
        Some(Cached::Failure(outcome)) => Attempt::Failed(outcome),
        None if shared.config.offline => Attempt::Failed(FetchOutcome::CacheMiss),
        None => {
            let fetched = download(&shared, &task.src_url).await;
            if let Some(cache) = &shared.cache {
                // A cache write failure only costs a refetch next time.
                let _ = match &fetched {
                    Attempt::Bytes(b) => cache.store_bytes(&task.src_url, b),
                    Attempt::Failed(o) => cache.store_failure(&task.src_url, *o),
                };
            }
            fetched
        }
    };
    match fetched {
        Attempt::Bytes(bytes) => match decode_meta(&bytes) {
            Ok(meta) => FetchResult {
                task,
                outcome: FetchOutcome::Ok,
                bytes: shared.config.retain_bytes.then_some(bytes),
                meta: Some(meta),
            },
            Err(_) => FetchResult {
                task,
                outcome: FetchOutcome::DecodeError,
                bytes: None,
                meta: None,
            },
        },
        Attempt::Failed(outcome) => FetchResult {
            task,
            outcome,
            bytes: None,
            meta: None,
        },
    }
}

/// Downloads every task with at most `parallelism` requests in flight (and
/// at most `per_host` per host). Results come back in task order.
pub async fn fetch_batch(tasks: Vec<FetchTask>, config: &FetchConfig) -> FetchReport {
    assert!(config.parallelism >= 1 && config.per_host >= 1, "parallelism must be at least 1");
    let client = reqwest::Client::builder()
        .timeout(config.timeout)
        .user_agent(config.user_agent.clone())
        .build()
        .expect("HTTP client builds");
    let mut hosts = HashMap::new();
    for task in &tasks {
        hosts
            .entry(host_key(&task.src_url))
            .or_insert_with(|| Arc::new(Semaphore::new(config.per_host)));
    }
    let shared = Arc::new(Shared {
        client,
        config: config.clone(),
        global: Semaphore::new(config.parallelism),
        hosts,
        cache: config.cache_dir.clone().map(ImageCache::new),
    });
    let total = tasks.len();
    let mut set = tokio::task::JoinSet::new();
    for (index, task) in tasks.into_iter().enumerate() {
        let shared = Arc::clone(&shared);
        set.spawn(async move { (index, run_task(shared, task).await) });
    }
    let mut slots: Vec<Option<FetchResult>> = vec![None; total];
    while let Some(joined) = set.join_next().await {
        let (index, result) = joined.expect("fetch task panicked");
        slots[index] = Some(result);
    }
    let results: Vec<FetchResult> = slots.into_iter().map(|r| r.expect("every task finishes")).collect();
    let ok = results.iter().filter(|r| r.outcome == FetchOutcome::Ok).count();
    FetchReport {
        success_rate: (total > 0).then(|| ok as f64 / total as f64),
        ok,
        results,
    }
}

/// [`fetch_batch`] on a private multi-threaded runtime.
pub fn fetch_batch_blocking(tasks: Vec<FetchTask>, config: &FetchConfig) -> FetchReport {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .expect("tokio runtime builds")
        .block_on(fetch_batch(tasks, config))
}

/// Fetch tasks for every image segment of a document.
pub fn tasks_for(doc: &InterleavedDocument) -> impl Iterator<Item = FetchTask> + '_ {
    doc.segments.iter().enumerate().filter_map(|(i, s)| {
        s.as_image().map(|img| FetchTask {
            src_url: img.src_url.clone(),
            doc_id: doc.doc_id.clone(),
            segment_index: i,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RevalidateOutcome {
    pub result: Result<InterleavedDocument, Verdict>,
    /// Images that failed the image filters once their size was known.
    pub dropped: Vec<SegmentDrop>,
    /// Images that could not be fetched, with the reason.
    pub unfetched: Vec<(usize, FetchOutcome)>,
}

/// Fills in fetched dimensions and format, drops images that now fail the
/// image filters or were not fetched, and re-checks the image-count bounds.
pub fn revalidate(
    doc: &InterleavedDocument,
    results: &[FetchResult],
    th: &Thresholds,
    bl: &Blocklists,
) -> RevalidateOutcome {
    let by_segment: HashMap<usize, &FetchResult> = results
        .iter()
        .filter(|r| r.task.doc_id == doc.doc_id)
        .map(|r| (r.task.segment_index, r))
        .collect();
    let mut dropped = Vec::new();
    let mut unfetched = Vec::new();
    let mut segments = Vec::with_capacity(doc.segments.len());
    for (index, segment) in doc.segments.iter().enumerate() {
        let Segment::Image(img) = segment else {
            segments.push(segment.clone());
            continue;
        };
        let fetched = by_segment.get(&index);
        let meta = match fetched.and_then(|r| r.meta) {
            Some(meta) => meta,
            None => {
                unfetched.push((index, fetched.map_or(FetchOutcome::CacheMiss, |r| r.outcome)));
                continue;
            }
        };
        let mut img = img.clone();
        img.width_px = Some(meta.width_px);
        img.height_px = Some(meta.height_px);
        img.format = match (img.format, meta.format) {
            (Some(ImageFormat::Jpg), ImageFormat::Jpeg) => Some(ImageFormat::Jpg),
            (_, format) => Some(format),
        };
        let verdict = filter_image_node(&img, th, bl);
        if verdict.accepted {
            segments.push(Segment::Image(img));
        } else {
            dropped.push(SegmentDrop {
                segment: index,
                stage: Stage::Revalidate,
                reason: verdict.reason,
            });
        }
    }
    let out = InterleavedDocument {
        segments,
        ..doc.clone()
    };
    let images = out.image_count();
    let result = if images < th.doc_min_images {
        Err(Verdict::reject(Reason::NoImages))
    } else if images > th.doc_max_images {
        Err(Verdict::reject(Reason::TooManyImages))
    } else {
        Ok(out)
    };
    RevalidateOutcome {
        result,
        dropped,
        unfetched,
    }
}

/// A minimal PNG header (signature + IHDR) of the given size; enough for
/// [`decode_meta`].
pub fn png_header(width: u32, height: u32) -> Vec<u8> {
    let mut out = b"\x89PNG\r\n\x1a\n\x00\x00\x00\x0dIHDR".to_vec();
    out.extend_from_slice(&width.to_be_bytes());
    out.extend_from_slice(&height.to_be_bytes());
    out.extend_from_slice(&[8, 2, 0, 0, 0]);
    out.extend_from_slice(&[0; 4]);
    out
}
