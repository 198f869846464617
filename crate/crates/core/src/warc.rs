//! WARC ingestion: streaming record iteration, URL canonicalization and
//! first-wins deduplication.
//!
//! [`WarcReader`] accepts plain WARC 1.0/1.1 streams and streams where every
//! record is its own gzip member (the Common Crawl layout). Only one record
//! (or one gzip member) is held in memory at a time. Records that cannot be
//! parsed are skipped and counted; the reader resynchronizes on the next
//! `WARC/1.` header line or the next gzip member.

use std::collections::{HashSet, VecDeque};
use std::fs;
use std::io::{self, BufRead, Cursor, Read, Write};
use std::path::Path;

use chrono::{DateTime, SecondsFormat, Utc};
use flate2::bufread::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use sha2::{Digest, Sha256};
use thiserror::Error;

const GZIP_MAGIC: [u8; 2] = [0x1f, 0x8b];
const MAX_HEADER_LINE: usize = 64 * 1024;
const MAX_HEADER_LINES: usize = 512;
/// Records with a larger declared block are skipped rather than buffered.
pub const MAX_RECORD_BYTES: u64 = 256 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum WarcError {
    #[error("not a WARC stream: {0}")]
    NotWarc(String),
    #[error("I/O error while reading archive: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UrlError {
    #[error("unparseable URL `{url}`: {reason}")]
    Unparseable { url: String, reason: &'static str },
}

/// One archived HTTP response.
///
/// `payload` is the HTTP entity body (transfer/content encodings removed).
/// The WARC block length was checked against `Content-Length` at read time.
#[derive(Debug, Clone, PartialEq)]
pub struct WarcRecord {
    pub target_url: String,
    pub capture_time: DateTime<Utc>,
    pub http_status: u16,
    pub content_type: String,
    pub payload: Vec<u8>,
    pub truncated: bool,
}

impl WarcRecord {
    /// The `charset` parameter of the content type, if declared.
    pub fn charset(&self) -> Option<&str> {
        charset_param(&self.content_type)
    }
}

pub(crate) fn charset_param(content_type: &str) -> Option<&str> {
    content_type.split(';').skip(1).find_map(|param| {
        let (key, value) = param.split_once('=')?;
        key.trim()
            .eq_ignore_ascii_case("charset")
            .then(|| value.trim().trim_matches('"'))
            .filter(|v| !v.is_empty())
    })
}

/// Counters kept while iterating an archive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReaderStats {
    /// Every record header encountered, including skipped ones.
    pub records_seen: u64,
    pub yielded: u64,
    /// Non-response records, non-2xx responses and non-HTML payloads.
    pub non_html_skipped: u64,
    /// Records dropped because their header, length or HTTP block was invalid.
    pub malformed_skipped: u64,
    /// Gzip members that failed to decompress.
    pub corrupt_members: u64,
}

/// `BufRead` adapter with a pushback buffer, used to rewind after a record
/// whose declared length turned out to be wrong.
struct Pushback<R> {
    pending: Vec<u8>,
    pos: usize,
    inner: R,
}

impl<R: BufRead> Pushback<R> {
    fn new(inner: R) -> Self {
        Self {
            pending: Vec::new(),
            pos: 0,
            inner,
        }
    }

    fn unread(&mut self, bytes: &[u8]) {
        if bytes.is_empty() {
            return;
        }
        let mut joined = bytes.to_vec();
        joined.extend_from_slice(&self.pending[self.pos..]);
        self.pending = joined;
        self.pos = 0;
    }

    /// Reads one line including its terminator. Lines longer than `max`
    /// are truncated (the remainder is consumed).
    fn read_line_bounded(&mut self, out: &mut Vec<u8>, max: usize) -> io::Result<usize> {
        out.clear();
        let mut total = 0;
        loop {
            let buf = self.fill_buf()?;
            if buf.is_empty() {
                return Ok(total);
            }
            let (chunk, done) = match buf.iter().position(|&b| b == b'\n') {
                Some(i) => (&buf[..=i], true),
                None => (buf, false),
            };
            let n = chunk.len();
            let room = max.saturating_sub(out.len());
            out.extend_from_slice(&chunk[..n.min(room)]);
            self.consume(n);
            total += n;
            if done {
                return Ok(total);
            }
        }
    }
}

impl<R: BufRead> Read for Pushback<R> {
    fn read(&mut self, out: &mut [u8]) -> io::Result<usize> {
        let available = self.fill_buf()?;
        let n = available.len().min(out.len());
        out[..n].copy_from_slice(&available[..n]);
        self.consume(n);
        Ok(n)
    }
}

impl<R: BufRead> BufRead for Pushback<R> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        if self.pos < self.pending.len() {
            Ok(&self.pending[self.pos..])
        } else {
            self.inner.fill_buf()
        }
    }

    fn consume(&mut self, amt: usize) {
        if self.pos < self.pending.len() {
            self.pos += amt;
            if self.pos >= self.pending.len() {
                self.pending.clear();
                self.pos = 0;
            }
        } else {
            self.inner.consume(amt);
        }
    }
}

struct RawRecord {
    headers: Vec<(String, String)>,
    block: Vec<u8>,
}

impl RawRecord {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

enum Parsed {
    Record(RawRecord),
    Malformed,
    End,
}

/// Parses uncompressed WARC records out of a byte stream.
struct RecordParser<R> {
    input: Pushback<R>,
    saw_record: bool,
    resync_line: Option<Vec<u8>>,
}

impl<R: BufRead> RecordParser<R> {
    fn new(input: R) -> Self {
        Self {
            input: Pushback::new(input),
            saw_record: false,
            resync_line: None,
        }
    }

    fn next_raw(&mut self) -> Result<Parsed, WarcError> {
        let mut line = Vec::new();
        let version = loop {
            if let Some(l) = self.resync_line.take() {
                break l;
            }
            if self.input.read_line_bounded(&mut line, MAX_HEADER_LINE)? == 0 {
                return Ok(Parsed::End);
            }
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            break std::mem::take(&mut line);
        };
        if !version.starts_with(b"WARC/") {
            if !self.saw_record {
                let shown = String::from_utf8_lossy(&version[..version.len().min(40)]);
                return Err(WarcError::NotWarc(format!(
                    "stream starts with `{}`",
                    shown.trim_end()
                )));
            }
            self.resync()?;
            return Ok(Parsed::Malformed);
        }
        self.saw_record = true;

        let mut headers: Vec<(String, String)> = Vec::new();
        loop {
            if self.input.read_line_bounded(&mut line, MAX_HEADER_LINE)? == 0 {
                return Ok(Parsed::Malformed);
            }
            if line == b"\r\n" || line == b"\n" {
                break;
            }
            if headers.len() >= MAX_HEADER_LINES {
                self.resync()?;
                return Ok(Parsed::Malformed);
            }
            let text = String::from_utf8_lossy(&line);
            let text = text.trim_end_matches(['\r', '\n']);
            if text.starts_with([' ', '\t']) {
                if let Some((_, value)) = headers.last_mut() {
                    value.push(' ');
                    value.push_str(text.trim());
                }
                continue;
            }
            match text.split_once(':') {
                Some((name, value)) => headers.push((name.trim().to_string(), value.trim().to_string())),
                None => {
                    self.resync()?;
                    return Ok(Parsed::Malformed);
                }
            }
        }

        let length = headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("Content-Length"))
            .and_then(|(_, v)| v.parse::<u64>().ok());
        let Some(length) = length.filter(|&n| n <= MAX_RECORD_BYTES) else {
            self.resync()?;
            return Ok(Parsed::Malformed);
        };

        let mut block = Vec::with_capacity(length as usize);
        (&mut self.input).take(length).read_to_end(&mut block)?;
        if (block.len() as u64) < length {
            return Ok(Parsed::Malformed);
        }

        let mut trailer = Vec::with_capacity(4);
        (&mut self.input).take(4).read_to_end(&mut trailer)?;
        if trailer == b"\r\n\r\n" || (trailer.is_empty() && block.len() as u64 == length) {
            return Ok(Parsed::Record(RawRecord { headers, block }));
        }

        // Declared length disagrees with the record layout. If the next record
        // header is inside what we consumed, rewind to it; otherwise scan ahead.
        block.extend_from_slice(&trailer);
        match find(&block, b"\nWARC/1.") {
            Some(i) => self.input.unread(&block[i + 1..]),
            None => {
                self.input.unread(&trailer);
                self.resync()?;
            }
        }
        Ok(Parsed::Malformed)
    }

    /// Skips lines until one starts a new record.
    fn resync(&mut self) -> io::Result<()> {
        let mut line = Vec::new();
        loop {
            if self.input.read_line_bounded(&mut line, MAX_HEADER_LINE)? == 0 {
                return Ok(());
            }
            if line.starts_with(b"WARC/1.") {
                self.resync_line = Some(line);
                return Ok(());
            }
        }
    }
}

fn find(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

enum Mode<R: BufRead> {
    Undetected(Option<R>),
    Plain(RecordParser<R>),
    Gzip(GzipMembers<R>),
    Done,
}

struct GzipMembers<R> {
    inner: R,
    pending: VecDeque<RawRecord>,
}

/// Streaming iterator over the HTML 2xx response records of an archive.
pub struct WarcReader<R: BufRead> {
    mode: Mode<R>,
    stats: ReaderStats,
}

impl<R: BufRead> WarcReader<R> {
    pub fn new(input: R) -> Self {
        Self {
            mode: Mode::Undetected(Some(input)),
            stats: ReaderStats::default(),
        }
    }

    pub fn stats(&self) -> ReaderStats {
        self.stats
    }

    fn detect(&mut self) -> Result<(), WarcError> {
        if let Mode::Undetected(input) = &mut self.mode {
            let mut input = input.take().expect("reader detected once");
            let head = input.fill_buf()?;
            self.mode = if head.starts_with(&GZIP_MAGIC) {
                Mode::Gzip(GzipMembers {
                    inner: input,
                    pending: VecDeque::new(),
                })
            } else {
                Mode::Plain(RecordParser::new(input))
            };
        }
        Ok(())
    }

    fn next_raw(&mut self) -> Result<Option<RawRecord>, WarcError> {
        self.detect()?;
        loop {
            match &mut self.mode {
                Mode::Plain(parser) => match parser.next_raw()? {
                    Parsed::Record(raw) => {
                        self.stats.records_seen += 1;
                        return Ok(Some(raw));
                    }
                    Parsed::Malformed => {
                        self.stats.records_seen += 1;
                        self.stats.malformed_skipped += 1;
                    }
                    Parsed::End => return Ok(None),
                },
                Mode::Gzip(members) => {
                    if let Some(raw) = members.pending.pop_front() {
                        return Ok(Some(raw));
                    }
                    let first = self.stats.records_seen == 0 && self.stats.corrupt_members == 0;
                    match read_member(members, &mut self.stats, first)? {
                        true => continue,
                        false => return Ok(None),
                    }
                }
                Mode::Done => return Ok(None),
                Mode::Undetected(_) => unreachable!("detected above"),
            }
        }
    }
}

/// Decompresses the next gzip member and queues its records. Returns false at
/// end of stream.
fn read_member<R: BufRead>(
    members: &mut GzipMembers<R>,
    stats: &mut ReaderStats,
    first: bool,
) -> Result<bool, WarcError> {
    // Find the next member boundary.
    loop {
        let buf = members.inner.fill_buf()?;
        if buf.is_empty() {
            return Ok(false);
        }
        if buf.starts_with(&GZIP_MAGIC) || (buf.len() == 1 && buf[0] == GZIP_MAGIC[0]) {
            break;
        }
        let skip = buf
            .iter()
            .skip(1)
            .position(|&b| b == GZIP_MAGIC[0])
            .map_or(buf.len(), |i| i + 1);
        members.inner.consume(skip);
    }

    let mut data = Vec::new();
    let result = GzDecoder::new(&mut members.inner)
        .take(MAX_RECORD_BYTES + 1)
        .read_to_end(&mut data);
    if result.is_err() || data.len() as u64 > MAX_RECORD_BYTES {
        stats.corrupt_members += 1;
        stats.records_seen += 1;
        stats.malformed_skipped += 1;
        // Step past the magic so the boundary scan moves forward.
        let buf = members.inner.fill_buf()?;
        if buf.starts_with(&GZIP_MAGIC) {
            members.inner.consume(1);
        }
        return Ok(true);
    }

    let mut parser = RecordParser::new(Cursor::new(data));
    parser.saw_record = !first;
    loop {
        match parser.next_raw()? {
            Parsed::Record(raw) => {
                stats.records_seen += 1;
                members.pending.push_back(raw);
            }
            Parsed::Malformed => {
                stats.records_seen += 1;
                stats.malformed_skipped += 1;
            }
            Parsed::End => break,
        }
    }
    Ok(true)
}

impl<R: BufRead> Iterator for WarcReader<R> {
    type Item = Result<WarcRecord, WarcError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let raw = match self.next_raw() {
                Ok(Some(raw)) => raw,
                Ok(None) => {
                    self.mode = Mode::Done;
                    return None;
                }
                Err(e) => {
                    self.mode = Mode::Done;
                    return Some(Err(e));
                }
            };
            match classify_raw(raw) {
                RawOutcome::Html(record) => {
                    self.stats.yielded += 1;
                    return Some(Ok(record));
                }
                RawOutcome::NotHtml => self.stats.non_html_skipped += 1,
                RawOutcome::Malformed => self.stats.malformed_skipped += 1,
            }
        }
    }
}

enum RawOutcome {
    Html(WarcRecord),
    NotHtml,
    Malformed,
}

fn classify_raw(raw: RawRecord) -> RawOutcome {
    let is_response = raw
        .header("WARC-Type")
        .is_some_and(|t| t.eq_ignore_ascii_case("response"));
    if !is_response {
        return RawOutcome::NotHtml;
    }
    let Some(target) = raw.header("WARC-Target-URI") else {
        return RawOutcome::Malformed;
    };
    let target_url = target.trim_matches(['<', '>']).to_string();
    if canonicalize_url(&target_url).is_err() {
        return RawOutcome::Malformed;
    }
    let capture_time = match raw
        .header("WARC-Date")
        .and_then(|d| DateTime::parse_from_rfc3339(d).ok())
    {
        Some(t) => t.with_timezone(&Utc),
        None => return RawOutcome::Malformed,
    };
    let truncated = raw.header("WARC-Truncated").is_some();
    let identified = raw.header("WARC-Identified-Payload-Type").map(str::to_string);

    let Some(http) = parse_http_response(&raw.block) else {
        return RawOutcome::Malformed;
    };
    if !(100..=599).contains(&http.status) {
        return RawOutcome::Malformed;
    }
    if !(200..300).contains(&http.status) {
        return RawOutcome::NotHtml;
    }
    let content_type = http.content_type.or(identified).unwrap_or_default();
    if !is_html_type(&content_type) {
        return RawOutcome::NotHtml;
    }
    RawOutcome::Html(WarcRecord {
        target_url,
        capture_time,
        http_status: http.status,
        content_type,
        payload: http.body,
        truncated,
    })
}

fn is_html_type(content_type: &str) -> bool {
    let mime = content_type.split(';').next().unwrap_or("").trim();
    mime.eq_ignore_ascii_case("text/html") || mime.eq_ignore_ascii_case("application/xhtml+xml")
}

struct HttpResponse {
    status: u16,
    content_type: Option<String>,
    body: Vec<u8>,
}

fn parse_http_response(block: &[u8]) -> Option<HttpResponse> {
    let header_end = find(block, b"\r\n\r\n")
        .map(|i| (i, i + 4))
        .or_else(|| find(block, b"\n\n").map(|i| (i, i + 2)))?;
    let head = std::str::from_utf8(&block[..header_end.0]).ok()?;
    let mut lines = head.lines();
    let status_line = lines.next()?;
    let mut parts = status_line.split_whitespace();
    if !parts.next()?.starts_with("HTTP/") {
        return None;
    }
    let status: u16 = parts.next()?.parse().ok()?;

    let mut content_type = None;
    let mut chunked = false;
    let mut gzip = false;
    for line in lines {
        let Some((name, value)) = line.split_once(':') else {
            continue;
        };
        let value = value.trim();
        match name.trim().to_ascii_lowercase().as_str() {
            "content-type" => content_type = Some(value.to_string()),
            "transfer-encoding" => chunked = value.to_ascii_lowercase().contains("chunked"),
            "content-encoding" => gzip = matches!(value.to_ascii_lowercase().as_str(), "gzip" | "x-gzip"),
            _ => {}
        }
    }

    let mut body = block[header_end.1..].to_vec();
    if chunked {
        if let Some(decoded) = dechunk(&body) {
            body = decoded;
        }
    }
    if gzip {
        let mut decoded = Vec::new();
        if GzDecoder::new(&body[..]).read_to_end(&mut decoded).is_ok() {
            body = decoded;
        }
    }
    Some(HttpResponse {
        status,
        content_type,
        body,
    })
}

fn dechunk(mut data: &[u8]) -> Option<Vec<u8>> {
    let mut out = Vec::with_capacity(data.len());
    loop {
        let line_end = find(data, b"\r\n")?;
        let size_text = std::str::from_utf8(&data[..line_end]).ok()?;
        let size_text = size_text.split(';').next()?.trim();
        let size = usize::from_str_radix(size_text, 16).ok()?;
        data = &data[line_end + 2..];
        if size == 0 {
            return Some(out);
        }
        if data.len() < size {
            return None;
        }
        out.extend_from_slice(&data[..size]);
        data = data.get(size + 2..).unwrap_or(&[]);
    }
}

fn default_port(scheme: &str) -> Option<u16> {
    match scheme {
        "http" | "ws" => Some(80),
        "https" | "wss" => Some(443),
        "ftp" => Some(21),
        _ => None,
    }
}

/// Canonical form used as the deduplication key.
///
/// Scheme and host are lowercased, the fragment, a default port and an empty
/// query (`?` with nothing after it) are removed. Path and query bytes are
/// kept as written.
pub fn canonicalize_url(url: &str) -> Result<String, UrlError> {
    let bad = |reason| UrlError::Unparseable {
        url: url.to_string(),
        reason,
    };
    let trimmed = url.trim();
    let (scheme, rest) = trimmed.split_once(':').ok_or_else(|| bad("missing scheme"))?;
    let mut chars = scheme.chars();
    let scheme_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '+' | '-' | '.'));
    if !scheme_ok {
        return Err(bad("invalid scheme"));
    }
    let scheme = scheme.to_ascii_lowercase();
    let rest = rest.strip_prefix("//").ok_or_else(|| bad("missing authority"))?;

    let authority_end = rest.find(['/', '?', '#']).unwrap_or(rest.len());
    let (authority, tail) = rest.split_at(authority_end);
    let tail = tail.split('#').next().unwrap_or("");
    let (path, query) = match tail.split_once('?') {
        Some((p, q)) => (p, Some(q)),
        None => (tail, None),
    };

    let (userinfo, hostport) = match authority.rsplit_once('@') {
        Some((u, h)) => (Some(u), h),
        None => (None, authority),
    };
    let (host, port) = if let Some(v6) = hostport.strip_prefix('[') {
        let close = v6.find(']').ok_or_else(|| bad("unterminated IPv6 host"))?;
        let after = &v6[close + 1..];
        let port = match after {
            "" => None,
            p => Some(p.strip_prefix(':').ok_or_else(|| bad("junk after IPv6 host"))?),
        };
        (&hostport[..close + 2], port)
    } else {
        match hostport.rsplit_once(':') {
            Some((h, p)) => (h, Some(p)),
            None => (hostport, None),
        }
    };
    if host.is_empty() {
        return Err(bad("empty host"));
    }
    if host.chars().any(|c| c.is_whitespace() || c.is_control() || matches!(c, '<' | '>' | '"' | '\\' | '^' | '`' | '{' | '|' | '}')) {
        return Err(bad("invalid host character"));
    }
    let port = match port {
        None | Some("") => None,
        Some(p) => {
            let n: u16 = p.parse().map_err(|_| bad("invalid port"))?;
            (Some(n) != default_port(&scheme)).then_some(n)
        }
    };

    let mut out = String::with_capacity(trimmed.len());
    out.push_str(&scheme);
    out.push_str("://");
    if let Some(u) = userinfo {
        out.push_str(u);
        out.push('@');
    }
    out.push_str(&host.to_lowercase());
    if let Some(p) = port {
        out.push(':');
        out.push_str(&p.to_string());
    }
    out.push_str(path);
    if let Some(q) = query.filter(|q| !q.is_empty()) {
        out.push('?');
        out.push_str(q);
    }
    Ok(out)
}

/// Stable 64-bit fingerprint (leading bytes of SHA-256).
pub fn fingerprint(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Default number of fingerprints the candidate set reserves up front.
pub const DEFAULT_DEDUP_CAPACITY: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    New,
    DuplicateUrl,
    DuplicateContent,
}

/// The deduplicated candidate pool: fingerprints of admitted canonical URLs
/// (and, optionally, of admitted payloads).
///
/// The table is reserved once at `capacity`, so memory stays flat until more
/// than `capacity` distinct URLs have been admitted.
#[derive(Debug, Clone)]
pub struct CandidateUrlSet {
    urls: HashSet<u64>,
    contents: Option<HashSet<u64>>,
}

impl CandidateUrlSet {
    pub fn new(capacity: usize, content_dedup: bool) -> Self {
        Self {
            urls: HashSet::with_capacity(capacity),
            contents: content_dedup.then(|| HashSet::with_capacity(capacity)),
        }
    }

    pub fn len(&self) -> usize {
        self.urls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.urls.is_empty()
    }

    pub fn contains_url(&self, canonical: &str) -> bool {
        self.urls.contains(&fingerprint(canonical.as_bytes()))
    }

    /// Admits a record unless its canonical URL (or payload, when content
    /// dedup is on) was admitted before. Invalid URLs are never admitted.
    pub fn admit(&mut self, record: &WarcRecord) -> Result<Admission, UrlError> {
        let canonical = canonicalize_url(&record.target_url)?;
        let url_key = fingerprint(canonical.as_bytes());
        if self.urls.contains(&url_key) {
            return Ok(Admission::DuplicateUrl);
        }
        if let Some(contents) = &mut self.contents {
            if !contents.insert(fingerprint(&record.payload)) {
                return Ok(Admission::DuplicateContent);
            }
        }
        self.urls.insert(url_key);
        Ok(Admission::New)
    }

    /// Writes the admitted fingerprints, sorted, as big-endian u64 pairs
    /// tagged `U` (url) or `C` (content).
    pub fn write_to(&self, path: &Path, only: Option<&CandidateUrlSet>) -> io::Result<()> {
        let mut urls: Vec<u64> = match only {
            Some(prev) => self.urls.difference(&prev.urls).copied().collect(),
            None => self.urls.iter().copied().collect(),
        };
        urls.sort_unstable();
        let mut contents: Vec<u64> = match (&self.contents, only.and_then(|p| p.contents.as_ref())) {
            (Some(c), Some(prev)) => c.difference(prev).copied().collect(),
            (Some(c), None) => c.iter().copied().collect(),
            (None, _) => Vec::new(),
        };
        contents.sort_unstable();
        let mut out = Vec::with_capacity(9 * (urls.len() + contents.len()));
        for (tag, keys) in [(b'U', &urls), (b'C', &contents)] {
            for key in keys {
                out.push(tag);
                out.extend_from_slice(&key.to_be_bytes());
            }
        }
        crate::io_util::write_atomic(path, &out)
    }

    /// Adds fingerprints previously written by [`CandidateUrlSet::write_to`].
    pub fn extend_from_file(&mut self, path: &Path) -> io::Result<()> {
        let data = fs::read(path)?;
        if data.len() % 9 != 0 {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "truncated fingerprint file"));
        }
        for entry in data.chunks_exact(9) {
            let key = u64::from_be_bytes(entry[1..].try_into().expect("8 bytes"));
            match (entry[0], &mut self.contents) {
                (b'U', _) => {
                    self.urls.insert(key);
                }
                (b'C', Some(contents)) => {
                    contents.insert(key);
                }
                (b'C', None) => {}
                _ => return Err(io::Error::new(io::ErrorKind::InvalidData, "bad fingerprint tag")),
            }
        }
        Ok(())
    }
}

/// First-wins deduplication by canonical URL. Records whose URL cannot be
/// canonicalized are dropped.
pub fn dedup_records<I>(records: I) -> impl Iterator<Item = WarcRecord>
where
    I: IntoIterator<Item = WarcRecord>,
{
    let mut seen = CandidateUrlSet::new(0, false);
    records
        .into_iter()
        .filter(move |r| matches!(seen.admit(r), Ok(Admission::New)))
}

/// Minimal WARC/1.1 writer. Each record can be its own gzip member.
pub struct WarcWriter<W: Write> {
    out: W,
    gzip: bool,
    counter: u64,
}

impl<W: Write> WarcWriter<W> {
    pub fn new(out: W, gzip: bool) -> Self {
        Self {
            out,
            gzip,
            counter: 0,
        }
    }

    /// Writes an HTTP response record wrapping `body`.
    pub fn write_response(
        &mut self,
        url: &str,
        date: DateTime<Utc>,
        status: u16,
        content_type: &str,
        body: &[u8],
    ) -> io::Result<()> {
        let mut block = format!(
            "HTTP/1.1 {status} {}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\n\r\n",
            reason_phrase(status),
            body.len()
        )
        .into_bytes();
        block.extend_from_slice(body);
        self.write_record("response", url, date, "application/http; msgtype=response", &block)
    }

    /// Writes a record with an arbitrary type and block.
    pub fn write_record(
        &mut self,
        warc_type: &str,
        url: &str,
        date: DateTime<Utc>,
        content_type: &str,
        block: &[u8],
    ) -> io::Result<()> {
        self.counter += 1;
        let header = format!(
            "WARC/1.1\r\nWARC-Type: {warc_type}\r\nWARC-Record-ID: <urn:uuid:00000000-0000-0000-0000-{:012x}>\r\nWARC-Date: {}\r\nWARC-Target-URI: {url}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\n\r\n",
            self.counter,
            date.to_rfc3339_opts(SecondsFormat::Secs, true),
            block.len()
        );
        let mut record = header.into_bytes();
        record.extend_from_slice(block);
        record.extend_from_slice(b"\r\n\r\n");
        self.write_raw(&record)
    }

    /// Writes bytes verbatim (as one gzip member in gzip mode).
    pub fn write_raw(&mut self, bytes: &[u8]) -> io::Result<()> {
        if self.gzip {
            let mut enc = GzEncoder::new(&mut self.out, Compression::fast());
            enc.write_all(bytes)?;
            enc.finish()?;
            Ok(())
        } else {
            self.out.write_all(bytes)
        }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

fn reason_phrase(status: u16) -> &'static str {
    match status {
        200 => "OK",
        301 => "Moved Permanently",
        302 => "Found",
        404 => "Not Found",
        500 => "Internal Server Error",
        _ => "Status",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn date() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2019, 5, 4, 10, 0, 0).unwrap()
    }

    fn record(url: &str) -> WarcRecord {
        WarcRecord {
            target_url: url.into(),
            capture_time: date(),
            http_status: 200,
            content_type: "text/html".into(),
            payload: url.as_bytes().to_vec(),
            truncated: false,
        }
    }

    #[test]
    fn canonicalization_rules() {
        assert_eq!(canonicalize_url("HTTP://Example.com:80/a#frag").unwrap(), "http://example.com/a");
        assert_eq!(
            canonicalize_url("https://hindi.news18.com/news/x?id=1").unwrap(),
            "https://hindi.news18.com/news/x?id=1"
        );
        assert_eq!(canonicalize_url("https://a.com:443/x?").unwrap(), "https://a.com/x");
        assert_eq!(canonicalize_url("https://a.com:8443/X/Y?").unwrap(), "https://a.com:8443/X/Y");
        assert_eq!(canonicalize_url("http://u:p@[::1]:80/p").unwrap(), "http://u:p@[::1]/p");
        assert_eq!(canonicalize_url("http://a.com").unwrap(), "http://a.com");
    }

    #[test]
    fn canonicalization_errors_name_the_input() {
        for bad in ["not a url", "mailto:x@y", "http:///path", "http://a.com:99999/", "://x"] {
            let err = canonicalize_url(bad).unwrap_err();
            assert!(err.to_string().contains(bad), "{err}");
        }
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let out: Vec<_> = dedup_records(vec![
            record("http://a.com/x"),
            record("HTTP://A.com:80/x#top"),
            record("http://b.com/"),
        ])
        .map(|r| r.target_url)
        .collect();
        assert_eq!(out, vec!["http://a.com/x", "http://b.com/"]);
    }

    #[test]
    fn content_dedup_is_optional() {
        let mut a = record("http://a.com/1");
        a.payload = b"same".to_vec();
        let mut b = record("http://a.com/2");
        b.payload = b"same".to_vec();
        let mut plain = CandidateUrlSet::new(4, false);
        assert_eq!(plain.admit(&a).unwrap(), Admission::New);
        assert_eq!(plain.admit(&b).unwrap(), Admission::New);
        let mut by_content = CandidateUrlSet::new(4, true);
        assert_eq!(by_content.admit(&a).unwrap(), Admission::New);
        assert_eq!(by_content.admit(&b).unwrap(), Admission::DuplicateContent);
    }

    #[test]
    fn fingerprint_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seen.bin");
        let mut set = CandidateUrlSet::new(4, true);
        set.admit(&record("http://a.com/1")).unwrap();
        set.write_to(&path, None).unwrap();
        let mut restored = CandidateUrlSet::new(4, true);
        restored.extend_from_file(&path).unwrap();
        assert_eq!(restored.admit(&record("http://a.com/1")).unwrap(), Admission::DuplicateUrl);
    }

    #[test]
    fn empty_stream_yields_nothing() {
        let mut reader = WarcReader::new(&b""[..]);
        assert!(reader.next().is_none());
        assert_eq!(reader.stats(), ReaderStats::default());
    }

    #[test]
    fn non_warc_stream_is_fatal() {
        let mut reader = WarcReader::new(&b"<html>hello</html>\n"[..]);
        assert!(matches!(reader.next(), Some(Err(WarcError::NotWarc(_)))));
        assert!(reader.next().is_none());
    }

    #[test]
    fn dechunks_http_bodies() {
        assert_eq!(dechunk(b"3\r\nabc\r\n2;x=y\r\nde\r\n0\r\n\r\n").unwrap(), b"abcde");
    }

    #[test]
    fn reads_charset_parameter() {
        assert_eq!(charset_param("text/html; charset=\"windows-1252\""), Some("windows-1252"));
        assert_eq!(charset_param("text/html"), None);
    }
}
