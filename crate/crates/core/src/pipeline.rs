//! Batched, resumable execution of the curation stages.
//!
//! Each batch (a group of input shards) keeps its intermediate files and a
//! manifest under `<work_dir>/<batch_id>/`. Final outputs go to
//! `<out_dir>/il/<batch_id>.jsonl`, `<out_dir>/cap/<batch_id>.jsonl`,
//! `<out_dir>/stats.json` and `<out_dir>/rejects.jsonl`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::assemble::{linearize, AssembleError, RecordMeta};
use crate::caption::{extract_pairs, parse_pair, serialize_pair, PairDedup};
use crate::config::PipelineConfig;
use crate::document::{parse_document, serialize_document, InterleavedDocument};
use crate::dom::{parse_html, prune};
use crate::fetch::{fetch_batch, revalidate, tasks_for, FetchOutcome, FetchResult, FetchTask, ImageMeta};
use crate::filter::{filter_document, SegmentDrop, Stage};
use crate::io_util::{write_atomic, AtomicFile};
use crate::lid::{LanguageClassifier, ScriptFrequencyClassifier};
use crate::stats::{
    cap_table_csv, language_table_csv, merge, stats_json, CorpusStats, DomainCategories, StatsAggregator,
    WhitespaceTokenizer,
};
use crate::warc::{Admission, CandidateUrlSet, WarcReader, WarcWriter};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("invalid input pattern `{0}`")]
    Pattern(String),
    #[error("{path} was produced with a different configuration; use a fresh work directory")]
    ConfigChanged { path: PathBuf },
    #[error("corrupt intermediate file {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Per-batch stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineStage {
    /// Archive iteration, HTML response selection, URL dedup.
    Ingest,
    /// Parsing, pruning, assembly and language routing.
    Refine,
    Filter,
    Fetch,
    Revalidate,
    Cap,
    Stats,
}

impl PipelineStage {
    pub const ALL: [PipelineStage; 7] = [
        PipelineStage::Ingest,
        PipelineStage::Refine,
        PipelineStage::Filter,
        PipelineStage::Fetch,
        PipelineStage::Revalidate,
        PipelineStage::Cap,
        PipelineStage::Stats,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PipelineStage::Ingest => "ingest",
            PipelineStage::Refine => "refine",
            PipelineStage::Filter => "filter",
            PipelineStage::Fetch => "fetch",
            PipelineStage::Revalidate => "revalidate",
            PipelineStage::Cap => "cap",
            PipelineStage::Stats => "stats",
        }
    }
}

/// Resumable state of one batch. Stage markers only ever get added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchManifest {
    pub batch_id: String,
    pub shards: Vec<String>,
    pub config_fingerprint: String,
    pub completed: Vec<PipelineStage>,
    pub failed: Option<String>,
    /// Archive records read, including skipped and corrupt ones.
    pub records_in: u64,
    /// Non-HTML, non-2xx, non-response and malformed records.
    pub skipped: u64,
    pub docs_out: u64,
    /// Whole records or documents rejected, by stage then reason.
    pub rejects: BTreeMap<String, BTreeMap<String, u64>>,
    /// Segments removed from documents that may still be accepted.
    pub segment_drops: BTreeMap<String, BTreeMap<String, u64>>,
}

impl BatchManifest {
    fn new(batch_id: String, shards: Vec<String>, config_fingerprint: String) -> Self {
        Self {
            batch_id,
            shards,
            config_fingerprint,
            completed: Vec::new(),
            failed: None,
            records_in: 0,
            skipped: 0,
            docs_out: 0,
            rejects: BTreeMap::new(),
            segment_drops: BTreeMap::new(),
        }
    }

    pub fn is_complete(&self, stage: PipelineStage) -> bool {
        self.completed.contains(&stage)
    }

    fn mark(&mut self, stage: PipelineStage) {
        if !self.is_complete(stage) {
            self.completed.push(stage);
            self.completed.sort();
        }
    }

    pub fn rejects_total(&self) -> u64 {
        self.rejects.values().flat_map(BTreeMap::values).sum()
    }

    /// `records_in = docs_out + rejects + skipped`, once the batch reached
    /// the document output.
    pub fn reconciles(&self) -> bool {
        self.records_in == self.docs_out + self.rejects_total() + self.skipped
    }
}

/// One line of the reject ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub doc_id: Option<String>,
    pub url: String,
    pub stage: String,
    pub reason: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub segment: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub batches: Vec<BatchManifest>,
    pub stats: Option<CorpusStats>,
}

impl RunSummary {
    /// 0 when every batch succeeded, 1 when any batch failed.
    pub fn exit_code(&self) -> i32 {
        if self.batches.iter().any(|b| b.failed.is_some()) {
            1
        } else {
            0
        }
    }
}

/// Sorted, de-duplicated shard paths matching the configured patterns.
pub fn list_shards(config: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let mut shards = Vec::new();
    for pattern in &config.inputs {
        let paths = glob::glob(pattern).map_err(|_| PipelineError::Pattern(pattern.clone()))?;
        shards.extend(paths.filter_map(Result::ok).filter(|p| p.is_file()));
    }
    shards.sort();
    shards.dedup();
    Ok(shards)
}

fn config_fingerprint(config: &PipelineConfig) -> String {
    Sha256::digest(config.fingerprint_source.as_bytes())[..16]
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

struct Paths {
    dir: PathBuf,
    il: PathBuf,
    cap: PathBuf,
}

impl Paths {
    fn new(config: &PipelineConfig, batch_id: &str) -> Self {
        Self {
            dir: config.work_dir.join(batch_id),
            il: config.out_dir.join("il").join(format!("{batch_id}.jsonl")),
            cap: config.out_dir.join("cap").join(format!("{batch_id}.jsonl")),
        }
    }

    fn manifest(&self) -> PathBuf {
        self.dir.join("manifest.json")
    }

    fn file(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn rejects(&self, stage: PipelineStage) -> PathBuf {
        self.dir.join(format!("rejects.{}.jsonl", stage.name()))
    }

    /// Files a completed stage must have left behind.
    fn outputs(&self, stage: PipelineStage) -> Vec<PathBuf> {
        match stage {
            PipelineStage::Ingest => vec![
                self.file("ingested.warc.gz"),
                self.file("seen.bin"),
                self.rejects(stage),
            ],
            PipelineStage::Refine => vec![self.file("assembled.jsonl"), self.rejects(stage)],
            PipelineStage::Filter => vec![self.file("filtered.jsonl"), self.rejects(stage)],
            PipelineStage::Fetch => vec![self.file("fetch.jsonl")],
            PipelineStage::Revalidate => vec![self.il.clone(), self.rejects(stage)],
            PipelineStage::Cap => vec![self.cap.clone()],
            PipelineStage::Stats => vec![self.file("stats.json")],
        }
    }
}

/// JSONL writer that appears at its path only on commit.
struct Jsonl {
    path: PathBuf,
    out: AtomicFile,
}

impl Jsonl {
    fn create(path: PathBuf) -> Result<Self, PipelineError> {
        let out = AtomicFile::create(&path).map_err(io_err(&path))?;
        Ok(Self { path, out })
    }

    fn line(&mut self, line: &str) -> Result<(), PipelineError> {
        self.out
            .write_all(line.as_bytes())
            .and_then(|_| self.out.write_all(b"\n"))
            .map_err(io_err(&self.path))
    }

    fn json<T: Serialize>(&mut self, value: &T) -> Result<(), PipelineError> {
        self.line(&serde_json::to_string(value).expect("value serializes"))
    }

    fn commit(self) -> Result<(), PipelineError> {
        self.out.commit().map_err(io_err(&self.path))
    }
}

fn read_lines(path: &Path) -> Result<impl Iterator<Item = Result<String, PipelineError>> + '_, PipelineError> {
    let file = File::open(path).map_err(io_err(path))?;
    Ok(BufReader::new(file).lines().map(move |l| l.map_err(io_err(path))))
}

fn read_documents(path: &Path) -> Result<impl Iterator<Item = Result<InterleavedDocument, PipelineError>> + '_, PipelineError> {
    Ok(read_lines(path)?.map(move |line| {
        parse_document(&line?).map_err(|e| PipelineError::Corrupt {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }))
}

/// Counts by reason for one stage of a ledger being written.
#[derive(Default)]
struct Tally {
    rejects: BTreeMap<String, BTreeMap<String, u64>>,
    drops: BTreeMap<String, BTreeMap<String, u64>>,
}

impl Tally {
    fn reject(&mut self, stage: &str, reason: &str) {
        *self
            .rejects
            .entry(stage.to_string())
            .or_default()
            .entry(reason.to_string())
            .or_default() += 1;
    }

    fn drop(&mut self, stage: &str, reason: &str) {
        *self
            .drops
            .entry(stage.to_string())
            .or_default()
            .entry(reason.to_string())
            .or_default() += 1;
    }

    /// Replaces the manifest's counts for every ledger stage this pipeline
    /// stage owns.
    fn apply(self, manifest: &mut BatchManifest, owned: &[&str]) {
        for stage in owned {
            manifest.rejects.remove(*stage);
            manifest.segment_drops.remove(*stage);
        }
        manifest.rejects.extend(self.rejects);
        manifest.segment_drops.extend(self.drops);
    }
}

struct Ledger {
    out: Jsonl,
    tally: Tally,
}

impl Ledger {
    fn create(path: PathBuf) -> Result<Self, PipelineError> {
        Ok(Self {
            out: Jsonl::create(path)?,
            tally: Tally::default(),
        })
    }

    fn reject(&mut self, doc_id: Option<&str>, url: &str, stage: &str, reason: &str) -> Result<(), PipelineError> {
        self.tally.reject(stage, reason);
        self.out.json(&RejectRecord {
            doc_id: doc_id.map(str::to_string),
            url: url.to_string(),
            stage: stage.to_string(),
            reason: reason.to_string(),
            segment: None,
        })
    }

    fn drop_segment(&mut self, doc: &InterleavedDocument, segment: usize, stage: &str, reason: &str) -> Result<(), PipelineError> {
        self.tally.drop(stage, reason);
        self.out.json(&RejectRecord {
            doc_id: Some(doc.doc_id.clone()),
            url: doc.source_url.clone(),
            stage: stage.to_string(),
            reason: reason.to_string(),
            segment: Some(segment),
        })
    }

    fn drops(&mut self, doc: &InterleavedDocument, drops: &[SegmentDrop]) -> Result<(), PipelineError> {
        for d in drops {
            self.drop_segment(doc, d.segment, &d.stage.to_string(), &d.reason.to_string())?;
        }
        Ok(())
    }

    fn commit(self, manifest: &mut BatchManifest, owned: &[&str]) -> Result<(), PipelineError> {
        self.out.commit()?;
        self.tally.apply(manifest, owned);
        Ok(())
    }
}

/// Everything a batch needs besides its manifest.
struct Context<'a> {
    config: &'a PipelineConfig,
    classifier: Box<dyn LanguageClassifier>,
    seen: CandidateUrlSet,
    runtime: Option<tokio::runtime::Runtime>,
}

impl Context<'_> {
    fn runtime(&mut self) -> &tokio::runtime::Runtime {
        self.runtime.get_or_insert_with(|| {
            tokio::runtime::Builder::new_multi_thread()
                .enable_all()
                .build()
                .expect("tokio runtime builds")
        })
    }
}

/// Why ingest could not read a shard; the batch is marked failed.
struct ShardFailure(String);

fn stage_ingest(ctx: &mut Context, paths: &Paths, m: &mut BatchManifest) -> Result<Result<(), ShardFailure>, PipelineError> {
    let before = ctx.seen.clone();
    let out_path = paths.file("ingested.warc.gz");
    let out = AtomicFile::create(&out_path).map_err(io_err(&out_path))?;
    let mut writer = WarcWriter::new(out, true);
    let mut ledger = Ledger::create(paths.rejects(PipelineStage::Ingest))?;
    let (mut records_in, mut skipped) = (0u64, 0u64);
    for shard in &m.shards {
        let file = match File::open(shard) {
            Ok(f) => f,
            Err(e) => {
                ctx.seen = before;
                return Ok(Err(ShardFailure(format!("{shard}: {e}"))));
            }
        };
        let mut reader = WarcReader::new(BufReader::new(file));
        for item in reader.by_ref() {
            let record = match item {
                Ok(r) => r,
                Err(e) => {
                    ctx.seen = before;
                    return Ok(Err(ShardFailure(format!("{shard}: {e}"))));
                }
            };
            match ctx.seen.admit(&record) {
                Ok(Admission::New) => writer
                    .write_response(
                        &record.target_url,
                        record.capture_time,
                        record.http_status,
                        &record.content_type,
                        &record.payload,
                    )
                    .map_err(io_err(&out_path))?,
                Ok(Admission::DuplicateUrl) => ledger.reject(None, &record.target_url, "ingest", "DuplicateUrl")?,
                Ok(Admission::DuplicateContent) => {
                    ledger.reject(None, &record.target_url, "ingest", "DuplicateContent")?
                }
                Err(_) => ledger.reject(None, &record.target_url, "ingest", "InvalidUrl")?,
            }
        }
        let s = reader.stats();
        records_in += s.records_seen + s.corrupt_members;
        skipped += s.non_html_skipped + s.malformed_skipped + s.corrupt_members;
    }
    writer.into_inner().commit().map_err(io_err(&out_path))?;
    let seen_path = paths.file("seen.bin");
    ctx.seen.write_to(&seen_path, Some(&before)).map_err(io_err(&seen_path))?;
    ledger.commit(m, &["ingest"])?;
    m.records_in = records_in;
    m.skipped = skipped;
    Ok(Ok(()))
}

fn stage_refine(ctx: &mut Context, paths: &Paths, m: &mut BatchManifest) -> Result<(), PipelineError> {
    let in_path = paths.file("ingested.warc.gz");
    let file = File::open(&in_path).map_err(io_err(&in_path))?;
    let mut out = Jsonl::create(paths.file("assembled.jsonl"))?;
    let mut ledger = Ledger::create(paths.rejects(PipelineStage::Refine))?;
    let config = ctx.config;
    for item in WarcReader::new(BufReader::new(file)) {
        let record = item.map_err(|e| PipelineError::Corrupt {
            path: in_path.clone(),
            message: e.to_string(),
        })?;
        let url = record.target_url.as_str();
        let tree = match parse_html(&record.payload, record.charset()) {
            Ok(t) => t,
            Err(_) => {
                ledger.reject(None, url, "refine", "EmptyDocument")?;
                continue;
            }
        };
        let pruned = prune(&tree, &config.rules);
        let meta = RecordMeta {
            source_url: url.to_string(),
            crawl_date: record.capture_time.date_naive(),
        };
        let mut doc = match linearize(&pruned, url, &meta) {
            Ok(d) => d,
            Err(AssembleError::EmptyAfterAssembly) => {
                ledger.reject(None, url, "assemble", "EmptyAfterAssembly")?;
                continue;
            }
            Err(AssembleError::InvalidUrl(_)) => {
                ledger.reject(None, url, "assemble", "InvalidUrl")?;
                continue;
            }
        };
        let text = doc.joined_text();
        let verdict = match ctx.classifier.classify(&text) {
            Ok(v) => v,
            Err(_) => {
                ledger.reject(Some(&doc.doc_id), url, "lid", "NoText")?;
                continue;
            }
        };
        if !config.target_languages.contains(&verdict.language) {
            ledger.reject(Some(&doc.doc_id), url, "lid", "LanguageNotTargeted")?;
            continue;
        }
        if verdict.confidence < config.lid_threshold {
            ledger.reject(Some(&doc.doc_id), url, "lid", "LowLanguageConfidence")?;
            continue;
        }
        doc.language = verdict;
        out.line(&serialize_document(&doc))?;
    }
    out.commit()?;
    ledger.commit(m, &["refine", "assemble", "lid"])
}

fn stage_filter(ctx: &Context, paths: &Paths, m: &mut BatchManifest) -> Result<(), PipelineError> {
    let mut out = Jsonl::create(paths.file("filtered.jsonl"))?;
    let mut ledger = Ledger::create(paths.rejects(PipelineStage::Filter))?;
    let in_path = paths.file("assembled.jsonl");
    for doc in read_documents(&in_path)? {
        let doc = doc?;
        let outcome = filter_document(&doc, &ctx.config.thresholds, &ctx.config.blocklists);
        ledger.drops(&doc, &outcome.dropped)?;
        match outcome.result {
            Ok(kept) => out.line(&serialize_document(&kept))?,
            Err(verdict) => ledger.reject(
                Some(&doc.doc_id),
                &doc.source_url,
                &Stage::Document.to_string(),
                &verdict.reason.to_string(),
            )?,
        }
    }
    out.commit()?;
    ledger.commit(m, &["image", "paragraph", "document"])
}

#[derive(Debug, Serialize, Deserialize)]
struct FetchLine {
    doc_id: String,
    segment: usize,
    url: String,
    outcome: FetchOutcome,
    meta: Option<ImageMeta>,
}

fn stage_fetch(ctx: &mut Context, paths: &Paths) -> Result<(), PipelineError> {
    let in_path = paths.file("filtered.jsonl");
    let mut out = Jsonl::create(paths.file("fetch.jsonl"))?;
    let chunk = ctx.config.batch_size;
    let fetch_config = ctx.config.fetch.clone();
    let mut pending: Vec<FetchTask> = Vec::new();
    let flush = |ctx: &mut Context, pending: &mut Vec<FetchTask>, out: &mut Jsonl| -> Result<(), PipelineError> {
        if pending.is_empty() {
            return Ok(());
        }
        let tasks = std::mem::take(pending);
        let report = ctx.runtime().block_on(fetch_batch(tasks, &fetch_config));
        for r in report.results {
            out.json(&FetchLine {
                doc_id: r.task.doc_id,
                segment: r.task.segment_index,
                url: r.task.src_url,
                outcome: r.outcome,
                meta: r.meta,
            })?;
        }
        Ok(())
    };
    for doc in read_documents(&in_path)? {
        pending.extend(tasks_for(&doc?));
        if pending.len() >= chunk {
            flush(ctx, &mut pending, &mut out)?;
        }
    }
    flush(ctx, &mut pending, &mut out)?;
    out.commit()
}

fn stage_revalidate(ctx: &Context, paths: &Paths, m: &mut BatchManifest) -> Result<(), PipelineError> {
    let fetch_path = paths.file("fetch.jsonl");
    let mut fetched = read_lines(&fetch_path)?
        .map(|line| {
            serde_json::from_str::<FetchLine>(&line?).map_err(|e| PipelineError::Corrupt {
                path: fetch_path.clone(),
                message: e.to_string(),
            })
        })
        .peekable();
    let mut out = Jsonl::create(paths.il.clone())?;
    let mut ledger = Ledger::create(paths.rejects(PipelineStage::Revalidate))?;
    let mut docs_out = 0;
    for doc in read_documents(&paths.file("filtered.jsonl"))? {
        let doc = doc?;
        let mut results = Vec::new();
        while let Some(Ok(line)) = fetched.peek() {
            if line.doc_id != doc.doc_id {
                break;
            }
            let line = fetched.next().expect("peeked")?;
            results.push(FetchResult {
                task: FetchTask {
                    src_url: line.url,
                    doc_id: line.doc_id,
                    segment_index: line.segment,
                },
                outcome: line.outcome,
                bytes: None,
                meta: line.meta,
            });
        }
        if let Some(Err(_)) = fetched.peek() {
            return Err(fetched.next().expect("peeked").expect_err("error"));
        }
        let outcome = revalidate(&doc, &results, &ctx.config.thresholds, &ctx.config.blocklists);
        for (segment, why) in &outcome.unfetched {
            ledger.drop_segment(&doc, *segment, "fetch", &format!("{why:?}"))?;
        }
        ledger.drops(&doc, &outcome.dropped)?;
        match outcome.result {
            Ok(kept) => {
                out.line(&serialize_document(&kept))?;
                docs_out += 1;
            }
            Err(verdict) => ledger.reject(Some(&doc.doc_id), &doc.source_url, "revalidate", &verdict.reason.to_string())?,
        }
    }
    out.commit()?;
    ledger.commit(m, &["fetch", "revalidate"])?;
    m.docs_out = docs_out;
    Ok(())
}

fn stage_cap(ctx: &Context, paths: &Paths) -> Result<(), PipelineError> {
    let mut out = Jsonl::create(paths.cap.clone())?;
    let mut dedup = PairDedup::default();
    for doc in read_documents(&paths.il)? {
        for pair in extract_pairs(&doc?, &ctx.config.thresholds, ctx.classifier.as_ref()) {
            if !ctx.config.cap_dedup || dedup.admit(&pair) {
                out.line(&serialize_pair(&pair))?;
            }
        }
    }
    out.commit()
}

fn stage_stats(paths: &Paths) -> Result<(), PipelineError> {
    let tokenizer = WhitespaceTokenizer;
    let mut agg = StatsAggregator::new(&tokenizer);
    for doc in read_documents(&paths.il)? {
        agg.add_document(&doc?);
    }
    for line in read_lines(&paths.cap)? {
        let pair = parse_pair(&line?).map_err(|e| PipelineError::Corrupt {
            path: paths.cap.clone(),
            message: e.to_string(),
        })?;
        agg.add_pair(&pair);
    }
    let stats = agg.finish();
    let path = paths.file("stats.json");
    write_atomic(&path, serde_json::to_string(&stats).expect("stats serialize").as_bytes()).map_err(io_err(&path))
}

fn load_manifest(path: &Path) -> Result<Option<BatchManifest>, PipelineError> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes)
            .map(Some)
            .map_err(|e| PipelineError::Corrupt {
                path: path.to_path_buf(),
                message: e.to_string(),
            }),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(io_err(path)(e)),
    }
}

fn save_manifest(path: &Path, m: &BatchManifest) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(m).expect("manifest serializes");
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(io_err(path))
}

fn run_batch(
    ctx: &mut Context,
    batch_id: String,
    shards: Vec<String>,
    until: PipelineStage,
) -> Result<BatchManifest, PipelineError> {
    let paths = Paths::new(ctx.config, &batch_id);
    let fingerprint = config_fingerprint(ctx.config);
    let manifest_path = paths.manifest();
    let mut m = match load_manifest(&manifest_path)? {
        Some(m) if m.config_fingerprint != fingerprint || m.shards != shards => {
            return Err(PipelineError::ConfigChanged { path: manifest_path });
        }
        Some(m) => m,
        None => BatchManifest::new(batch_id, shards, fingerprint),
    };
    m.failed = None;
    for stage in PipelineStage::ALL.into_iter().filter(|s| *s <= until) {
        let done = m.is_complete(stage) && paths.outputs(stage).iter().all(|p| p.exists());
        if done {
            if stage == PipelineStage::Ingest {
                let seen = paths.file("seen.bin");
                ctx.seen.extend_from_file(&seen).map_err(io_err(&seen))?;
            }
            continue;
        }
        match stage {
            PipelineStage::Ingest => {
                if let Err(ShardFailure(why)) = stage_ingest(ctx, &paths, &mut m)? {
                    m.failed = Some(why);
                    save_manifest(&manifest_path, &m)?;
                    return Ok(m);
                }
            }
            PipelineStage::Refine => stage_refine(ctx, &paths, &mut m)?,
            PipelineStage::Filter => stage_filter(ctx, &paths, &mut m)?,
            PipelineStage::Fetch => stage_fetch(ctx, &paths)?,
            PipelineStage::Revalidate => stage_revalidate(ctx, &paths, &mut m)?,
            PipelineStage::Cap => stage_cap(ctx, &paths)?,
            PipelineStage::Stats => stage_stats(&paths)?,
        }
        m.mark(stage);
        save_manifest(&manifest_path, &m)?;
    }
    Ok(m)
}

/// Runs every batch through `until`; when `until` is
/// [`PipelineStage::Stats`] also writes the corpus-level outputs.
pub fn run_pipeline(config: &PipelineConfig, until: PipelineStage) -> Result<RunSummary, PipelineError> {
    let classifier: Box<dyn LanguageClassifier> = match &config.script_map {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            Box::new(ScriptFrequencyClassifier::from_mapping(&text).map_err(|e| PipelineError::Corrupt {
                path: path.clone(),
                message: e.to_string(),
            })?)
        }
        None => Box::new(ScriptFrequencyClassifier::default()),
    };
    let mut ctx = Context {
        config,
        classifier,
        seen: CandidateUrlSet::new(config.dedup_capacity, config.content_dedup),
        runtime: None,
    };
    let shards = list_shards(config)?;
    let mut batches = Vec::new();
    for (index, group) in shards.chunks(config.batch_shards).enumerate() {
        let shards = group.iter().map(|p| p.to_string_lossy().into_owned()).collect();
        batches.push(run_batch(&mut ctx, format!("batch-{index:05}"), shards, until)?);
    }
    let stats = if until == PipelineStage::Stats {
        Some(finalize(config, &batches)?)
    } else {
        None
    };
    Ok(RunSummary { batches, stats })
}

/// Merges per-batch stats and ledgers into the corpus-level outputs.
fn finalize(config: &PipelineConfig, batches: &[BatchManifest]) -> Result<CorpusStats, PipelineError> {
    let out = &config.out_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let rejects_path = out.join("rejects.jsonl");
    let mut rejects = AtomicFile::create(&rejects_path).map_err(io_err(&rejects_path))?;
    let mut total = CorpusStats::zero(&config.tokenizer);
    for m in batches {
        let paths = Paths::new(config, &m.batch_id);
        for stage in [
            PipelineStage::Ingest,
            PipelineStage::Refine,
            PipelineStage::Filter,
            PipelineStage::Revalidate,
        ] {
            let path = paths.rejects(stage);
            match File::open(&path) {
                Ok(mut f) => {
                    io::copy(&mut f, &mut rejects).map_err(io_err(&path))?;
                }
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => return Err(io_err(&path)(e)),
            }
        }
        if !m.is_complete(PipelineStage::Stats) {
            continue;
        }
        let path = paths.file("stats.json");
        let bytes = fs::read(&path).map_err(io_err(&path))?;
        let batch: CorpusStats = serde_json::from_slice(&bytes).map_err(|e| PipelineError::Corrupt {
            path: path.clone(),
            message: e.to_string(),
        })?;
        total = merge(&total, &batch).map_err(|e| PipelineError::Corrupt {
            path,
            message: e.to_string(),
        })?;
    }
    rejects.commit().map_err(io_err(&rejects_path))?;
    let categories = DomainCategories::bundled();
    for (name, bytes) in [
        ("stats.json", stats_json(&total, &categories).into_bytes()),
        ("stats_languages.csv", language_table_csv(&total).into_bytes()),
        ("stats_cap.csv", cap_table_csv(&total).into_bytes()),
    ] {
        let path = out.join(name);
        write_atomic(&path, &bytes).map_err(io_err(&path))?;
    }
    fs::create_dir_all(out.join("il")).map_err(io_err(out))?;
    fs::create_dir_all(out.join("cap")).map_err(io_err(out))?;
    Ok(total)
}

/// `key=value` counters for each archive, as printed by `forge warc-stats`.
pub fn warc_stats(paths: &[PathBuf]) -> Result<String, PipelineError> {
    let mut out = String::new();
    for path in paths {
        let file = File::open(path).map_err(io_err(path))?;
        let mut reader = WarcReader::new(BufReader::new(file));
        let mut error = None;
        for item in reader.by_ref() {
            if let Err(e) = item {
                error = Some(e.to_string());
                break;
            }
        }
        let s = reader.stats();
        let _ = writeln!(out, "file={}", path.display());
        let _ = writeln!(out, "records_seen={}", s.records_seen);
        let _ = writeln!(out, "html_responses={}", s.yielded);
        let _ = writeln!(out, "non_html_skipped={}", s.non_html_skipped);
        let _ = writeln!(out, "malformed_skipped={}", s.malformed_skipped);
        let _ = writeln!(out, "corrupt_members={}", s.corrupt_members);
        if let Some(e) = error {
            let _ = writeln!(out, "error={e}");
        }
    }
    Ok(out)
}
