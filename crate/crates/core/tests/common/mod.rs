#![allow(dead_code)]

pub mod gen;
pub mod server;
pub mod sweep;
pub mod synthetic;

use std::fs;
use std::path::{Path, PathBuf};

use ilforge::config::PipelineConfig;
use ilforge::fetch::{png_header, FetchOutcome, ImageCache};
use ilforge::pipeline::RejectRecord;

pub fn fixture(path: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(path)
}

/// Non-comment, non-empty lines split on tabs.
pub fn tsv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect()
}

/// Fills an image cache from `golden/images.tsv`: `WxH` entries become PNG
/// headers of that size, numeric entries recorded HTTP failures.
pub fn build_golden_cache(dir: &Path) {
    let cache = ImageCache::new(dir);
    for row in tsv(&fixture("golden/images.tsv")) {
        let (url, what) = (&row[0], &row[1]);
        match what.split_once('x') {
            Some((w, h)) => cache
                .store_bytes(url, &png_header(w.parse().unwrap(), h.parse().unwrap()))
                .unwrap(),
            None => cache.store_failure(url, FetchOutcome::HttpError(what.parse().unwrap())).unwrap(),
        }
    }
}

/// Offline config over the golden archive, writing under `root`.
pub fn golden_config(root: &Path) -> PipelineConfig {
    let cache = root.join("cache");
    if !cache.exists() {
        build_golden_cache(&cache);
    }
    let text = format!(
        "out_dir = {}\ncache_dir = {}\noffline = true\n[inputs]\n{}\n",
        root.join("out").display(),
        cache.display(),
        fixture("golden/golden.warc.gz").display()
    );
    PipelineConfig::from_str_with(&text, root, std::iter::empty()).unwrap()
}

pub fn read_rejects(out: &Path) -> Vec<RejectRecord> {
    fs::read_to_string(out.join("rejects.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Ledger lines projected to `stage reason url segment`, as in the
/// hand-annotated expectation file.
pub fn project_rejects(rejects: &[RejectRecord]) -> Vec<Vec<String>> {
    rejects
        .iter()
        .map(|r| {
            vec![
                r.stage.clone(),
                r.reason.clone(),
                r.url.clone(),
                r.segment.map_or("-".to_string(), |s| s.to_string()),
            ]
        })
        .collect()
}

/// Every file under `dir`, relative path → bytes, sorted.
pub fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Pruning measurements over the boilerplate-heavy pages: per page, then the
/// corpus as a whole (bytes and essential text summed).
pub fn reduction_corpus() -> (Vec<(String, ilforge::dom::ReductionStats)>, ilforge::dom::ReductionStats) {
    use ilforge::dom::{parse_html, prune, reduction_stats, PageMeasure, PruneRules};
    let rules = PruneRules::default();
    let mut pages: Vec<PathBuf> = fs::read_dir(fixture("reduction"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "html"))
        .collect();
    pages.sort();
    let mut per_page = Vec::new();
    let (mut before_all, mut after_all) = (
        PageMeasure { bytes: 0, essential_text: String::new() },
        PageMeasure { bytes: 0, essential_text: String::new() },
    );
    for page in pages {
        let tree = parse_html(&fs::read(&page).unwrap(), None).unwrap();
        let before = PageMeasure::of(&tree, &rules);
        let after = PageMeasure::of(&prune(&tree, &rules), &rules);
        per_page.push((
            page.file_name().unwrap().to_string_lossy().into_owned(),
            reduction_stats(&before, &after).unwrap(),
        ));
        before_all.bytes += before.bytes;
        before_all.essential_text.push_str(&before.essential_text);
        after_all.bytes += after.bytes;
        after_all.essential_text.push_str(&after.essential_text);
    }
    (per_page, reduction_stats(&before_all, &after_all).unwrap())
}
