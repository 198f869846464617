//! Runs every stage over the bundled golden archive with an offline image
//! cache, then prints the batch counters and the output tree.

use std::path::Path;

use ilforge::config::PipelineConfig;
use ilforge::fetch::{png_header, FetchOutcome, ImageCache};
use ilforge::pipeline::{run_pipeline, PipelineStage};

fn main() {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden");
    let root = tempfile::tempdir().unwrap();
    let cache = ImageCache::new(root.path().join("cache"));
    for line in std::fs::read_to_string(fixtures.join("images.tsv")).unwrap().lines() {
        let Some((url, what)) = line.split_once('\t') else { continue };
        if url.starts_with('#') {
            continue;
        }
        match what.split_once('x') {
            Some((w, h)) => cache.store_bytes(url, &png_header(w.parse().unwrap(), h.parse().unwrap())),
            None => cache.store_failure(url, FetchOutcome::HttpError(what.parse().unwrap())),
        }
        .unwrap();
    }
    let text = format!(
        "out_dir = out\ncache_dir = cache\noffline = true\n[inputs]\n{}\n",
        fixtures.join("golden.warc.gz").display()
    );
    let config = PipelineConfig::from_str_with(&text, root.path(), std::iter::empty()).unwrap();
    let summary = run_pipeline(&config, PipelineStage::Stats).unwrap();
    for m in &summary.batches {
        println!(
            "{} records_in={} skipped={} rejects={} docs_out={} reconciles={}",
            m.batch_id,
            m.records_in,
            m.skipped,
            m.rejects_total(),
            m.docs_out,
            m.reconciles()
        );
    }
    for entry in std::fs::read_dir(&config.out_dir).unwrap() {
        println!("{}", entry.unwrap().path().display());
    }
}
