mod common;

use ilforge::pipeline::{run_pipeline, PipelineStage};

#[test]
fn synthetic_archive_flows_through_every_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let config = common::synthetic::config(tmp.path(), 1000);
    let t = std::time::Instant::now();
    let summary = run_pipeline(&config, PipelineStage::Stats).unwrap();
    let m = &summary.batches[0];
    eprintln!("{:?} {m:?}", t.elapsed());
    assert_eq!(m.records_in, 1000);
    assert_eq!(m.rejects.get("ingest").and_then(|r| r.get("DuplicateUrl")), Some(&100));
    assert!(m.reconciles());
    assert_eq!(m.docs_out, 900);
    assert_eq!(summary.stats.unwrap().total_documents(), 900);
}
