//! Downloads images with bounded parallelism and reads their dimensions.
//!
//! With URL arguments it fetches them live; without, it replays a cache.

use ilforge::fetch::{fetch_batch_blocking, png_header, FetchConfig, FetchTask, ImageCache};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cache_dir = tempfile::tempdir().unwrap();
    let mut config = FetchConfig {
        cache_dir: Some(cache_dir.path().to_path_buf()),
        ..FetchConfig::default()
    };
    let urls = if args.is_empty() {
        let cache = ImageCache::new(cache_dir.path());
        cache.store_bytes("https://img.example.in/a.png", &png_header(640, 480)).unwrap();
        cache.store_bytes("https://img.example.in/b.png", &png_header(120, 90)).unwrap();
        config.offline = true;
        vec!["https://img.example.in/a.png".into(), "https://img.example.in/b.png".into(), "https://img.example.in/missing.png".into()]
    } else {
        args
    };
    let tasks = urls
        .into_iter()
        .enumerate()
        .map(|(i, src_url)| FetchTask {
            src_url,
            doc_id: "demo".into(),
            segment_index: i,
        })
        .collect();
    let report = fetch_batch_blocking(tasks, &config);
    for r in &report.results {
        println!("{} {:?} {:?}", r.task.src_url, r.outcome, r.meta);
    }
    println!("success_rate={:?}", report.success_rate);
}
