//! Writes a small gzipped archive, then streams it back with URL dedup.

use std::io::Cursor;

use chrono::Utc;
use ilforge::warc::{canonicalize_url, dedup_records, WarcReader, WarcWriter};

fn main() -> std::io::Result<()> {
    let mut writer = WarcWriter::new(Vec::new(), true);
    let now = Utc::now();
    for url in [
        "https://news.example.in/a#comments",
        "https://NEWS.example.in/a",
        "https://news.example.in/b#top",
    ] {
        writer.write_response(url, now, 200, "text/html; charset=utf-8", b"<p>hello</p>")?;
    }
    writer.write_response("https://news.example.in/logo.png", now, 200, "image/png", b"\x89PNG")?;
    let bytes = writer.into_inner();

    let mut reader = WarcReader::new(Cursor::new(bytes));
    let records: Vec<_> = reader.by_ref().filter_map(Result::ok).collect();
    for record in dedup_records(records) {
        println!("{} -> {}", record.target_url, canonicalize_url(&record.target_url).unwrap());
    }
    println!("{:?}", reader.stats());
    Ok(())
}
