//! Runs the document filters and shows what was dropped and why.

use chrono::NaiveDate;
use ilforge::document::{ImageRef, InterleavedDocument, Segment};
use ilforge::filter::{filter_document, Blocklists, Thresholds};
use ilforge::lid::LanguageVerdict;

fn image(src: &str, alt: &str, size: Option<(u32, u32)>) -> Segment {
    Segment::Image(ImageRef {
        src_url: src.into(),
        alt_text: alt.into(),
        filename: src.rsplit('/').next().unwrap().into(),
        figcaption: None,
        width_px: size.map(|s| s.0),
        height_px: size.map(|s| s.1),
        format: None,
    })
}

fn main() {
    let doc = InterleavedDocument {
        doc_id: "demo".into(),
        source_url: "https://samachar.example.in/kheti".into(),
        domain: "samachar.example.in".into(),
        crawl_date: NaiveDate::from_ymd_opt(2024, 3, 9).unwrap(),
        language: LanguageVerdict::new("hi", 0.97),
        segments: vec![
            Segment::Text("किसानों ने इस साल गेहूं की अच्छी फसल की उम्मीद जताई है क्योंकि बारिश समय पर हुई।".into()),
            image("https://samachar.example.in/img/khet.jpg", "खेत में काम करते किसान", Some((800, 600))),
            Segment::Text("और पढ़ें".into()),
            image("https://samachar.example.in/img/banner.jpg", "", Some((1200, 90))),
            Segment::Text("मंडी में गेहूं का भाव पिछले हफ्ते से थोड़ा बढ़ा है और व्यापारी खुश हैं।".into()),
        ],
    };
    let outcome = filter_document(&doc, &Thresholds::default(), &Blocklists::default());
    for drop in &outcome.dropped {
        println!("dropped segment {} at {}: {}", drop.segment, drop.stage, drop.reason);
    }
    match outcome.result {
        Ok(kept) => println!("kept {} segments", kept.segments.len()),
        Err(verdict) => println!("rejected: {}", verdict.reason),
    }
}
