//! Extracts alt-text caption pairs and buckets them by resolution.

use chrono::NaiveDate;
use ilforge::caption::{extract_pairs, serialize_pair, PairDedup};
use ilforge::document::{ImageRef, InterleavedDocument, Segment};
use ilforge::filter::Thresholds;
use ilforge::lid::{LanguageVerdict, ScriptFrequencyClassifier};

fn image(src: &str, alt: &str, w: u32, h: u32) -> Segment {
    Segment::Image(ImageRef {
        src_url: src.into(),
        alt_text: alt.into(),
        filename: src.rsplit('/').next().unwrap().into(),
        figcaption: None,
        width_px: Some(w),
        height_px: Some(h),
        format: None,
    })
}

fn main() {
    let doc = InterleavedDocument {
        doc_id: "demo".into(),
        source_url: "https://seithi.example.in/kovil".into(),
        domain: "seithi.example.in".into(),
        crawl_date: NaiveDate::from_ymd_opt(2024, 4, 14).unwrap(),
        language: LanguageVerdict::new("ta", 0.99),
        segments: vec![
            Segment::Text("மதுரை மீனாட்சி அம்மன் கோவிலில் சித்திரை திருவிழா இன்று தொடங்கியது".into()),
            image("https://seithi.example.in/a.jpg", "கோவில் கோபுரம் மாலை நேரத்தில் ஒளிர்கிறது", 1024, 768),
            image("https://seithi.example.in/b.jpg", "திருவிழாவில் கூடிய பக்தர்கள் கூட்டம் இன்று", 400, 300),
            image("https://seithi.example.in/c.jpg", "படம்", 800, 800),
        ],
    };
    let mut dedup = PairDedup::default();
    for pair in extract_pairs(&doc, &Thresholds::default(), &ScriptFrequencyClassifier::default()) {
        if dedup.admit(&pair) {
            println!("{}", serialize_pair(&pair));
        }
    }
}
