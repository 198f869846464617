//! Linearizes a pruned page into segments and identifies its language.

use chrono::NaiveDate;
use ilforge::assemble::{linearize, RecordMeta};
use ilforge::dom::{parse_html, prune, PruneRules};
use ilforge::lid::{LanguageClassifier, ScriptFrequencyClassifier};

const PAGE: &str = r#"<html><body><article>
<p>কলকাতায় আজ বইমেলা শুরু হয়েছে এবং প্রচুর মানুষ এসেছেন।</p>
<figure><img srcset="/s.jpg 320w, /l.jpg 1280w" alt="বইমেলার প্রবেশদ্বারে ভিড়"><figcaption>বইমেলা</figcaption></figure>
<p>মেলা চলবে দুই সপ্তাহ ধরে।</p></article></body></html>"#;

fn main() {
    let url = "https://khabar.example.in/boimela";
    let tree = prune(&parse_html(PAGE.as_bytes(), None).unwrap(), &PruneRules::default());
    let meta = RecordMeta {
        source_url: url.into(),
        crawl_date: NaiveDate::from_ymd_opt(2024, 2, 1).unwrap(),
    };
    let doc = linearize(&tree, url, &meta).expect("page has content");
    for (i, segment) in doc.segments.iter().enumerate() {
        println!("{i}: {segment:?}");
    }
    let verdict = ScriptFrequencyClassifier::default().classify(&doc.joined_text()).unwrap();
    println!("language={} confidence={:.2}", verdict.language, verdict.confidence);
}
