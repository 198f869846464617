//! Synthetic archives for the streaming bound.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use chrono::{TimeZone, Utc};

use ilforge::config::PipelineConfig;
use ilforge::fetch::{png_header, ImageCache};
use ilforge::warc::WarcWriter;

const IMAGES: usize = 100;
const SENTENCES: [&str; 6] = [
    "गंगा नदी के किनारे बसा यह पुराना शहर अपनी सुबह की आरती के लिए प्रसिद्ध है",
    "स्थानीय बाजार में मिट्टी के बर्तन, रेशमी साड़ियाँ तथा मिठाइयाँ मिलती हैं",
    "इतिहासकार बताते हैं कि इस मंदिर का निर्माण सत्रहवीं शताब्दी में हुआ था",
    "बरसात के मौसम में पहाड़ी रास्ते फिसलन भरे हो जाते हैं इसलिए सावधानी जरूरी है",
    "विद्यालय के बच्चों ने विज्ञान प्रदर्शनी में सौर ऊर्जा से चलने वाली गाड़ी दिखाई",
    "रेलवे स्टेशन पर यात्रियों की सुविधा हेतु नई प्रतीक्षा कक्ष बनाया गया",
];

/// A page with two paragraphs and one image. Every tenth record repeats an
/// earlier URL so deduplication has work to do.
fn page(i: usize) -> String {
    format!(
        "<html><head><title>खबर {i}</title><script>var x={i};</script></head><body><nav>menu</nav><article>\
         <p>{} (अंक {i})</p>\
         <img src=\"/img/{}.png\" alt=\"पृष्ठ {i} के लिए चुनी गई एक सुंदर तस्वीर\">\
         <p>{}</p></article></body></html>",
        SENTENCES[i % 6],
        i % IMAGES,
        SENTENCES[(i + 1) % 6],
    )
}

pub fn write_archive(path: &Path, records: usize) {
    let mut w = WarcWriter::new(BufWriter::new(File::create(path).unwrap()), true);
    let date = Utc.with_ymd_and_hms(2023, 5, 6, 7, 8, 9).unwrap();
    for i in 0..records {
        let id = if i % 10 == 9 { i - 5 } else { i };
        let url = format!("https://site{}.example.in/story/{id}", id % 37);
        w.write_response(&url, date, 200, "text/html; charset=utf-8", page(id).as_bytes()).unwrap();
    }
    drop(w.into_inner());
}

/// Archive of `records` pages plus an offline cache holding every image.
pub fn config(root: &Path, records: usize) -> PipelineConfig {
    let archive = root.join("synthetic.warc.gz");
    write_archive(&archive, records);
    let cache = ImageCache::new(root.join("cache"));
    for site in 0..37 {
        for img in 0..IMAGES {
            cache
                .store_bytes(&format!("https://site{site}.example.in/img/{img}.png"), &png_header(400, 300))
                .unwrap();
        }
    }
    let text = format!(
        "out_dir = {}\ncache_dir = {}\noffline = true\n[inputs]\n{}\n",
        root.join("out").display(),
        root.join("cache").display(),
        archive.display()
    );
    PipelineConfig::from_str_with(&text, root, std::iter::empty()).unwrap()
}
