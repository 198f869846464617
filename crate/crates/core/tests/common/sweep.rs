//! Boundary sweeps over the default thresholds. Each sweep builds inputs that
//! move one metric across its bound while the others stay comfortably inside,
//! and checks the verdict flips exactly where the documented inclusivity says.

use chrono::NaiveDate;

use ilforge::caption::extract_pairs;
use ilforge::document::{ImageFormat, ImageRef, InterleavedDocument, Segment};
use ilforge::filter::{document_failure, filter_image_node, filter_paragraph, Blocklists, Reason, Thresholds};
use ilforge::lid::{LanguageVerdict, ScriptFrequencyClassifier};

use super::gen::{oracle_char_rep, oracle_common, oracle_word_rep};

/// `count` distinct single-character tokens starting at `from` in the CJK block.
fn glyphs(from: usize, count: usize) -> Vec<String> {
    (0..count)
        .map(|i| char::from_u32(0x4E00 + (from + i) as u32).unwrap().to_string())
        .collect()
}

fn sentence(from: usize, count: usize) -> String {
    glyphs(from, count).join(" ")
}

/// Whitespace characters used to keep character n-grams distinct.
const SEPARATORS: [char; 12] = [
    '\t', '\u{2000}', '\u{2001}', '\u{2002}', '\u{2003}', '\u{2004}', '\u{2005}', '\u{2006}', '\u{2007}', '\u{2008}',
    '\u{2009}', '\u{200A}',
];

/// `base` unique tokens, then `repeats` copies of the bigram formed by the
/// first two, each copy wrapped in fresh tokens and joined by a different
/// separator. Word bigram duplicates = `repeats`; char 5-grams stay distinct.
fn repeated_bigrams(base: usize, repeats: usize) -> String {
    let tokens = glyphs(0, base);
    let mut text = tokens.join(" ");
    let fresh = glyphs(5000, 2 * repeats);
    for r in 0..repeats {
        text.push_str(&format!(" {} {}{}{} {}", fresh[2 * r], tokens[0], SEPARATORS[r], tokens[1], fresh[2 * r + 1]));
    }
    text
}

/// A 30-char leading word, 61 one-char words, then a trailing word copying
/// the first `m` chars of the leading word: `m - 4` duplicate 5-grams over
/// `149 + m` in total, exactly one tenth at `m = 21`.
fn repeated_chars(m: usize) -> String {
    let lead: String = glyphs(0, 30).concat();
    let rest = sentence(100, 61);
    let tail: String = lead.chars().take(m).collect();
    format!("{lead} {rest} {tail}")
}

fn image(w: u32, h: u32) -> ImageRef {
    ImageRef {
        src_url: format!("https://example.in/media/photo-{w}x{h}.png"),
        alt_text: String::new(),
        filename: format!("photo-{w}x{h}.png"),
        figcaption: None,
        width_px: Some(w),
        height_px: Some(h),
        format: Some(ImageFormat::Png),
    }
}

fn doc(texts: Vec<String>, images: usize) -> InterleavedDocument {
    let mut segments: Vec<Segment> = texts.into_iter().map(Segment::Text).collect();
    segments.extend((0..images).map(|_| Segment::Image(image(300, 300))));
    InterleavedDocument {
        doc_id: "0".repeat(32),
        source_url: "https://example.in/a".into(),
        domain: "example.in".into(),
        crawl_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
        language: LanguageVerdict::new("hi", 1.0),
        segments,
    }
}

fn expect(name: &str, at: impl std::fmt::Display, got: Option<Reason>, want: Option<Reason>) -> Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("{name} at {at}: got {got:?}, want {want:?}"))
    }
}

fn para(text: &str, th: &Thresholds, stop: Option<&std::collections::HashSet<String>>) -> Option<Reason> {
    let v = filter_paragraph(text, th, stop);
    (!v.accepted).then_some(v.reason)
}

/// Checks that a sweep saw the metric sitting exactly on its bound and on
/// both sides of it.
fn covered(name: &str, on_bound: bool, below: bool, above: bool) -> Result<(), String> {
    if on_bound && below && above {
        Ok(())
    } else {
        Err(format!("{name}: sweep missed the boundary (on={on_bound} below={below} above={above})"))
    }
}

pub fn paragraph_words() -> Result<(), String> {
    let th = Thresholds::default();
    for k in (1..=6).chain(995..=1005) {
        let want = if k < 4 {
            Some(Reason::TooFewWords)
        } else if k > 1000 {
            Some(Reason::TooManyWords)
        } else {
            None
        };
        expect("paragraph words", k, para(&sentence(0, k), &th, None), want)?;
    }
    let strict = Thresholds::strict_8();
    expect("strict-8 words", 7, para(&sentence(0, 7), &strict, None), Some(Reason::TooFewWords))?;
    expect("strict-8 words", 8, para(&sentence(0, 8), &strict, None), None)
}

pub fn document_words() -> Result<(), String> {
    let th = Thresholds::default();
    for k in (7..=12).chain(1997..=2003) {
        // Split over two paragraphs to exercise the joined text.
        let first = k / 2;
        let d = doc(vec![sentence(0, first), sentence(first, k - first)], 1);
        let want = if k < 10 {
            Some(Reason::TooFewWords)
        } else if k > 2000 {
            Some(Reason::TooManyWords)
        } else {
            None
        };
        expect("document words", k, document_failure(&d, &th, None), want)?;
    }
    Ok(())
}

pub fn char_repetition() -> Result<(), String> {
    let th = Thresholds::default();
    let (mut on, mut below, mut above) = (false, false, false);
    for m in 0..=30 {
        let text = repeated_chars(m);
        let chars = text.chars().count();
        let total = chars - 4;
        let dup = m.saturating_sub(4);
        let r = oracle_char_rep(&text, 5);
        if (r - dup as f64 / total as f64).abs() > 1e-12 {
            return Err(format!("char fixture at m={m}: ratio {r} != {dup}/{total}"));
        }
        if oracle_word_rep(&text, 2) > 0.0 {
            return Err(format!("char fixture at m={m} repeats word bigrams"));
        }
        on |= 10 * dup == total;
        below |= 10 * dup < total;
        above |= 10 * dup > total;
        let want = (10 * dup > total).then_some(Reason::CharRepetition);
        expect("char repetition", format!("{dup}/{total}"), para(&text, &th, None), want)?;
    }
    covered("char repetition", on, below, above)
}

fn word_sweep(name: &str, level_para: bool, base: usize, bound_den: usize) -> Result<(), String> {
    let th = Thresholds::default();
    let (mut on, mut below, mut above) = (false, false, false);
    for repeats in 0..=12 {
        let text = repeated_bigrams(base, repeats);
        let total = text.split_whitespace().count() - 1;
        let r = oracle_word_rep(&text, 2);
        if (r - repeats as f64 / total as f64).abs() > 1e-12 {
            return Err(format!("{name} fixture: ratio {r} != {repeats}/{total}"));
        }
        if oracle_char_rep(&text, 5) > 0.0 {
            return Err(format!("{name} fixture at {repeats} repeats has repeated char grams"));
        }
        on |= bound_den * repeats == total;
        below |= bound_den * repeats < total;
        above |= bound_den * repeats > total;
        let want = (bound_den * repeats > total).then_some(Reason::WordRepetition);
        let got = if level_para {
            para(&text, &th, None)
        } else {
            document_failure(&doc(vec![text.clone()], 1), &th, None)
        };
        expect(name, format!("{repeats}/{total}"), got, want)?;
    }
    covered(name, on, below, above)
}

/// Paragraph bound 0.1: equality at 5 repeats over 31 base tokens.
pub fn word_repetition_paragraph() -> Result<(), String> {
    word_sweep("paragraph word repetition", true, 31, 10)
}

/// Document bound 0.2: equality at 11 repeats over 12 base tokens.
pub fn word_repetition_document() -> Result<(), String> {
    word_sweep("document word repetition", false, 12, 5)
}

pub fn common_words() -> Result<(), String> {
    let th = Thresholds::default();
    let stop: Vec<String> = glyphs(9000, 10);
    let set = stop.iter().cloned().collect();
    let (mut on, mut below, mut above) = (false, false, false);
    for c in 0..=8 {
        let mut tokens = glyphs(0, 40 - c);
        tokens.extend(stop[..c].iter().cloned());
        let text = tokens.join(" ");
        if (oracle_common(&text, &stop) - c as f64 / 40.0).abs() > 1e-12 {
            return Err(format!("common-word fixture at {c}/40"));
        }
        on |= c * 10 == 40;
        below |= c * 10 < 40;
        above |= c * 10 > 40;
        let want = (c * 10 < 40).then_some(Reason::LowCommonWords);
        expect("common words", format!("{c}/40"), para(&text, &th, Some(&set)), want)?;
    }
    covered("common words", on, below, above)
}

pub fn image_side() -> Result<(), String> {
    let (th, bl) = (Thresholds::default(), Blocklists::default());
    for (w, h, want) in [
        (149, 149, Some(Reason::TooSmall)),
        (150, 150, None),
        (149, 300, Some(Reason::TooSmall)),
        (300, 149, Some(Reason::TooSmall)),
        (150, 300, None),
        (151, 151, None),
    ] {
        let v = filter_image_node(&image(w, h), &th, &bl);
        expect("image side", format!("{w}x{h}"), (!v.accepted).then_some(v.reason), want)?;
    }
    Ok(())
}

pub fn aspect_ratio() -> Result<(), String> {
    let (th, bl) = (Thresholds::default(), Blocklists::default());
    for (w, h, want) in [
        (150, 750, None),
        (150, 751, Some(Reason::BadAspect)),
        (750, 150, None),
        (751, 150, Some(Reason::BadAspect)),
        (200, 1000, None),
        (1001, 200, Some(Reason::BadAspect)),
        (300, 300, None),
    ] {
        let v = filter_image_node(&image(w, h), &th, &bl);
        expect("aspect", format!("{w}x{h}"), (!v.accepted).then_some(v.reason), want)?;
    }
    Ok(())
}

pub fn image_count() -> Result<(), String> {
    let th = Thresholds::default();
    for (n, want) in [
        (0, Some(Reason::NoImages)),
        (1, None),
        (2, None),
        (29, None),
        (30, None),
        (31, Some(Reason::TooManyImages)),
    ] {
        expect("image count", n, document_failure(&doc(vec![sentence(0, 20)], n), &th, None), want)?;
    }
    Ok(())
}

pub fn alt_words() -> Result<(), String> {
    let th = Thresholds::default();
    let lid = ScriptFrequencyClassifier::default();
    for k in 1..=8 {
        let mut d = doc(vec![sentence(0, 20)], 0);
        let mut img = image(300, 300);
        img.alt_text = sentence(7000, k);
        d.segments.push(Segment::Image(img));
        let got = extract_pairs(&d, &th, &lid).len();
        let want = usize::from(k >= 5);
        if got != want {
            return Err(format!("alt words at {k}: got {got} pairs, want {want}"));
        }
    }
    Ok(())
}

pub type Sweep = fn() -> Result<(), String>;

pub const ALL: [(&str, Sweep); 11] = [
    ("paragraph words 4/1000", paragraph_words),
    ("document words 10/2000", document_words),
    ("char repetition 0.1", char_repetition),
    ("paragraph word repetition 0.1", word_repetition_paragraph),
    ("document word repetition 0.2", word_repetition_document),
    ("common words 0.1", common_words),
    ("image side 150", image_side),
    ("aspect 1:5-5:1", aspect_ratio),
    ("image count 1-30", image_count),
    ("alt words 5", alt_words),
    ("line cleaning", line_words),
];

/// Lines under four words are dropped; four-word lines stay.
pub fn line_words() -> Result<(), String> {
    let th = Thresholds::default();
    let bl = Blocklists::default();
    let three = "नदी किनारे मेला";
    let four = "नदी किनारे बड़ा मेला";
    let got = ilforge::filter::clean_paragraph(&format!("{three}\n{four}"), &bl, &th);
    if got == four {
        Ok(())
    } else {
        Err(format!("line cleaning kept {got:?}"))
    }
}
