//! Language identification.
//!
//! Two granularities are needed by the pipeline: a document-level verdict that
//! routes pages to a target language, and a per-line script class used by
//! paragraph cleaning to drop lines that carry no Indic text. The built-in
//! classifier is a script-frequency baseline; anything that can label text
//! with a probability can be plugged in through [`LanguageClassifier`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Languages a verdict may carry, besides [`OTHER`].
pub const TARGET_LANGUAGES: [&str; 12] =
    ["hi", "bn", "ta", "ml", "te", "mr", "kn", "gu", "pa", "or", "as", "en"];

/// Sentinel language for everything outside [`TARGET_LANGUAGES`].
pub const OTHER: &str = "other";

const DEFAULT_SCRIPT_MAP: &str = include_str!("../data/script_languages.txt");

#[derive(Debug, Error, PartialEq)]
pub enum LidError {
    #[error("empty input")]
    EmptyInput,
    #[error("script map line {line}: {message}")]
    BadScriptMap { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageVerdict {
    pub language: String,
    pub confidence: f64,
}

impl LanguageVerdict {
    pub fn new(language: impl Into<String>, confidence: f64) -> Self {
        let language = language.into();
        let language = if TARGET_LANGUAGES.contains(&language.as_str()) {
            language
        } else {
            OTHER.to_string()
        };
        Self {
            language,
            confidence: confidence.clamp(0.0, 1.0),
        }
    }

    /// Placeholder carried by documents before classification.
    pub fn unknown() -> Self {
        Self::new(OTHER, 0.0)
    }
}

/// Unicode script blocks the baseline distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Script {
    Devanagari,
    Bengali,
    Gurmukhi,
    Gujarati,
    Oriya,
    Tamil,
    Telugu,
    Kannada,
    Malayalam,
    Latin,
    Other,
}

impl Script {
    pub const INDIC: [Script; 9] = [
        Script::Devanagari,
        Script::Bengali,
        Script::Gurmukhi,
        Script::Gujarati,
        Script::Oriya,
        Script::Tamil,
        Script::Telugu,
        Script::Kannada,
        Script::Malayalam,
    ];

    pub fn is_indic(self) -> bool {
        !matches!(self, Script::Latin | Script::Other)
    }

    pub fn name(self) -> &'static str {
        match self {
            Script::Devanagari => "devanagari",
            Script::Bengali => "bengali",
            Script::Gurmukhi => "gurmukhi",
            Script::Gujarati => "gujarati",
            Script::Oriya => "oriya",
            Script::Tamil => "tamil",
            Script::Telugu => "telugu",
            Script::Kannada => "kannada",
            Script::Malayalam => "malayalam",
            Script::Latin => "latin",
            Script::Other => "other",
        }
    }
}

impl FromStr for Script {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Script::Latin, Script::Other]
            .into_iter()
            .chain(Script::INDIC)
            .find(|script| script.name() == s)
            .ok_or_else(|| format!("unknown script `{s}`"))
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn indic_block(c: char) -> Option<Script> {
    let script = match c as u32 {
        0x0900..=0x097F | 0xA8E0..=0xA8FF => Script::Devanagari,
        0x0980..=0x09FF => Script::Bengali,
        0x0A00..=0x0A7F => Script::Gurmukhi,
        0x0A80..=0x0AFF => Script::Gujarati,
        0x0B00..=0x0B7F => Script::Oriya,
        0x0B80..=0x0BFF => Script::Tamil,
        0x0C00..=0x0C7F => Script::Telugu,
        0x0C80..=0x0CFF => Script::Kannada,
        0x0D00..=0x0D7F => Script::Malayalam,
        _ => return None,
    };
    Some(script)
}

fn is_latin_letter(c: char) -> bool {
    c.is_alphabetic()
        && matches!(c as u32,
            0x0041..=0x005A
            | 0x0061..=0x007A
            | 0x00AA
            | 0x00BA
            | 0x00C0..=0x024F
            | 0x0250..=0x02AF
            | 0x1D00..=0x1D7F
            | 0x1E00..=0x1EFF
            | 0x2C60..=0x2C7F
            | 0xA720..=0xA7FF
            | 0xAB30..=0xAB6F
            | 0xFF21..=0xFF3A
            | 0xFF41..=0xFF5A)
}

/// Script of a letter codepoint, or `None` for digits, punctuation, symbols,
/// whitespace and emoji.
///
/// Inside the Indic blocks every codepoint except digits and the danda marks
/// counts as a letter, so vowel signs and viramas are attributed to their
/// script even though not all of them are `Alphabetic`.
pub fn script_of(c: char) -> Option<Script> {
    if let Some(script) = indic_block(c) {
        if c.is_numeric() || matches!(c, '\u{0964}' | '\u{0965}') {
            return None;
        }
        return Some(script);
    }
    if is_latin_letter(c) {
        Some(Script::Latin)
    } else if c.is_alphabetic() {
        Some(Script::Other)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScriptClass {
    TargetScript,
    LatinOnly,
    NumericSymbolic,
    Mixed,
}

/// Classifies one line by the scripts of its letters.
pub fn classify_line_script(line: &str) -> ScriptClass {
    let mut seen: Option<Script> = None;
    let mut mixed = false;
    for script in line.chars().filter_map(script_of) {
        match seen {
            None => seen = Some(script),
            Some(s) if s != script => mixed = true,
            Some(_) => {}
        }
        if mixed {
            break;
        }
    }
    match (seen, mixed) {
        (None, _) => ScriptClass::NumericSymbolic,
        (Some(_), true) => ScriptClass::Mixed,
        (Some(Script::Latin), false) => ScriptClass::LatinOnly,
        (Some(s), false) if s.is_indic() => ScriptClass::TargetScript,
        (Some(_), false) => ScriptClass::Mixed,
    }
}

/// Anything that labels a text with a language and a probability.
pub trait LanguageClassifier: Send + Sync {
    fn id(&self) -> &str;
    fn classify(&self, text: &str) -> Result<LanguageVerdict, LidError>;
}

/// Baseline classifier: the majority script among letter codepoints decides
/// the language, its share of letters is the confidence.
#[derive(Debug, Clone)]
pub struct ScriptFrequencyClassifier {
    languages: BTreeMap<Script, String>,
}

impl ScriptFrequencyClassifier {
    /// Parses a `script = language` mapping file.
    pub fn from_mapping(text: &str) -> Result<Self, LidError> {
        let mut languages = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| LidError::BadScriptMap {
                line: idx + 1,
                message,
            };
            let (script, lang) = line
                .split_once('=')
                .ok_or_else(|| bad("expected `script = language`".into()))?;
            let script: Script = script.trim().parse().map_err(bad)?;
            let lang = lang.trim().to_lowercase();
            if lang != OTHER && !TARGET_LANGUAGES.contains(&lang.as_str()) {
                return Err(bad(format!("language `{lang}` is not a target language")));
            }
            languages.insert(script, lang);
        }
        Ok(Self { languages })
    }

    pub fn language_of(&self, script: Script) -> &str {
        self.languages.get(&script).map_or(OTHER, String::as_str)
    }
}

impl Default for ScriptFrequencyClassifier {
    fn default() -> Self {
        Self::from_mapping(DEFAULT_SCRIPT_MAP).expect("bundled script map is valid")
    }
}

impl LanguageClassifier for ScriptFrequencyClassifier {
    fn id(&self) -> &str {
        "script-frequency-v1"
    }

    fn classify(&self, text: &str) -> Result<LanguageVerdict, LidError> {
        if text.trim().is_empty() {
            return Err(LidError::EmptyInput);
        }
        let mut counts: BTreeMap<Script, usize> = BTreeMap::new();
        let mut letters = 0usize;
        for script in text.chars().filter_map(script_of) {
            *counts.entry(script).or_default() += 1;
            letters += 1;
        }
        // Ties resolve to the script that sorts first, so the verdict is stable.
        let best = counts
            .iter()
            .fold(None, |best: Option<(Script, usize)>, (&s, &n)| match best {
                Some((_, m)) if m >= n => best,
                _ => Some((s, n)),
            });
        Ok(match best {
            None => LanguageVerdict::new(OTHER, 0.0),
            Some((script, n)) => {
                LanguageVerdict::new(self.language_of(script), n as f64 / letters as f64)
            }
        })
    }
}
