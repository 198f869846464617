use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::config::{ConfigError, KvFile};

const DEFAULT_LISTS: &str = include_str!("../../data/blocklists.txt");

macro_rules! bundled_stopwords {
    ($($lang:literal),* $(,)?) => {
        [$(($lang, include_str!(concat!("../../data/stopwords/", $lang, ".txt")))),*]
    };
}

const BUNDLED_STOPWORDS: [(&str, &str); 12] =
    bundled_stopwords!["hi", "bn", "ta", "ml", "te", "mr", "kn", "gu", "pa", "or", "as", "en"];

/// Substring lists used by image and text heuristics. All entries are
/// lowercase; matching lowercases the haystack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocklists {
    pub url_substrings: BTreeSet<String>,
    pub filename_substrings: BTreeSet<String>,
    pub alt_blockwords: BTreeSet<String>,
    pub nsfw_substrings: BTreeSet<String>,
    pub boilerplate_phrases: BTreeSet<String>,
    pub stopwords: BTreeMap<String, HashSet<String>>,
}

impl Default for Blocklists {
    fn default() -> Self {
        let file = KvFile::parse(DEFAULT_LISTS).expect("bundled blocklists parse");
        let mut lists = Self::empty();
        lists.apply(&file).expect("bundled blocklists are valid");
        for (lang, words) in BUNDLED_STOPWORDS {
            lists.stopwords.insert(lang.to_string(), parse_word_list(words));
        }
        lists
    }
}

fn parse_word_list(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

impl Blocklists {
    pub fn empty() -> Self {
        Self {
            url_substrings: BTreeSet::new(),
            filename_substrings: BTreeSet::new(),
            alt_blockwords: BTreeSet::new(),
            nsfw_substrings: BTreeSet::new(),
            boilerplate_phrases: BTreeSet::new(),
            stopwords: BTreeMap::new(),
        }
    }

    /// Replaces every list that `file` defines a section for. Stopwords use
    /// sections named `stopwords.<lang>`.
    pub fn apply(&mut self, file: &KvFile) -> Result<(), ConfigError> {
        for (name, entries) in file.sections() {
            let set = || entries.iter().map(|e| e.to_lowercase()).collect::<BTreeSet<_>>();
            match name {
                "url_substrings" => self.url_substrings = set(),
                "filename_substrings" => self.filename_substrings = set(),
                "alt_blockwords" => self.alt_blockwords = set(),
                "nsfw_substrings" => self.nsfw_substrings = set(),
                "boilerplate_phrases" => self.boilerplate_phrases = set(),
                other => match other.strip_prefix("stopwords.") {
                    Some(lang) => {
                        self.stopwords
                            .insert(lang.to_lowercase(), entries.iter().map(|e| e.to_lowercase()).collect());
                    }
                    None if is_pipeline_section(other) => {}
                    None => return Err(ConfigError::UnknownSection(other.to_string())),
                },
            }
        }
        Ok(())
    }

    pub fn stopwords_for(&self, language: &str) -> Option<&HashSet<String>> {
        self.stopwords.get(language).filter(|s| !s.is_empty())
    }
}

fn is_pipeline_section(name: &str) -> bool {
    matches!(name, "inputs" | "languages")
}
