//! The pipeline configuration file: `key = value` lines and `[section]`
//! lists, with environment overrides by uppercased key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use crate::dom::{PruneRules, RulesError};
use crate::fetch::FetchConfig;
use crate::filter::{Blocklists, ThresholdError, Thresholds};
use crate::lid::{LidError, ScriptFrequencyClassifier, TARGET_LANGUAGES};
use crate::stats::WhitespaceTokenizer;
use crate::warc::DEFAULT_DEDUP_CAPACITY;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("unknown section `[{0}]`")]
    UnknownSection(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("invalid value `{value}` for `{key}`")]
    Value { key: String, value: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("referenced file does not exist: {0}")]
    MissingFile(PathBuf),
    #[error(transparent)]
    Thresholds(#[from] ThresholdError),
    #[error(transparent)]
    Rules(#[from] RulesError),
    #[error(transparent)]
    ScriptMap(#[from] LidError),
    #[error("unsupported tokenizer `{0}`")]
    Tokenizer(String),
    #[error("language `{0}` is not a supported target language")]
    Language(String),
}

/// Parsed `key = value` pairs (before the first section) and list sections.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvFile {
    pairs: Vec<(String, String)>,
    sections: Vec<(String, Vec<String>)>,
}

impl KvFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut file = KvFile::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                    line: idx + 1,
                    message: "unterminated section header".into(),
                })?;
                file.sections.push((name.trim().to_string(), Vec::new()));
                continue;
            }
            match file.sections.last_mut() {
                Some((_, entries)) => entries.push(line.to_string()),
                None => {
                    let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                        line: idx + 1,
                        message: "expected `key = value`".into(),
                    })?;
                    file.pairs.push((k.trim().to_string(), v.trim().to_string()));
                }
            }
        }
        Ok(file)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn sections(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.sections.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn section(&self, name: &str) -> Option<&[String]> {
        self.sections().find(|(n, _)| *n == name).map(|(_, v)| v)
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Glob patterns, already resolved against the config file's directory.
    pub inputs: Vec<String>,
    pub out_dir: PathBuf,
    pub work_dir: PathBuf,
    pub target_languages: Vec<String>,
    pub lid_threshold: f64,
    pub thresholds: Thresholds,
    pub blocklists: Blocklists,
    pub rules: PruneRules,
    pub script_map: Option<PathBuf>,
    pub fetch: FetchConfig,
    /// Input shards per batch.
    pub batch_shards: usize,
    /// Fetch tasks submitted to the downloader at a time.
    pub batch_size: usize,
    pub content_dedup: bool,
    pub dedup_capacity: usize,
    pub cap_dedup: bool,
    pub tokenizer: String,
    /// Canonical form of every setting that can change outputs.
    pub fingerprint_source: String,
}

/// Languages routed to output when the config does not list any.
pub const DEFAULT_TARGETS: [&str; 11] = ["hi", "bn", "ta", "ml", "te", "mr", "kn", "gu", "pa", "or", "as"];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(ConfigError::Value {
            key: key.into(),
            value: value.into(),
        }),
    }
}

fn set_threshold(th: &mut Thresholds, key: &str, value: &str) -> Result<bool, ConfigError> {
    macro_rules! fields {
        ($($name:ident),*) => {
            match key {
                $(stringify!($name) => th.$name = parse_value(key, value)?,)*
                _ => return Ok(false),
            }
        };
    }
    fields!(
        para_min_words, para_max_words, doc_min_words, doc_max_words, char_rep_max, word_rep_max_para,
        word_rep_max_doc, common_word_min, img_min_side_px, aspect_min, aspect_max, doc_min_images,
        doc_max_images, alt_min_words, line_min_words, char_ngram, word_ngram
    );
    Ok(true)
}

const KNOWN_KEYS: &[&str] = &[
    "out_dir", "work_dir", "rules", "blocklists", "script_map", "lid_threshold", "batch_shards", "batch_size",
    "content_dedup", "dedup_capacity", "cap_dedup", "tokenizer", "strict_8", "parallelism", "per_host",
    "timeout_ms", "retries", "backoff_ms", "max_image_bytes", "user_agent", "cache_dir", "offline",
    "para_min_words", "para_max_words", "doc_min_words", "doc_max_words", "char_rep_max", "word_rep_max_para",
    "word_rep_max_doc", "common_word_min", "img_min_side_px", "aspect_min", "aspect_max", "doc_min_images",
    "doc_max_images", "alt_min_words", "line_min_words", "char_ngram", "word_ngram",
];

impl PipelineConfig {
    /// Loads a config file; `env` supplies overrides looked up by the
    /// uppercased key (pass `std::env::vars()` in the binary).
    pub fn load(path: &Path, env: impl IntoIterator<Item = (String, String)>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_str_with(&text, base, env)
    }

    pub fn from_str_with(
        text: &str,
        base: &Path,
        env: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ConfigError> {
        let file = KvFile::parse(text)?;
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        for (k, v) in file.pairs() {
            if !KNOWN_KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey(k.to_string()));
            }
            values.insert(k.to_string(), v.to_string());
        }
        let env: BTreeMap<String, String> = env.into_iter().collect();
        for key in KNOWN_KEYS {
            if let Some(v) = env.get(&key.to_ascii_uppercase()) {
                values.insert(key.to_string(), v.clone());
            }
        }
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        let existing = |p: &str| -> Result<PathBuf, ConfigError> {
            let path = resolve(p);
            if path.exists() {
                Ok(path)
            } else {
                Err(ConfigError::MissingFile(path))
            }
        };
        let get = |k: &str| values.get(k).map(String::as_str);

        let out_dir = resolve(get("out_dir").ok_or(ConfigError::Missing("out_dir"))?);
        let work_dir = get("work_dir").map_or_else(|| out_dir.join("work"), resolve);

        let mut thresholds = if get("strict_8").map(|v| parse_bool("strict_8", v)).transpose()? == Some(true) {
            Thresholds::strict_8()
        } else {
            Thresholds::default()
        };
        for (k, v) in &values {
            set_threshold(&mut thresholds, k, v)?;
        }
        thresholds.validate()?;

        let rules = match get("rules") {
            Some(p) => PruneRules::load(&existing(p)?)?,
            None => PruneRules::default(),
        };
        let mut blocklists = Blocklists::default();
        if let Some(p) = get("blocklists") {
            let path = existing(p)?;
            let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path, source })?;
            blocklists.apply(&KvFile::parse(&text)?)?;
        }
        blocklists.apply(&file)?;

        let script_map = get("script_map").map(existing).transpose()?;
        if let Some(p) = &script_map {
            let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Io {
                path: p.clone(),
                source,
            })?;
            ScriptFrequencyClassifier::from_mapping(&text)?;
        }

        let target_languages: Vec<String> = match file.section("languages") {
            Some(langs) => langs.iter().map(|l| l.to_ascii_lowercase()).collect(),
            None => DEFAULT_TARGETS.iter().map(|s| s.to_string()).collect(),
        };
        if let Some(bad) = target_languages.iter().find(|l| !TARGET_LANGUAGES.contains(&l.as_str())) {
            return Err(ConfigError::Language(bad.clone()));
        }
        let inputs = file
            .section("inputs")
            .unwrap_or(&[])
            .iter()
            .map(|g| resolve(g).to_string_lossy().into_owned())
            .collect();

        let tokenizer = get("tokenizer").unwrap_or(WhitespaceTokenizer::ID).to_string();
        if tokenizer != WhitespaceTokenizer::ID {
            return Err(ConfigError::Tokenizer(tokenizer));
        }

        let mut fetch = FetchConfig::default();
        macro_rules! opt {
            ($key:literal, $parse:expr) => {
                if let Some(v) = get($key) {
                    $parse($key, v)?
                } else {
                    Default::default()
                }
            };
        }
        if let Some(v) = get("parallelism") {
            fetch.parallelism = parse_value("parallelism", v)?;
        }
        if let Some(v) = get("per_host") {
            fetch.per_host = parse_value("per_host", v)?;
        }
        if let Some(v) = get("timeout_ms") {
            fetch.timeout = Duration::from_millis(parse_value("timeout_ms", v)?);
        }
        if let Some(v) = get("retries") {
            fetch.max_retries = parse_value("retries", v)?;
        }
        if let Some(v) = get("backoff_ms") {
            fetch.backoff_base = Duration::from_millis(parse_value("backoff_ms", v)?);
        }
        if let Some(v) = get("max_image_bytes") {
            fetch.max_bytes = parse_value("max_image_bytes", v)?;
        }
        if let Some(v) = get("user_agent") {
            fetch.user_agent = v.to_string();
        }
        fetch.cache_dir = get("cache_dir").map(resolve);
        fetch.offline = opt!("offline", parse_bool);
        fetch.retain_bytes = false;
        if fetch.parallelism == 0 || fetch.per_host == 0 {
            return Err(ConfigError::Value {
                key: "parallelism".into(),
                value: "0".into(),
            });
        }

        let lid_threshold: f64 = get("lid_threshold").map_or(Ok(0.65), |v| parse_value("lid_threshold", v))?;
        if !(0.0..=1.0).contains(&lid_threshold) {
            return Err(ConfigError::Value {
                key: "lid_threshold".into(),
                value: lid_threshold.to_string(),
            });
        }
        let batch_shards: usize = get("batch_shards").map_or(Ok(1), |v| parse_value("batch_shards", v))?;
        let batch_size: usize = get("batch_size").map_or(Ok(1000), |v| parse_value("batch_size", v))?;
        if batch_shards == 0 || batch_size == 0 {
            return Err(ConfigError::Value {
                key: "batch_size".into(),
                value: "0".into(),
            });
        }

        let mut config = PipelineConfig {
            inputs,
            out_dir,
            work_dir,
            target_languages,
            lid_threshold,
            thresholds,
            blocklists,
            rules,
            script_map,
            fetch,
            batch_shards,
            batch_size,
            content_dedup: opt!("content_dedup", parse_bool),
            dedup_capacity: get("dedup_capacity")
                .map_or(Ok(DEFAULT_DEDUP_CAPACITY), |v| parse_value("dedup_capacity", v))?,
            cap_dedup: opt!("cap_dedup", parse_bool),
            tokenizer,
            fingerprint_source: String::new(),
        };
        config.refresh_fingerprint();
        Ok(config)
    }

    /// Recomputes [`PipelineConfig::fingerprint_source`]; call after
    /// changing fields programmatically.
    pub fn refresh_fingerprint(&mut self) {
        let mut stop: Vec<_> = self
            .blocklists
            .stopwords
            .iter()
            .map(|(lang, words)| {
                let mut w: Vec<_> = words.iter().collect();
                w.sort();
                format!("{lang}:{w:?}")
            })
            .collect();
        stop.sort();
        let b = &self.blocklists;
        self.fingerprint_source = format!(
            "{:?}|{:?}|{}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{}|{}|{}|{}|{:?}|{}",
            self.inputs,
            self.target_languages,
            self.lid_threshold,
            self.thresholds,
            self.rules,
            b.url_substrings,
            b.filename_substrings,
            b.alt_blockwords,
            b.nsfw_substrings,
            b.boilerplate_phrases,
            stop,
            self.batch_shards,
            self.content_dedup,
            self.cap_dedup,
            self.tokenizer,
            self.script_map,
            self.fetch.offline,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str, env: &[(&str, &str)]) -> Result<PipelineConfig, ConfigError> {
        PipelineConfig::from_str_with(
            text,
            Path::new("/tmp"),
            env.iter().map(|(k, v)| (k.to_string(), v.to_string())),
        )
    }

    #[test]
    fn kv_and_sections() {
        let f = KvFile::parse("a = 1\n# c\n[inputs]\nx/*.warc.gz\n\n[languages]\nhi\n").unwrap();
        assert_eq!(f.pairs().collect::<Vec<_>>(), vec![("a", "1")]);
        assert_eq!(f.section("languages").unwrap(), ["hi".to_string()]);
        assert!(KvFile::parse("novalue").is_err());
    }

    #[test]
    fn defaults_and_overrides() {
        let c = load("out_dir = out\npara_min_words = 5\n[inputs]\nshards/*.warc\n", &[]).unwrap();
        assert_eq!(c.out_dir, Path::new("/tmp/out"));
        assert_eq!(c.work_dir, Path::new("/tmp/out/work"));
        assert_eq!(c.inputs, vec!["/tmp/shards/*.warc".to_string()]);
        assert_eq!(c.thresholds.para_min_words, 5);
        assert_eq!(c.fetch.parallelism, 40);
        assert_eq!(c.target_languages.len(), 11);
        let c = load("out_dir = out\n", &[("PARA_MAX_WORDS", "900"), ("STRICT_8", "true")]).unwrap();
        assert_eq!((c.thresholds.para_min_words, c.thresholds.para_max_words), (8, 900));
    }

    #[test]
    fn errors() {
        assert!(matches!(load("", &[]), Err(ConfigError::Missing("out_dir"))));
        assert!(matches!(load("out_dir=o\nbogus=1\n", &[]), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(load("out_dir=o\nrules=/nope\n", &[]), Err(ConfigError::MissingFile(_))));
        assert!(matches!(load("out_dir=o\ndoc_min_words=5000\n", &[]), Err(ConfigError::Thresholds(_))));
        assert!(matches!(load("out_dir=o\n[languages]\nxx\n", &[]), Err(ConfigError::Language(_))));
    }
}
