use std::collections::BTreeSet;
use std::path::Path;

use thiserror::Error;

const DEFAULT_RULES: &str = include_str!("../../data/prune_rules.txt");

#[derive(Debug, Error)]
pub enum RulesError {
    #[error("rules line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("tags both allowed and blocked: {0:?}")]
    Overlap(Vec<String>),
    #[error("cannot read rules file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Tag and class/id policy applied by [`super::prune`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneRules {
    pub structural_allowlist: BTreeSet<String>,
    pub blocklist_tags: BTreeSet<String>,
    pub blocklist_class_id_substrings: BTreeSet<String>,
    pub unwrap_tags: BTreeSet<String>,
    pub more_link_class: String,
    pub placeholder_token: String,
}

impl Default for PruneRules {
    fn default() -> Self {
        Self::parse(DEFAULT_RULES).expect("bundled rules are valid")
    }
}

impl PruneRules {
    /// Parses the `SECTION: value[, value...]` rules format.
    pub fn parse(text: &str) -> Result<Self, RulesError> {
        let mut rules = PruneRules {
            structural_allowlist: BTreeSet::new(),
            blocklist_tags: BTreeSet::new(),
            blocklist_class_id_substrings: BTreeSet::new(),
            unwrap_tags: BTreeSet::new(),
            more_link_class: "more-link".into(),
            placeholder_token: "END_OF_DOCUMENT_TOKEN_TO_BE_REPLACED".into(),
        };
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let syntax = |message: &str| RulesError::Syntax {
                line: idx + 1,
                message: message.to_string(),
            };
            let (section, values) = line
                .split_once(':')
                .ok_or_else(|| syntax("expected `SECTION: value`"))?;
            let mut values = values.split(',').map(str::trim).filter(|v| !v.is_empty());
            match section.trim().to_ascii_uppercase().as_str() {
                "ALLOW" => rules.structural_allowlist.extend(values.map(str::to_lowercase)),
                "BLOCK" => rules.blocklist_tags.extend(values.map(str::to_lowercase)),
                "UNWRAP" => rules.unwrap_tags.extend(values.map(str::to_lowercase)),
                "BLOCK_SUBSTRING" => rules
                    .blocklist_class_id_substrings
                    .extend(values.map(str::to_lowercase)),
                "MORE_LINK" => {
                    rules.more_link_class = values.next_back().ok_or_else(|| syntax("missing value"))?.to_lowercase()
                }
                "PLACEHOLDER" => {
                    rules.placeholder_token = values.next_back().ok_or_else(|| syntax("missing value"))?.to_string()
                }
                other => return Err(syntax(&format!("unknown section `{other}`"))),
            }
        }
        rules.validate()?;
        Ok(rules)
    }

    pub fn load(path: &Path) -> Result<Self, RulesError> {
        let text = std::fs::read_to_string(path).map_err(|source| RulesError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), RulesError> {
        let overlap: Vec<String> = self
            .structural_allowlist
            .intersection(&self.blocklist_tags)
            .cloned()
            .collect();
        if overlap.is_empty() {
            Ok(())
        } else {
            Err(RulesError::Overlap(overlap))
        }
    }

    pub(crate) fn class_or_id_blocked(&self, class_id_lower: &str) -> bool {
        self.blocklist_class_id_substrings
            .iter()
            .any(|s| class_id_lower.contains(s.as_str()))
    }
}
