//! Simplified DOM and rule-based pruning.
//!
//! Raw HTML is parsed with an HTML5-conformant, error-tolerant parser and
//! converted into [`DomNode`] trees: elements, `#text` nodes and `#comment`
//! nodes. [`prune`] then strips boilerplate according to [`PruneRules`].

mod parse;
mod prune;
mod rules;

pub use parse::{decode_html, parse_html};
pub use prune::{essential_text, prune, reduction_stats, PageMeasure, ReductionStats};
pub use rules::{PruneRules, RulesError};

use std::fmt::Write as _;

use thiserror::Error;

pub const TEXT_TAG: &str = "#text";
pub const COMMENT_TAG: &str = "#comment";

#[derive(Debug, Error, PartialEq)]
pub enum DomError {
    #[error("empty document")]
    EmptyDocument,
    #[error("zero-length page cannot be measured")]
    ZeroBytes,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomNode {
    pub tag: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<DomNode>,
    pub text: String,
}

impl DomNode {
    pub fn element(tag: impl Into<String>, attributes: Vec<(String, String)>, children: Vec<DomNode>) -> Self {
        Self {
            tag: tag.into(),
            attributes,
            children,
            text: String::new(),
        }
    }

    pub fn text(text: impl Into<String>) -> Self {
        Self {
            tag: TEXT_TAG.to_string(),
            attributes: Vec::new(),
            children: Vec::new(),
            text: text.into(),
        }
    }

    pub fn comment(text: impl Into<String>) -> Self {
        Self {
            tag: COMMENT_TAG.to_string(),
            ..Self::text(text)
        }
    }

    pub fn is_text(&self) -> bool {
        self.tag == TEXT_TAG
    }

    pub fn is_comment(&self) -> bool {
        self.tag == COMMENT_TAG
    }

    pub fn is_element(&self) -> bool {
        !self.is_text() && !self.is_comment()
    }

    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// Pre-order iterator over the subtree rooted here.
    pub fn descendants(&self) -> impl Iterator<Item = &DomNode> {
        let mut stack = vec![self];
        std::iter::from_fn(move || {
            let node = stack.pop()?;
            stack.extend(node.children.iter().rev());
            Some(node)
        })
    }

    /// Concatenated text of all `#text` descendants, in document order.
    pub fn text_content(&self) -> String {
        self.descendants()
            .filter(|n| n.is_text())
            .map(|n| n.text.as_str())
            .collect()
    }

    /// Serializes the subtree back to HTML.
    pub fn to_html(&self) -> String {
        let mut out = String::new();
        write_html(self, &mut out);
        out
    }
}

const VOID_ELEMENTS: [&str; 14] = [
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

fn write_html(node: &DomNode, out: &mut String) {
    if node.is_text() {
        escape_into(&node.text, false, out);
        return;
    }
    if node.is_comment() {
        let _ = write!(out, "<!--{}-->", node.text);
        return;
    }
    out.push('<');
    out.push_str(&node.tag);
    for (k, v) in &node.attributes {
        out.push(' ');
        out.push_str(k);
        out.push_str("=\"");
        escape_into(v, true, out);
        out.push('"');
    }
    out.push('>');
    if VOID_ELEMENTS.contains(&node.tag.as_str()) && node.children.is_empty() {
        return;
    }
    for child in &node.children {
        write_html(child, out);
    }
    let _ = write!(out, "</{}>", node.tag);
}

fn escape_into(text: &str, attribute: bool, out: &mut String) {
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' if attribute => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
}
