use super::{DomError, DomNode, PruneRules};

/// Applies the pruning rules, returning a new tree.
///
/// Blocklisted tags and elements whose class/id contains a blocklisted
/// substring are removed with their subtree; `more-link` elements become a
/// placeholder text node; unwrap tags are replaced by their children; `<br>`
/// becomes a `"\n"` text node; comments are dropped. Text is whitespace
/// collapsed (newlines kept, at most two in a row) and adjacent text nodes
/// are merged. The result is a fixed point: pruning it again changes nothing.
pub fn prune(tree: &DomNode, rules: &PruneRules) -> DomNode {
    let mut nodes = prune_node(tree, rules);
    if nodes.len() == 1 && nodes[0].is_element() && nodes[0].tag == tree.tag {
        return nodes.pop().expect("one node");
    }
    DomNode::element("html", Vec::new(), nodes)
}

fn class_and_id(node: &DomNode) -> (String, String) {
    let lower = |name| node.attr(name).unwrap_or("").to_lowercase();
    (lower("class"), lower("id"))
}

enum Action {
    Drop,
    Placeholder,
    LineBreak,
    Keep,
}

fn action_for(node: &DomNode, rules: &PruneRules) -> Action {
    let tag = node.tag.to_ascii_lowercase();
    if rules.blocklist_tags.contains(&tag) {
        return Action::Drop;
    }
    let (class, id) = class_and_id(node);
    if !rules.more_link_class.is_empty() && class.contains(&rules.more_link_class) {
        return Action::Placeholder;
    }
    if rules.class_or_id_blocked(&class) || rules.class_or_id_blocked(&id) {
        return Action::Drop;
    }
    if tag == "br" {
        return Action::LineBreak;
    }
    Action::Keep
}

fn prune_node(node: &DomNode, rules: &PruneRules) -> Vec<DomNode> {
    if node.is_comment() {
        return Vec::new();
    }
    if node.is_text() {
        let text = collapse_whitespace(&node.text);
        return if text.is_empty() {
            Vec::new()
        } else {
            vec![DomNode::text(text)]
        };
    }
    match action_for(node, rules) {
        Action::Drop => Vec::new(),
        Action::Placeholder => vec![DomNode::text(rules.placeholder_token.clone())],
        Action::LineBreak => vec![DomNode::text("\n")],
        Action::Keep => {
            let children = merge_text(node.children.iter().flat_map(|c| prune_node(c, rules)));
            if rules.unwrap_tags.contains(&node.tag.to_ascii_lowercase()) {
                children
            } else {
                vec![DomNode::element(node.tag.clone(), node.attributes.clone(), children)]
            }
        }
    }
}

fn merge_text(nodes: impl Iterator<Item = DomNode>) -> Vec<DomNode> {
    let mut out: Vec<DomNode> = Vec::new();
    for node in nodes {
        match out.last_mut() {
            Some(last) if last.is_text() && node.is_text() => last.text.push_str(&node.text),
            _ => out.push(node),
        }
    }
    for node in out.iter_mut().filter(|n| n.is_text()) {
        node.text = collapse_whitespace(&node.text);
    }
    out
}

/// Whitespace runs without a newline become one space; runs with newlines
/// become those newlines, capped at two.
pub(crate) fn collapse_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut space = false;
    let mut newlines = 0usize;
    let flush = |out: &mut String, space: &mut bool, newlines: &mut usize| {
        if *newlines > 0 {
            out.push_str(if *newlines >= 2 { "\n\n" } else { "\n" });
        } else if *space {
            out.push(' ');
        }
        *space = false;
        *newlines = 0;
    };
    for c in text.chars() {
        if c == '\n' {
            newlines += 1;
        } else if c.is_whitespace() {
            space = true;
        } else {
            flush(&mut out, &mut space, &mut newlines);
            out.push(c);
        }
    }
    flush(&mut out, &mut space, &mut newlines);
    out
}

/// Text under allowlisted structure that the rules do not mark as
/// boilerplate: a text node counts when its nearest non-unwrap element
/// ancestor is allowlisted and none of its ancestors is blocked. Placeholder
/// tokens are not content and are skipped.
pub fn essential_text(tree: &DomNode, rules: &PruneRules) -> String {
    let mut out = String::new();
    collect_essential(tree, false, rules, &mut out);
    if rules.placeholder_token.is_empty() {
        out
    } else {
        out.replace(&rules.placeholder_token, " ")
    }
}

fn collect_essential(node: &DomNode, allowed: bool, rules: &PruneRules, out: &mut String) {
    if node.is_comment() {
        return;
    }
    if node.is_text() {
        if allowed {
            out.push_str(&node.text);
            out.push(' ');
        }
        return;
    }
    match action_for(node, rules) {
        Action::Drop | Action::Placeholder | Action::LineBreak => return,
        Action::Keep => {}
    }
    let tag = node.tag.to_ascii_lowercase();
    let allowed = if rules.unwrap_tags.contains(&tag) {
        allowed
    } else {
        rules.structural_allowlist.contains(&tag)
    };
    for child in &node.children {
        collect_essential(child, allowed, rules, out);
    }
}

/// Size and essential text of one page version.
#[derive(Debug, Clone, PartialEq)]
pub struct PageMeasure {
    pub bytes: usize,
    pub essential_text: String,
}

impl PageMeasure {
    pub fn of(tree: &DomNode, rules: &PruneRules) -> Self {
        Self {
            bytes: tree.to_html().len(),
            essential_text: essential_text(tree, rules),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionStats {
    pub size_ratio: f64,
    pub text_retention: f64,
}

/// Compares a page before and after pruning. Retention counts
/// non-whitespace characters of essential text and is capped at 1.
pub fn reduction_stats(before: &PageMeasure, after: &PageMeasure) -> Result<ReductionStats, DomError> {
    if before.bytes == 0 {
        return Err(DomError::ZeroBytes);
    }
    let visible = |s: &str| s.chars().filter(|c| !c.is_whitespace()).count();
    let original = visible(&before.essential_text);
    let kept = visible(&after.essential_text);
    let text_retention = if original == 0 {
        1.0
    } else {
        (kept as f64 / original as f64).min(1.0)
    };
    Ok(ReductionStats {
        size_ratio: after.bytes as f64 / before.bytes as f64,
        text_retention,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_html;

    fn el(tag: &str, attrs: &[(&str, &str)], children: Vec<DomNode>) -> DomNode {
        DomNode::element(
            tag,
            attrs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            children,
        )
    }

    fn html(children: Vec<DomNode>) -> DomNode {
        el("html", &[], vec![el("body", &[], children)])
    }

    #[test]
    fn removes_navbar_by_class_substring() {
        let tree = html(vec![
            el("div", &[("class", "navbar-top")], vec![DomNode::text("Home")]),
            el("p", &[], vec![DomNode::text("body")]),
        ]);
        let out = prune(&tree, &PruneRules::default());
        assert_eq!(out, html(vec![el("p", &[], vec![DomNode::text("body")])]));
    }

    #[test]
    fn unwrap_merges_text() {
        let tree = html(vec![el(
            "p",
            &[],
            vec![DomNode::text("a"), el("span", &[], vec![DomNode::text("b")]), DomNode::text("c")],
        )]);
        let out = prune(&tree, &PruneRules::default());
        assert_eq!(out, html(vec![el("p", &[], vec![DomNode::text("abc")])]));
    }

    #[test]
    fn more_link_becomes_placeholder() {
        let tree = html(vec![el("a", &[("class", "more-link")], vec![DomNode::text("Read more")])]);
        let out = prune(&tree, &PruneRules::default());
        assert_eq!(out, html(vec![DomNode::text("END_OF_DOCUMENT_TOKEN_TO_BE_REPLACED")]));
    }

    #[test]
    fn br_comments_and_whitespace() {
        let tree = html(vec![el(
            "p",
            &[],
            vec![
                DomNode::text("  one   two "),
                el("br", &[], vec![]),
                DomNode::comment("hidden"),
                el("br", &[], vec![]),
                el("br", &[], vec![]),
                DomNode::text("\tthree"),
            ],
        )]);
        let out = prune(&tree, &PruneRules::default());
        assert_eq!(out, html(vec![el("p", &[], vec![DomNode::text(" one two\n\nthree")])]));
    }

    #[test]
    fn blocked_root_yields_empty_html() {
        let tree = el("html", &[("class", "menu")], vec![DomNode::text("x")]);
        assert_eq!(prune(&tree, &PruneRules::default()), el("html", &[], vec![]));
    }

    #[test]
    fn class_and_id_matching_is_case_insensitive() {
        let tree = html(vec![
            el("div", &[("id", "SiteFooter")], vec![DomNode::text("c")]),
            el("section", &[("class", "Advertisement")], vec![DomNode::text("buy")]),
            el("p", &[], vec![DomNode::text("keep")]),
        ]);
        let out = prune(&tree, &PruneRules::default());
        assert_eq!(out.text_content(), "keep");
    }

    #[test]
    fn reduction_arithmetic() {
        let same = PageMeasure {
            bytes: 100,
            essential_text: "abc".into(),
        };
        let stats = reduction_stats(&same, &same).unwrap();
        assert_eq!((stats.size_ratio, stats.text_retention), (1.0, 1.0));
        let before = PageMeasure {
            bytes: 10_000,
            essential_text: "x".into(),
        };
        let after = PageMeasure {
            bytes: 1_000,
            essential_text: "x".into(),
        };
        assert!((reduction_stats(&before, &after).unwrap().size_ratio - 0.10).abs() < 1e-12);
        let empty = PageMeasure {
            bytes: 0,
            essential_text: String::new(),
        };
        assert_eq!(reduction_stats(&empty, &after), Err(DomError::ZeroBytes));
    }

    #[test]
    fn parsed_page_prunes_scripts_and_keeps_text() {
        let page = b"<html><head><title>T</title><script>var x = 1;</script></head>\
            <body><nav><a href=/>Home</a></nav><p>Body <i>text</i></p><!-- c --></body></html>";
        let rules = PruneRules::default();
        let tree = parse_html(page, None).unwrap();
        let pruned = prune(&tree, &rules);
        assert_eq!(
            pruned.to_html(),
            "<html><head><title>T</title></head><body><p>Body text</p></body></html>"
        );
        let stats = reduction_stats(&PageMeasure::of(&tree, &rules), &PageMeasure::of(&pruned, &rules)).unwrap();
        assert_eq!(stats.text_retention, 1.0);
        assert!(stats.size_ratio < 1.0);
    }
}
