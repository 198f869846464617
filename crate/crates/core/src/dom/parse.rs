use encoding_rs::{Encoding, UTF_8};
use scraper::{Html, Node};

use super::{DomError, DomNode};

/// Deeper subtrees are dropped; real pages stay far below this.
const MAX_DEPTH: usize = 512;

/// Decodes page bytes: BOM first, then the declared charset (HTTP header or
/// `<meta charset>` in the first kilobyte), falling back to lossy UTF-8.
pub fn decode_html(payload: &[u8], charset_hint: Option<&str>) -> String {
    if let Some((encoding, bom_len)) = Encoding::for_bom(payload) {
        return encoding.decode_without_bom_handling(&payload[bom_len..]).0.into_owned();
    }
    let encoding = charset_hint
        .and_then(|label| Encoding::for_label(label.trim().as_bytes()))
        .or_else(|| sniff_meta_charset(payload))
        .unwrap_or(UTF_8);
    encoding.decode_without_bom_handling(payload).0.into_owned()
}

fn sniff_meta_charset(payload: &[u8]) -> Option<&'static Encoding> {
    let head = &payload[..payload.len().min(1024)];
    let head = String::from_utf8_lossy(head).to_ascii_lowercase();
    let at = head.find("charset=")? + "charset=".len();
    let value: String = head[at..]
        .trim_start_matches(['"', '\''])
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | ':' | '.'))
        .collect();
    Encoding::for_label(value.as_bytes())
}

/// Parses HTML into a [`DomNode`] tree rooted at `html`.
///
/// Source line breaks inside text are insignificant in HTML and are turned
/// into spaces here, so every `\n` that later appears in a pruned tree comes
/// from a `<br>`.
pub fn parse_html(payload: &[u8], charset_hint: Option<&str>) -> Result<DomNode, DomError> {
    let decoded = decode_html(payload, charset_hint);
    if decoded.trim().is_empty() {
        return Err(DomError::EmptyDocument);
    }
    let document = Html::parse_document(&decoded);
    let root = document
        .tree
        .root()
        .children()
        .find(|n| n.value().as_element().is_some_and(|e| e.name() == "html"));
    Ok(match root {
        Some(html) => convert(html, 0).unwrap_or_else(|| DomNode::element("html", vec![], vec![])),
        None => DomNode::element("html", vec![], vec![]),
    })
}

fn convert(node: ego_tree::NodeRef<'_, Node>, depth: usize) -> Option<DomNode> {
    match node.value() {
        Node::Element(el) => {
            let children = if depth >= MAX_DEPTH {
                Vec::new()
            } else {
                node.children().filter_map(|c| convert(c, depth + 1)).collect()
            };
            let attributes = el
                .attrs()
                .map(|(k, v)| (k.to_ascii_lowercase(), v.to_string()))
                .collect();
            Some(DomNode::element(el.name().to_ascii_lowercase(), attributes, children))
        }
        Node::Text(text) => Some(DomNode::text(text.replace(['\r', '\n'], " "))),
        Node::Comment(comment) => Some(DomNode::comment(comment.to_string())),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn body(tree: &DomNode) -> &DomNode {
        tree.children.iter().find(|c| c.tag == "body").unwrap()
    }

    #[test]
    fn minimal_paragraph() {
        let tree = parse_html(b"<p>hi</p>", None).unwrap();
        assert_eq!(tree.tag, "html");
        let p = &body(&tree).children[0];
        assert_eq!(p.tag, "p");
        assert_eq!(p.children, vec![DomNode::text("hi")]);
    }

    #[test]
    fn unclosed_paragraphs_become_siblings() {
        let tree = parse_html(b"<p>a<p>b", None).unwrap();
        let tags: Vec<_> = body(&tree).children.iter().map(|c| (c.tag.as_str(), c.text_content())).collect();
        assert_eq!(tags, vec![("p", "a".to_string()), ("p", "b".to_string())]);
    }

    #[test]
    fn stray_end_tags_are_dropped() {
        let tree = parse_html(b"<div>a</span></em>b</div>", None).unwrap();
        assert_eq!(body(&tree).children[0].text_content(), "ab");
    }

    #[test]
    fn empty_payload_is_rejected() {
        assert_eq!(parse_html(b"", None), Err(DomError::EmptyDocument));
        assert_eq!(parse_html(b"  \n ", None), Err(DomError::EmptyDocument));
    }

    #[test]
    fn honours_charset_hint_and_meta() {
        // "café" in windows-1252
        let bytes = b"<p>caf\xe9</p>";
        let tree = parse_html(bytes, Some("windows-1252")).unwrap();
        assert_eq!(tree.text_content(), "café");
        let with_meta = b"<meta charset=\"iso-8859-1\"><p>caf\xe9</p>";
        assert_eq!(parse_html(with_meta, None).unwrap().text_content(), "café");
        // Misdeclared pages fall back to lossy UTF-8 only when nothing is declared.
        assert_eq!(parse_html(bytes, None).unwrap().text_content(), "caf\u{FFFD}");
    }

    #[test]
    fn source_newlines_become_spaces() {
        let tree = parse_html(b"<p>one\ntwo</p>", None).unwrap();
        assert_eq!(tree.text_content(), "one two");
    }
}
