//! Lenient HTML parsing and a small selector language for extracting URLs,
//! text, and attributes from page markup.

mod extract;
mod parser;
mod selector;

pub use extract::{
    default_card_selector, extract_dispensary_urls, extract_product, parse_percent,
    parse_price_cents, Capture, ExtractContext, ExtractError, ExtractIssue, ExtractionRules,
    FieldRule, PageExtraction, PageExtractor, DEFAULT_CARD_SELECTOR,
    DEFAULT_PRODUCT_CARD_SELECTOR,
};
pub use parser::parse_html;
pub use selector::{Selector, SelectorError, SelectorStep};

/// One node of a parsed HTML document: an element with attributes and
/// children, or a run of text. Attribute names are lowercase and unique per
/// element, in source order. The document itself is a synthetic root element
/// with tag `#document`.
#[derive(Debug, Clone, PartialEq)]
pub enum DomNode {
    Element {
        tag: String,
        attributes: Vec<(String, String)>,
        children: Vec<DomNode>,
    },
    Text(String),
}

pub const DOCUMENT_TAG: &str = "#document";

impl DomNode {
    pub fn document(children: Vec<DomNode>) -> DomNode {
        DomNode::Element {
            tag: DOCUMENT_TAG.to_string(),
            attributes: Vec::new(),
            children,
        }
    }

    pub fn is_element(&self) -> bool {
        matches!(self, DomNode::Element { .. })
    }

    pub fn tag(&self) -> Option<&str> {
        match self {
            DomNode::Element { tag, .. } => Some(tag),
            DomNode::Text(_) => None,
        }
    }

    pub fn children(&self) -> &[DomNode] {
        match self {
            DomNode::Element { children, .. } => children,
            DomNode::Text(_) => &[],
        }
    }

    /// Attribute value, matching the name case-insensitively. Text nodes and
    /// absent attributes yield `None`.
    pub fn attr(&self, name: &str) -> Option<&str> {
        match self {
            DomNode::Element { attributes, .. } => attributes
                .iter()
                .find(|(n, _)| n.eq_ignore_ascii_case(name))
                .map(|(_, v)| v.as_str()),
            DomNode::Text(_) => None,
        }
    }

    /// Concatenated descendant text in document order, with whitespace runs
    /// collapsed to single spaces and the ends trimmed.
    pub fn text(&self) -> String {
        let mut raw = String::new();
        self.collect_text(&mut raw);
        collapse_whitespace(&raw)
    }

    fn collect_text(&self, out: &mut String) {
        match self {
            DomNode::Text(t) => out.push_str(t),
            DomNode::Element { children, .. } => {
                for child in children {
                    child.collect_text(out);
                }
            }
        }
    }

    /// Number of nodes in the subtree, counting this one.
    pub fn node_count(&self) -> usize {
        1 + self.children().iter().map(DomNode::node_count).sum::<usize>()
    }
}

/// Collapse whitespace runs to single spaces and trim the ends.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut in_ws = false;
    for ch in s.chars() {
        if ch.is_whitespace() {
            in_ws = true;
        } else {
            if in_ws && !out.is_empty() {
                out.push(' ');
            }
            in_ws = false;
            out.push(ch);
        }
    }
    out
}
