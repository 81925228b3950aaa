//! Lenient HTML parser. Never fails: unclosed tags are auto-closed at their
//! parent's boundary, unknown tags are kept, stray close tags are ignored,
//! and anything that is not recognizable markup becomes text.

use super::DomNode;

/// Elements that never take children.
const VOID_ELEMENTS: [&str; 14] = [
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param", "source",
    "track", "wbr",
];

/// Nesting cap: opens beyond this depth become leaf children, keeping tree
/// depth (and recursion over it) bounded on adversarial input.
const MAX_DEPTH: usize = 512;

fn is_void(tag: &str) -> bool {
    VOID_ELEMENTS.contains(&tag)
}

struct OpenElement {
    tag: String,
    attributes: Vec<(String, String)>,
    children: Vec<DomNode>,
}

/// Parse HTML text into a document tree rooted at a synthetic `#document`
/// element. Accepts any input; irrecoverably non-HTML text yields a root
/// with a single text node.
pub fn parse_html(source: &str) -> DomNode {
    let bytes = source.as_bytes();
    let mut stack = vec![OpenElement {
        tag: super::DOCUMENT_TAG.to_string(),
        attributes: Vec::new(),
        children: Vec::new(),
    }];
    let mut pos = 0;
    let mut text_start = 0;

    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        let rest = &bytes[pos + 1..];
        if rest.starts_with(b"!--") {
            flush_text(source, text_start, pos, &mut stack);
            pos = match find_subslice(bytes, b"-->", pos + 4) {
                Some(end) => end + 3,
                None => bytes.len(),
            };
            text_start = pos;
        } else if rest.first().is_some_and(|b| *b == b'!' || *b == b'?') {
            // doctype or processing instruction: drop it
            flush_text(source, text_start, pos, &mut stack);
            pos = match memchr(bytes, b'>', pos + 1) {
                Some(end) => end + 1,
                None => bytes.len(),
            };
            text_start = pos;
        } else if rest.first().is_some_and(|b| *b == b'/') {
            if let Some((tag, next)) = scan_close_tag(bytes, pos) {
                flush_text(source, text_start, pos, &mut stack);
                close_open_element(&tag, &mut stack);
                pos = next;
                text_start = pos;
            } else {
                pos += 1; // literal '<'
            }
        } else if rest.first().is_some_and(|b| b.is_ascii_alphabetic()) {
            let (element, self_closing, next) = scan_open_tag(source, pos);
            flush_text(source, text_start, pos, &mut stack);
            if self_closing || is_void(&element.tag) || stack.len() >= MAX_DEPTH {
                let node = DomNode::Element {
                    tag: element.tag,
                    attributes: element.attributes,
                    children: Vec::new(),
                };
                stack.last_mut().expect("root never popped").children.push(node);
            } else {
                stack.push(element);
            }
            pos = next;
            text_start = pos;
        } else {
            pos += 1; // stray '<' stays literal text
        }
    }
    flush_text(source, text_start, bytes.len(), &mut stack);

    // auto-close everything still open at end of input
    while stack.len() > 1 {
        let open = stack.pop().expect("len checked");
        let node = DomNode::Element {
            tag: open.tag,
            attributes: open.attributes,
            children: open.children,
        };
        stack.last_mut().expect("root remains").children.push(node);
    }
    let root = stack.pop().expect("root");
    DomNode::Element {
        tag: root.tag,
        attributes: root.attributes,
        children: root.children,
    }
}

fn flush_text(source: &str, start: usize, end: usize, stack: &mut [OpenElement]) {
    if start >= end {
        return;
    }
    let text = decode_entities(&source[start..end]);
    if text.is_empty() {
        return;
    }
    stack
        .last_mut()
        .expect("root never popped")
        .children
        .push(DomNode::Text(text));
}

/// Close the nearest open element named `tag`, folding everything opened
/// after it (the auto-close rule); unmatched close tags are ignored.
fn close_open_element(tag: &str, stack: &mut Vec<OpenElement>) {
    let Some(depth) = stack.iter().rposition(|open| open.tag == tag) else {
        return;
    };
    if depth == 0 {
        return; // never pop the synthetic root
    }
    while stack.len() > depth {
        let open = stack.pop().expect("depth bounded");
        let node = DomNode::Element {
            tag: open.tag,
            attributes: open.attributes,
            children: open.children,
        };
        stack.last_mut().expect("depth > 0").children.push(node);
    }
}

fn scan_close_tag(bytes: &[u8], start: usize) -> Option<(String, usize)> {
    // start points at '<', bytes[start+1] == '/'
    let mut i = start + 2;
    let name_start = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
        i += 1;
    }
    if i == name_start {
        return None;
    }
    let name = String::from_utf8_lossy(&bytes[name_start..i]).to_ascii_lowercase();
    while i < bytes.len() && bytes[i] != b'>' {
        i += 1;
    }
    let end = if i < bytes.len() { i + 1 } else { bytes.len() };
    Some((name, end))
}

/// Scan an open tag starting at `<`. Returns the element, whether it was
/// explicitly self-closing, and the position just past the closing `>`.
fn scan_open_tag(source: &str, start: usize) -> (OpenElement, bool, usize) {
    let bytes = source.as_bytes();
    let mut i = start + 1;
    let name_start = i;
    while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
        i += 1;
    }
    let tag = source[name_start..i].to_ascii_lowercase();
    let mut attributes: Vec<(String, String)> = Vec::new();
    let mut self_closing = false;

    loop {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i >= bytes.len() {
            break;
        }
        match bytes[i] {
            b'>' => {
                i += 1;
                break;
            }
            b'/' => {
                i += 1;
                if i < bytes.len() && bytes[i] == b'>' {
                    self_closing = true;
                    i += 1;
                    break;
                }
            }
            _ => {
                let attr_start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && !matches!(bytes[i], b'=' | b'>' | b'/') {
                    i += 1;
                }
                let name = source[attr_start..i].to_ascii_lowercase();
                while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                    i += 1;
                }
                let value = if i < bytes.len() && bytes[i] == b'=' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_whitespace() {
                        i += 1;
                    }
                    if i < bytes.len() && (bytes[i] == b'"' || bytes[i] == b'\'') {
                        let quote = bytes[i];
                        i += 1;
                        let val_start = i;
                        while i < bytes.len() && bytes[i] != quote {
                            i += 1;
                        }
                        let val = &source[val_start..i];
                        if i < bytes.len() {
                            i += 1; // past the closing quote
                        }
                        decode_entities(val)
                    } else {
                        let val_start = i;
                        while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                            i += 1;
                        }
                        decode_entities(&source[val_start..i])
                    }
                } else {
                    String::new()
                };
                if !name.is_empty() && !attributes.iter().any(|(n, _)| *n == name) {
                    attributes.push((name, value));
                }
            }
        }
    }

    (
        OpenElement {
            tag,
            attributes,
            children: Vec::new(),
        },
        self_closing,
        i,
    )
}

/// Decode the named entities that appear in escaped text plus numeric
/// references; unknown entities pass through verbatim.
pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let mut rest = s;
    while let Some(amp) = rest.find('&') {
        out.push_str(&rest[..amp]);
        rest = &rest[amp..];
        // byte search keeps us off multi-byte char boundaries; ';' is ASCII
        let window = &rest.as_bytes()[..rest.len().min(12)];
        let semi = match window.iter().position(|b| *b == b';') {
            Some(i) => i,
            None => {
                out.push('&');
                rest = &rest[1..];
                continue;
            }
        };
        let entity = &rest[1..semi];
        let decoded = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" => Some('\''),
            "nbsp" => Some('\u{a0}'),
            _ => entity
                .strip_prefix('#')
                .and_then(|num| {
                    if let Some(hex) = num.strip_prefix('x').or_else(|| num.strip_prefix('X')) {
                        u32::from_str_radix(hex, 16).ok()
                    } else {
                        num.parse::<u32>().ok()
                    }
                })
                .and_then(char::from_u32),
        };
        match decoded {
            Some(ch) => {
                out.push(ch);
                rest = &rest[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &rest[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

fn memchr(bytes: &[u8], needle: u8, from: usize) -> Option<usize> {
    bytes[from..].iter().position(|b| *b == needle).map(|i| i + from)
}

fn find_subslice(bytes: &[u8], needle: &[u8], from: usize) -> Option<usize> {
    if from >= bytes.len() {
        return None;
    }
    bytes[from..]
        .windows(needle.len())
        .position(|w| w == needle)
        .map(|i| i + from)
}
