//! Selector language over parsed documents: tag/class/attribute steps joined
//! by descendant combinators, e.g. `div.w-full a[href]`.

use std::str::FromStr;

use thiserror::Error;

use super::DomNode;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("selector error at position {pos}: {message}")]
pub struct SelectorError {
    pub pos: usize,
    pub message: String,
}

fn err(pos: usize, message: impl Into<String>) -> SelectorError {
    SelectorError {
        pos,
        message: message.into(),
    }
}

/// One step of a selector: optional tag plus class and attribute
/// constraints, all of which must hold.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SelectorStep {
    pub tag: Option<String>,
    pub classes: Vec<String>,
    pub attr_present: Vec<String>,
    pub attr_equals: Vec<(String, String)>,
}

impl SelectorStep {
    fn is_empty(&self) -> bool {
        self.tag.is_none()
            && self.classes.is_empty()
            && self.attr_present.is_empty()
            && self.attr_equals.is_empty()
    }

    /// Whether the element satisfies every constraint of this step. Class
    /// matching is token-wise over the whitespace-split `class` attribute.
    pub fn matches(&self, node: &DomNode) -> bool {
        let DomNode::Element { tag, .. } = node else {
            return false;
        };
        if let Some(want) = &self.tag {
            if tag != want {
                return false;
            }
        }
        if !self.classes.is_empty() {
            let class_attr = node.attr("class").unwrap_or("");
            let tokens: Vec<&str> = class_attr.split_whitespace().collect();
            if !self.classes.iter().all(|c| tokens.contains(&c.as_str())) {
                return false;
            }
        }
        for name in &self.attr_present {
            if node.attr(name).is_none() {
                return false;
            }
        }
        for (name, value) in &self.attr_equals {
            if node.attr(name) != Some(value.as_str()) {
                return false;
            }
        }
        true
    }
}

/// A parsed selector: one or more steps chained by the descendant
/// combinator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selector {
    pub steps: Vec<SelectorStep>,
}

impl FromStr for Selector {
    type Err = SelectorError;

    fn from_str(expr: &str) -> Result<Self, Self::Err> {
        Selector::parse(expr)
    }
}

impl Selector {
    /// Parse a selector expression. Grammar per step:
    /// `tag`? (`.class`)* (`[name]` | `[name=value]`)*, steps separated by
    /// whitespace.
    pub fn parse(expr: &str) -> Result<Selector, SelectorError> {
        if expr.trim().is_empty() {
            return Err(err(0, "empty selector"));
        }
        let bytes = expr.as_bytes();
        let mut steps = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i].is_ascii_whitespace() {
                i += 1;
                continue;
            }
            let step_start = i;
            let mut step = SelectorStep::default();
            // optional tag
            let tag_start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'-') {
                i += 1;
            }
            if i > tag_start {
                step.tag = Some(expr[tag_start..i].to_ascii_lowercase());
            }
            loop {
                if i >= bytes.len() || bytes[i].is_ascii_whitespace() {
                    break;
                }
                match bytes[i] {
                    b'.' => {
                        i += 1;
                        let class_start = i;
                        while i < bytes.len()
                            && !bytes[i].is_ascii_whitespace()
                            && !matches!(bytes[i], b'.' | b'[')
                        {
                            i += 1;
                        }
                        if i == class_start {
                            return Err(err(class_start, "empty class name"));
                        }
                        step.classes.push(expr[class_start..i].to_string());
                    }
                    b'[' => {
                        let bracket_pos = i;
                        i += 1;
                        let name_start = i;
                        while i < bytes.len() && !matches!(bytes[i], b']' | b'=') {
                            i += 1;
                        }
                        if i >= bytes.len() {
                            return Err(err(bracket_pos, "unbalanced `[`"));
                        }
                        let name = expr[name_start..i].trim().to_ascii_lowercase();
                        if name.is_empty() {
                            return Err(err(name_start, "empty attribute name"));
                        }
                        if bytes[i] == b']' {
                            step.attr_present.push(name);
                            i += 1;
                        } else {
                            i += 1; // past '='
                            let value_start = i;
                            while i < bytes.len() && bytes[i] != b']' {
                                i += 1;
                            }
                            if i >= bytes.len() {
                                return Err(err(bracket_pos, "unbalanced `[`"));
                            }
                            let mut value = &expr[value_start..i];
                            if value.len() >= 2
                                && ((value.starts_with('"') && value.ends_with('"'))
                                    || (value.starts_with('\'') && value.ends_with('\'')))
                            {
                                value = &value[1..value.len() - 1];
                            }
                            step.attr_equals.push((name, value.to_string()));
                            i += 1;
                        }
                    }
                    b']' => return Err(err(i, "unmatched `]`")),
                    other => {
                        return Err(err(i, format!("unexpected character `{}`", other as char)))
                    }
                }
            }
            if step.is_empty() {
                return Err(err(step_start, "step has no constraints"));
            }
            steps.push(step);
        }
        if steps.is_empty() {
            return Err(err(0, "empty selector"));
        }
        Ok(Selector { steps })
    }

    /// All element nodes matching the full descendant chain, in document
    /// order, without duplicates.
    pub fn select<'a>(&self, root: &'a DomNode) -> Vec<&'a DomNode> {
        let mut out = Vec::new();
        // reachable[i] == steps 0..i all matched along some ancestor chain
        let mut reachable = vec![false; self.steps.len()];
        reachable[0] = true;
        for child in root.children() {
            self.walk(child, &reachable, &mut out);
        }
        out
    }

    fn walk<'a>(&self, node: &'a DomNode, reachable: &[bool], out: &mut Vec<&'a DomNode>) {
        if !node.is_element() {
            return;
        }
        let mut next = reachable.to_vec();
        let last = self.steps.len() - 1;
        for (i, step) in self.steps.iter().enumerate() {
            if reachable[i] && step.matches(node) {
                if i == last {
                    out.push(node);
                } else {
                    next[i + 1] = true;
                }
            }
        }
        for child in node.children() {
            self.walk(child, &next, out);
        }
    }
}
