//! HTML `content` to normalized text lines.
//!
//! Only text inside `p`, `h1`-`h4`, `td` and the dump's custom `rd` element
//! is kept. When allowed elements nest, each passage is emitted by the
//! innermost allowed element that contains it, so nothing is emitted twice.

use std::fmt;

use html5gum::{DefaultEmitter, Token, Tokenizer};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceTag {
    P,
    H1,
    H2,
    H3,
    H4,
    Td,
    Rd,
}

impl SourceTag {
    fn from_name(name: &[u8]) -> Option<Self> {
        Some(match name {
            b"p" => SourceTag::P,
            b"h1" => SourceTag::H1,
            b"h2" => SourceTag::H2,
            b"h3" => SourceTag::H3,
            b"h4" => SourceTag::H4,
            b"td" => SourceTag::Td,
            b"rd" => SourceTag::Rd,
            _ => return None,
        })
    }

    /// Paragraph-like elements cannot contain one another; a new one closes
    /// the open one.
    fn is_paragraph_like(self) -> bool {
        !matches!(self, SourceTag::Td)
    }
}

impl fmt::Display for SourceTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceTag::P => "p",
            SourceTag::H1 => "h1",
            SourceTag::H2 => "h2",
            SourceTag::H3 => "h3",
            SourceTag::H4 => "h4",
            SourceTag::Td => "td",
            SourceTag::Rd => "rd",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedLine {
    pub text: String,
    pub source_tag: SourceTag,
}

/// Collapses every whitespace run (NBSP included) to a single space and trims.
pub fn normalize_line(raw: &str) -> String {
    // char::is_whitespace covers U+00A0, U+2007, U+202F and the other Zs chars.
    raw.split(char::is_whitespace)
        .filter(|s| !s.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

// Start tags that implicitly close an open paragraph in HTML.
const CLOSES_PARAGRAPH: &[&[u8]] = &[
    b"address",
    b"article",
    b"aside",
    b"blockquote",
    b"div",
    b"dl",
    b"fieldset",
    b"footer",
    b"form",
    b"h5",
    b"h6",
    b"header",
    b"hr",
    b"li",
    b"main",
    b"nav",
    b"ol",
    b"pre",
    b"section",
    b"table",
    b"ul",
];

// Elements whose text content is never visible.
const HIDDEN: &[&[u8]] = &[
    b"script",
    b"style",
    b"head",
    b"title",
    b"template",
    b"noscript",
];

struct Open {
    tag: SourceTag,
    buf: String,
}

struct LineCollector {
    stack: Vec<Open>,
    hidden_depth: usize,
    lines: Vec<ExtractedLine>,
}

impl LineCollector {
    fn flush(&mut self, idx: usize) {
        let open = &mut self.stack[idx];
        let text = normalize_line(&open.buf);
        open.buf.clear();
        if text.is_empty() {
            return;
        }
        if self.lines.last().is_some_and(|l| l.text == text) {
            return;
        }
        self.lines.push(ExtractedLine {
            text,
            source_tag: open.tag,
        });
    }

    /// Pops and flushes every element above and including `idx`.
    fn close_from(&mut self, idx: usize) {
        while self.stack.len() > idx {
            let top = self.stack.len() - 1;
            self.flush(top);
            self.stack.pop();
        }
    }

    fn close_open_paragraph(&mut self) {
        if let Some(idx) = self.stack.iter().rposition(|o| o.tag.is_paragraph_like()) {
            // A td above the paragraph is a separate cell context; leave it.
            if !self.stack[idx..].iter().any(|o| o.tag == SourceTag::Td) {
                self.close_from(idx);
            }
        }
    }

    fn start(&mut self, name: &[u8], self_closing: bool) {
        if HIDDEN.contains(&name) {
            if !self_closing {
                self.hidden_depth += 1;
            }
            return;
        }
        if name == b"br" {
            self.text(" ");
            return;
        }
        if CLOSES_PARAGRAPH.contains(&name) {
            self.close_open_paragraph();
            return;
        }
        let Some(tag) = SourceTag::from_name(name) else {
            return;
        };
        if tag.is_paragraph_like() {
            self.close_open_paragraph();
        } else if let Some(idx) = self.stack.iter().rposition(|o| o.tag == SourceTag::Td) {
            self.close_from(idx);
        }
        // Text gathered so far by the enclosing element precedes the child.
        if let Some(top) = self.stack.len().checked_sub(1) {
            self.flush(top);
        }
        if !self_closing {
            self.stack.push(Open {
                tag,
                buf: String::new(),
            });
        }
    }

    fn end(&mut self, name: &[u8]) {
        if HIDDEN.contains(&name) {
            self.hidden_depth = self.hidden_depth.saturating_sub(1);
            return;
        }
        match name {
            b"br" => self.text(" "),
            b"tr" | b"table" => {
                if let Some(idx) = self.stack.iter().position(|o| o.tag == SourceTag::Td) {
                    self.close_from(idx);
                }
            }
            _ => {
                if let Some(tag) = SourceTag::from_name(name) {
                    if let Some(idx) = self.stack.iter().rposition(|o| o.tag == tag) {
                        self.close_from(idx);
                    }
                }
            }
        }
    }

    fn text(&mut self, s: &str) {
        if self.hidden_depth > 0 {
            return;
        }
        if let Some(top) = self.stack.last_mut() {
            top.buf.push_str(s);
        }
    }
}

/// Extracts the visible text lines of an HTML fragment in document order.
///
/// Lines are normalized with [`normalize_line`]; empty lines and a line equal
/// to the immediately preceding emitted line are dropped. Repeats that are
/// not adjacent are kept. Malformed markup is tokenized leniently and never
/// fails.
pub fn extract_lines(html: &str) -> Vec<ExtractedLine> {
    let mut collector = LineCollector {
        stack: Vec::new(),
        hidden_depth: 0,
        lines: Vec::new(),
    };
    let mut emitter = DefaultEmitter::default();
    emitter.naively_switch_states(true);
    for token in Tokenizer::new_with_emitter(html, emitter) {
        let Ok(token) = token;
        match token {
            Token::StartTag(tag) => collector.start(&tag.name, tag.self_closing),
            Token::EndTag(tag) => collector.end(&tag.name),
            Token::String(s) => collector.text(&String::from_utf8_lossy(&s)),
            Token::Comment(_) | Token::Doctype(_) | Token::Error(_) => {}
        }
    }
    collector.close_from(0);
    collector.lines
}

/// Convenience for callers that only need the texts.
pub fn extract_texts(html: &str) -> Vec<String> {
    extract_lines(html).into_iter().map(|l| l.text).collect()
}
