//! Minimal YAML node tree with source locations.
//!
//! Workflow analysis needs to know where every scalar lives in the original
//! file, which the usual serde-based loaders discard. This module drives the
//! `yaml-rust2` event parser directly and builds a tree of [`Node`]s that
//! carry their starting line and a byte span into the source. Anchors and
//! aliases are resolved, and `<<` merge keys are expanded, so callers always
//! see effective values.

use std::collections::HashMap;

use yaml_rust2::parser::{Event, MarkedEventReceiver, Parser};
use yaml_rust2::scanner::{Marker, TScalarStyle};

#[derive(Debug, thiserror::Error)]
pub enum YamlError {
    #[error("malformed YAML: {0}")]
    Malformed(String),
    #[error("stream contains {0} documents, expected one")]
    MultiDocument(usize),
    #[error("stream contains no document")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Scalar(String),
    Seq(Vec<Node>),
    Map(Vec<(Node, Node)>),
}

/// A YAML node and the region of the source it was read from.
///
/// `start` is exact. `end` is an upper bound: the position of the parser
/// event that followed the node, which may include trailing whitespace and
/// comments.
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub value: Value,
    pub line: usize,
    pub start: usize,
    pub end: usize,
}

impl Node {
    pub fn as_str(&self) -> Option<&str> {
        match &self.value {
            Value::Scalar(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self.value, Value::Null)
    }

    pub fn as_map(&self) -> Option<&[(Node, Node)]> {
        match &self.value {
            Value::Map(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_seq(&self) -> Option<&[Node]> {
        match &self.value {
            Value::Seq(s) => Some(s),
            _ => None,
        }
    }

    /// Looks up a mapping entry by its string key.
    pub fn get(&self, key: &str) -> Option<&Node> {
        self.entry(key).map(|(_, v)| v)
    }

    pub fn entry(&self, key: &str) -> Option<(&Node, &Node)> {
        self.as_map()?
            .iter()
            .find(|(k, _)| k.as_str() == Some(key))
            .map(|(k, v)| (k, v))
    }

    /// Visits every scalar in this subtree (keys excluded) in document order.
    pub fn for_each_scalar<'a>(&'a self, f: &mut dyn FnMut(&'a Node, &'a str)) {
        match &self.value {
            Value::Null => {}
            Value::Scalar(s) => f(self, s),
            Value::Seq(items) => items.iter().for_each(|n| n.for_each_scalar(f)),
            Value::Map(entries) => entries.iter().for_each(|(_, v)| v.for_each_scalar(f)),
        }
    }
}

/// Parses a single-document YAML stream.
pub fn load(source: &str) -> Result<Node, YamlError> {
    let mut builder = Builder::new(source);
    let mut parser = Parser::new_from_str(source);
    parser
        .load(&mut builder, true)
        .map_err(|e| YamlError::Malformed(e.to_string()))?;
    if builder.documents.len() > 1 {
        return Err(YamlError::MultiDocument(builder.documents.len()));
    }
    let mut doc = builder.documents.pop().ok_or(YamlError::Empty)?;
    builder.close_scalar_spans(&mut doc, source.len());
    Ok(doc)
}

enum Frame {
    Seq {
        anchor: usize,
        mark: Marker,
        items: Vec<Node>,
    },
    Map {
        anchor: usize,
        mark: Marker,
        entries: Vec<(Node, Node)>,
        pending_key: Option<Node>,
    },
}

struct Builder {
    /// Byte offset of each char index; the parser's markers count chars.
    char_to_byte: Vec<usize>,
    stack: Vec<Frame>,
    anchors: HashMap<usize, Node>,
    documents: Vec<Node>,
    current_doc: Option<Node>,
    /// Byte position of every event, in stream order (non-decreasing).
    positions: Vec<usize>,
}

impl Builder {
    fn new(source: &str) -> Self {
        let mut char_to_byte: Vec<usize> = source.char_indices().map(|(i, _)| i).collect();
        char_to_byte.push(source.len());
        Builder {
            char_to_byte,
            stack: Vec::new(),
            anchors: HashMap::new(),
            documents: Vec::new(),
            current_doc: None,
            positions: Vec::new(),
        }
    }

    fn byte(&self, mark: &Marker) -> usize {
        let idx = mark.index().min(self.char_to_byte.len() - 1);
        self.char_to_byte[idx]
    }

    fn insert(&mut self, node: Node) {
        match self.stack.last_mut() {
            None => self.current_doc = Some(node),
            Some(Frame::Seq { items, .. }) => items.push(node),
            Some(Frame::Map {
                entries,
                pending_key,
                ..
            }) => match pending_key.take() {
                None => *pending_key = Some(node),
                Some(key) => entries.push((key, node)),
            },
        }
    }

    /// Scalar ends are the position of the first later event.
    fn close_scalar_spans(&self, node: &mut Node, eof: usize) {
        match &mut node.value {
            Value::Scalar(_) | Value::Null => {
                if node.end <= node.start {
                    let i = self.positions.partition_point(|&p| p <= node.start);
                    node.end = self.positions.get(i).copied().unwrap_or(eof);
                }
            }
            Value::Seq(items) => items
                .iter_mut()
                .for_each(|n| self.close_scalar_spans(n, eof)),
            Value::Map(entries) => entries.iter_mut().for_each(|(k, v)| {
                self.close_scalar_spans(k, eof);
                self.close_scalar_spans(v, eof);
            }),
        }
    }
}

fn is_null_scalar(text: &str, style: TScalarStyle) -> bool {
    style == TScalarStyle::Plain && matches!(text, "" | "~" | "null" | "Null" | "NULL")
}

fn expand_merge_keys(entries: Vec<(Node, Node)>) -> Vec<(Node, Node)> {
    if !entries.iter().any(|(k, _)| k.as_str() == Some("<<")) {
        return entries;
    }
    let mut explicit: Vec<(Node, Node)> = Vec::new();
    let mut merged: Vec<(Node, Node)> = Vec::new();
    for (k, v) in entries {
        if k.as_str() == Some("<<") {
            let sources: Vec<Node> = match v.value {
                Value::Seq(items) => items,
                _ => vec![v],
            };
            for src in sources {
                if let Value::Map(src_entries) = src.value {
                    for (sk, sv) in src_entries {
                        if !merged.iter().any(|(mk, _)| mk.value == sk.value) {
                            merged.push((sk, sv));
                        }
                    }
                }
            }
        } else {
            explicit.push((k, v));
        }
    }
    for (mk, mv) in merged {
        if !explicit.iter().any(|(ek, _)| ek.value == mk.value) {
            explicit.push((mk, mv));
        }
    }
    explicit
}

impl MarkedEventReceiver for Builder {
    fn on_event(&mut self, ev: Event, mark: Marker) {
        let at = self.byte(&mark);
        self.positions.push(at);
        match ev {
            Event::Nothing | Event::StreamStart | Event::StreamEnd | Event::DocumentStart => {}
            Event::DocumentEnd => {
                let doc = self.current_doc.take().unwrap_or(Node {
                    value: Value::Null,
                    line: 1,
                    start: 0,
                    end: 0,
                });
                self.documents.push(doc);
            }
            Event::Alias(id) => {
                // Aliased content keeps the anchor's spans.
                let node = self.anchors.get(&id).cloned().unwrap_or(Node {
                    value: Value::Null,
                    line: mark.line(),
                    start: at,
                    end: at,
                });
                self.insert(node);
            }
            Event::Scalar(text, style, anchor, _tag) => {
                let value = if is_null_scalar(&text, style) {
                    Value::Null
                } else {
                    Value::Scalar(text)
                };
                let node = Node {
                    value,
                    line: mark.line(),
                    start: at,
                    end: at,
                };
                if anchor > 0 {
                    self.anchors.insert(anchor, node.clone());
                }
                self.insert(node);
            }
            Event::SequenceStart(anchor, _) => self.stack.push(Frame::Seq {
                anchor,
                mark,
                items: Vec::new(),
            }),
            Event::MappingStart(anchor, _) => self.stack.push(Frame::Map {
                anchor,
                mark,
                entries: Vec::new(),
                pending_key: None,
            }),
            Event::SequenceEnd | Event::MappingEnd => {
                let (anchor, start_mark, value) = match self.stack.pop() {
                    Some(Frame::Seq {
                        anchor,
                        mark,
                        items,
                    }) => (anchor, mark, Value::Seq(items)),
                    Some(Frame::Map {
                        anchor,
                        mark,
                        entries,
                        ..
                    }) => (anchor, mark, Value::Map(expand_merge_keys(entries))),
                    None => return,
                };
                let node = Node {
                    value,
                    line: start_mark.line(),
                    start: self.byte(&start_mark),
                    end: at,
                };
                if anchor > 0 {
                    self.anchors.insert(anchor, node.clone());
                }
                self.insert(node);
            }
        }
    }
}
