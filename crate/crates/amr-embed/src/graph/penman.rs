//! PENMAN notation reader and writer.
//!
//! `parse_penman` accepts one parenthesized expression, with "# ..." comment
//! lines allowed anywhere before or inside it. `read_corpus` handles whole
//! files: graphs separated by blank lines, each optionally preceded by
//! "# ::key value" metadata lines that end up in a side map, never in the graph.
//!
//! Errors carry the byte offset into the text handed to the parser.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use super::{AmrGraph, Edge, Node, NodeId};

/// Nesting depth cap; inputs deeper than this are rejected instead of
/// overflowing the stack, keeping the parser total on arbitrary bytes.
const MAX_DEPTH: usize = 512;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PenmanError {
    #[error("empty input")]
    EmptyInput,
    #[error("unbalanced parentheses at byte {offset}")]
    UnbalancedParens { offset: usize },
    #[error("duplicate variable `{var}` at byte {offset}")]
    DuplicateVariable { var: String, offset: usize },
    #[error("reference to undefined variable `{var}` at byte {offset}")]
    DanglingReference { var: String, offset: usize },
    #[error("{message} at byte {offset}")]
    Malformed { message: String, offset: usize },
}

fn malformed(message: impl Into<String>, offset: usize) -> PenmanError {
    PenmanError::Malformed { message: message.into(), offset }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    LParen,
    RParen,
    Slash,
    Role(&'a str),
    Atom(&'a str),
    Str(&'a str),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    text: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer { src: text.as_bytes(), pos: 0, text }
    }

    /// Skip whitespace and comment lines ('#' as the first non-blank byte of a line).
    fn skip_trivia(&mut self) {
        let mut at_line_start = self.pos == 0 || self.src.get(self.pos.wrapping_sub(1)) == Some(&b'\n');
        while self.pos < self.src.len() {
            let b = self.src[self.pos];
            if b == b'\n' {
                at_line_start = true;
                self.pos += 1;
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' && at_line_start {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn is_delim(b: u8) -> bool {
        b.is_ascii_whitespace() || matches!(b, b'(' | b')' | b'/' | b'"' | b':')
    }

    fn next_tok(&mut self) -> Result<Option<(usize, Tok<'a>)>, PenmanError> {
        self.skip_trivia();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let b = self.src[start];
        let tok = match b {
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'"' => {
                self.pos += 1;
                loop {
                    match self.src.get(self.pos) {
                        None => return Err(malformed("unterminated string", start)),
                        Some(b'\\') => self.pos += 2,
                        Some(b'"') => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => self.pos += 1,
                    }
                }
                Tok::Str(&self.text[start..self.pos.min(self.src.len())])
            }
            b':' => {
                self.pos += 1;
                while self.pos < self.src.len() && !Self::is_delim(self.src[self.pos]) {
                    self.pos += 1;
                }
                Tok::Role(&self.text[start..self.pos])
            }
            _ => {
                while self.pos < self.src.len() && !Self::is_delim(self.src[self.pos]) {
                    self.pos += 1;
                }
                Tok::Atom(&self.text[start..self.pos])
            }
        };
        Ok(Some((start, tok)))
    }
}

use super::{constant_shaped, variable_shaped};

struct Parser<'a> {
    lexer: Lexer<'a>,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    defined: HashMap<String, ()>,
    /// (edge index, referenced token, byte offset) left to resolve once all
    /// variable definitions are known; forward references are legal.
    pending: Vec<(usize, String, usize)>,
    synthetic: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Parser {
            lexer: Lexer::new(text),
            nodes: Vec::new(),
            edges: Vec::new(),
            defined: HashMap::new(),
            pending: Vec::new(),
            synthetic: 0,
        }
    }

    fn fresh_attribute(&mut self, lexeme: &str) -> NodeId {
        // '#' never lexes into a token, so synthetic ids cannot collide with variables.
        let id = NodeId::new(format!("#{}", self.synthetic));
        self.synthetic += 1;
        self.nodes.push(Node { id: id.clone(), concept: lexeme.to_string(), attribute: true });
        id
    }

    fn parse_node(&mut self, open_offset: usize, depth: usize) -> Result<NodeId, PenmanError> {
        if depth > MAX_DEPTH {
            return Err(malformed("nesting too deep", open_offset));
        }

        let (var_off, var) = match self.lexer.next_tok()? {
            Some((off, Tok::Atom(a))) => (off, a.to_string()),
            Some((off, _)) => return Err(malformed("expected a variable after '('", off)),
            None => return Err(PenmanError::UnbalancedParens { offset: open_offset }),
        };
        if self.defined.insert(var.clone(), ()).is_some() {
            return Err(PenmanError::DuplicateVariable { var, offset: var_off });
        }
        let id = NodeId::new(var);
        self.nodes.push(Node { id: id.clone(), concept: String::new(), attribute: false });
        let node_index = self.nodes.len() - 1;

        match self.lexer.next_tok()? {
            Some((_, Tok::Slash)) => {}
            Some((off, _)) => return Err(malformed("expected '/' after the variable", off)),
            None => return Err(PenmanError::UnbalancedParens { offset: open_offset }),
        }
        match self.lexer.next_tok()? {
            Some((_, Tok::Atom(c))) => self.nodes[node_index].concept = c.to_string(),
            Some((_, Tok::Str(s))) => self.nodes[node_index].concept = s.to_string(),
            Some((off, _)) => return Err(malformed("expected a concept after '/'", off)),
            None => return Err(PenmanError::UnbalancedParens { offset: open_offset }),
        }

        loop {
            match self.lexer.next_tok()? {
                Some((_, Tok::RParen)) => return Ok(id),
                Some((role_off, Tok::Role(role))) => {
                    if !super::role_is_valid(role) {
                        return Err(malformed(format!("invalid role `{role}`"), role_off));
                    }
                    let role = role.to_string();
                    match self.lexer.next_tok()? {
                        Some((child_off, Tok::LParen)) => {
                            // Record the edge before descending so sibling order
                            // survives; patch the target afterwards.
                            let edge_index = self.edges.len();
                            self.edges.push(Edge {
                                source: id.clone(),
                                role,
                                target: NodeId::new(String::new()),
                            });
                            let child = self.parse_node(child_off, depth + 1)?;
                            self.edges[edge_index].target = child;
                        }
                        Some((off, Tok::Atom(a))) => {
                            let edge_index = self.edges.len();
                            self.edges.push(Edge {
                                source: id.clone(),
                                role,
                                target: NodeId::new(String::new()),
                            });
                            self.pending.push((edge_index, a.to_string(), off));
                        }
                        Some((_, Tok::Str(s))) => {
                            let s = s.to_string();
                            let target = self.fresh_attribute(&s);
                            self.edges.push(Edge { source: id.clone(), role, target });
                        }
                        Some((off, _)) => {
                            return Err(malformed(format!("role `{role}` needs a value"), off))
                        }
                        None => return Err(malformed(format!("role `{role}` needs a value"), role_off)),
                    }
                }
                Some((off, _)) => return Err(malformed("expected a role or ')'", off)),
                None => return Err(PenmanError::UnbalancedParens { offset: open_offset }),
            }
        }
    }

    fn resolve_pending(&mut self) -> Result<(), PenmanError> {
        let pending = std::mem::take(&mut self.pending);
        for (edge_index, token, offset) in pending {
            let target = if self.defined.contains_key(&token) {
                NodeId::new(token)
            } else if constant_shaped(&token) {
                self.fresh_attribute(&token)
            } else if variable_shaped(&token) {
                return Err(PenmanError::DanglingReference { var: token, offset });
            } else {
                // Unquoted word constants like "imperative" or "expressive".
                self.fresh_attribute(&token)
            };
            self.edges[edge_index].target = target;
        }
        Ok(())
    }
}

/// Parse one PENMAN expression into a graph.
pub fn parse_penman(text: &str) -> Result<AmrGraph, PenmanError> {
    let mut parser = Parser::new(text);

    let root = match parser.lexer.next_tok()? {
        None => return Err(PenmanError::EmptyInput),
        Some((off, Tok::LParen)) => parser.parse_node(off, 0)?,
        Some((off, Tok::RParen)) => return Err(PenmanError::UnbalancedParens { offset: off }),
        Some((off, _)) => return Err(malformed("expected '('", off)),
    };
    if let Some((off, tok)) = parser.lexer.next_tok()? {
        return Err(match tok {
            Tok::RParen => PenmanError::UnbalancedParens { offset: off },
            _ => malformed("trailing content after the graph", off),
        });
    }
    parser.resolve_pending()?;

    Ok(AmrGraph { nodes: parser.nodes, edges: parser.edges, root })
}

/// Serialize a valid graph back to PENMAN text (single line).
///
/// Reentrant targets are emitted as bare variables on every visit after the
/// first, and attribute leaves as their literal, so `parse_penman` recovers an
/// isomorphic graph.
pub fn serialize_penman(g: &AmrGraph) -> String {
    let mut out = String::new();
    let mut visited: Vec<&NodeId> = Vec::new();
    write_node(g, &g.root, &mut visited, &mut out);
    out
}

fn write_node<'a>(g: &'a AmrGraph, id: &'a NodeId, visited: &mut Vec<&'a NodeId>, out: &mut String) {
    let node = match g.node(id) {
        Some(n) => n,
        None => {
            let _ = write!(out, "{id}");
            return;
        }
    };
    if node.attribute {
        out.push_str(&node.concept);
        return;
    }
    if visited.contains(&id) {
        let _ = write!(out, "{id}");
        return;
    }
    visited.push(id);
    let _ = write!(out, "({} / {}", node.id, node.concept);
    for edge in g.edges_from(id) {
        let _ = write!(out, " {} ", edge.role);
        write_node(g, &edge.target, visited, out);
    }
    out.push(')');
}

/// One corpus block: metadata side map plus the parsed graph.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub metadata: BTreeMap<String, String>,
    pub graph: AmrGraph,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("graph {index}: {source}")]
    Parse {
        index: usize,
        #[source]
        source: PenmanError,
    },
}

/// Read a whole PENMAN file: graphs separated by blank lines, "# ::key value"
/// lines collected into each entry's metadata map.
pub fn read_corpus(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut entries = Vec::new();
    let mut block = String::new();
    let mut metadata = BTreeMap::new();
    let mut has_content = false;

    let flush = |block: &mut String,
                     metadata: &mut BTreeMap<String, String>,
                     has_content: &mut bool,
                     entries: &mut Vec<CorpusEntry>|
     -> Result<(), CorpusError> {
        if *has_content {
            let graph = parse_penman(block)
                .map_err(|source| CorpusError::Parse { index: entries.len(), source })?;
            entries.push(CorpusEntry { metadata: std::mem::take(metadata), graph });
        } else {
            metadata.clear();
        }
        block.clear();
        *has_content = false;
        Ok(())
    };

    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut block, &mut metadata, &mut has_content, &mut entries)?;
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix("# ::") {
            let (key, value) = match rest.split_once(char::is_whitespace) {
                Some((k, v)) => (k, v.trim()),
                None => (rest, ""),
            };
            metadata.insert(key.to_string(), value.to_string());
            continue;
        }
        if !trimmed.starts_with('#') {
            has_content = true;
        }
        block.push_str(line);
        block.push('\n');
    }
    flush(&mut block, &mut metadata, &mut has_content, &mut entries)?;

    Ok(entries)
}

/// Write entries in the layout `read_corpus` accepts.
pub fn write_corpus(entries: &[CorpusEntry]) -> String {
    let mut out = String::new();
    for (i, entry) in entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (key, value) in &entry.metadata {
            if value.is_empty() {
                let _ = writeln!(out, "# ::{key}");
            } else {
                let _ = writeln!(out, "# ::{key} {value}");
            }
        }
        let _ = writeln!(out, "{}", serialize_penman(&entry.graph));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate;

    #[test]
    fn minimal_graph() {
        let g = parse_penman("(d / dog)").unwrap();
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.edges.len(), 0);
        assert_eq!(g.root, NodeId::new("d"));
        assert_eq!(g.nodes[0].concept, "dog");
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn three_node_graph() {
        let g = parse_penman("(b / belong-01 :ARG0 (i / i) :ARG1 (d / dog))").unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 2);
        assert_eq!(g.root, NodeId::new("b"));
        assert_eq!(g.edges[0], Edge::new("b", ":ARG0", "i"));
        assert_eq!(g.edges[1], Edge::new("b", ":ARG1", "d"));
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn unclosed_paren_is_unbalanced() {
        assert_eq!(
            parse_penman("(d / dog"),
            Err(PenmanError::UnbalancedParens { offset: 0 })
        );
    }

    #[test]
    fn extra_close_paren_is_unbalanced() {
        assert_eq!(
            parse_penman("(d / dog))"),
            Err(PenmanError::UnbalancedParens { offset: 9 })
        );
    }

    #[test]
    fn empty_input_variants() {
        assert_eq!(parse_penman(""), Err(PenmanError::EmptyInput));
        assert_eq!(parse_penman("  \n\t "), Err(PenmanError::EmptyInput));
        assert_eq!(parse_penman("# ::id 1\n# comment\n"), Err(PenmanError::EmptyInput));
    }

    #[test]
    fn duplicate_variable_offset_points_at_second_definition() {
        let text = "(a / alpha :ARG0 (a / apple))";
        let err = parse_penman(text).unwrap_err();
        assert_eq!(err, PenmanError::DuplicateVariable { var: "a".into(), offset: 18 });
    }

    #[test]
    fn reentrancy_becomes_second_edge() {
        let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))").unwrap();
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.edges.len(), 3);
        assert_eq!(g.reentrancy_count(), 1);
        assert_eq!(g.edges[2], Edge::new("g", ":ARG0", "b"));
    }

    #[test]
    fn forward_reference_resolves() {
        let g = parse_penman("(a / alpha :ARG0 b :ARG1 (b / beta))").unwrap();
        assert_eq!(g.edges[0], Edge::new("a", ":ARG0", "b"));
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn dangling_variable_reference_is_an_error() {
        let err = parse_penman("(a / alpha :ARG0 b2)").unwrap_err();
        assert_eq!(err, PenmanError::DanglingReference { var: "b2".into(), offset: 17 });
    }

    #[test]
    fn constants_become_attribute_leaves() {
        let g = parse_penman("(d / dog :quant 5 :polarity - :mode imperative :wiki \"Dog\")").unwrap();
        assert_eq!(g.nodes.len(), 5);
        assert_eq!(g.edges.len(), 4);
        let target_concept = |role: &str| {
            let e = g.edges.iter().find(|e| e.role == role).unwrap();
            let n = g.node(&e.target).unwrap();
            assert!(n.attribute);
            n.concept.as_str()
        };
        assert_eq!(target_concept(":quant"), "5");
        assert_eq!(target_concept(":polarity"), "-");
        assert_eq!(target_concept(":mode"), "imperative");
        assert_eq!(target_concept(":wiki"), "\"Dog\"");
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn negative_numbers_are_constants() {
        let g = parse_penman("(t / temperature :quant -5.5)").unwrap();
        assert!(g.nodes.iter().any(|n| n.attribute && n.concept == "-5.5"));
    }

    #[test]
    fn metadata_lines_are_ignored_by_parse() {
        let g = parse_penman("# ::id s1\n# ::snt The dog.\n(d / dog)").unwrap();
        assert_eq!(g.nodes.len(), 1);
    }

    #[test]
    fn malformed_structures_are_rejected_with_offsets() {
        assert!(matches!(parse_penman("(d dog)"), Err(PenmanError::Malformed { .. })));
        assert!(matches!(parse_penman("(d /)"), Err(PenmanError::Malformed { .. })));
        assert!(matches!(parse_penman("(d / dog :ARG0)"), Err(PenmanError::Malformed { .. })));
        assert!(matches!(parse_penman("(d / dog) x"), Err(PenmanError::Malformed { .. })));
        assert!(matches!(parse_penman("dog"), Err(PenmanError::Malformed { .. })));
        assert!(matches!(parse_penman("(d / \"dog)"), Err(PenmanError::Malformed { .. })));
    }

    #[test]
    fn serialize_minimal() {
        let g = AmrGraph::singleton("d", "dog");
        assert_eq!(serialize_penman(&g), "(d / dog)");
    }

    #[test]
    fn serialize_emits_reentrancy_as_bare_variable() {
        let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))").unwrap();
        assert_eq!(
            serialize_penman(&g),
            "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))"
        );
    }

    #[test]
    fn serialize_keeps_attributes_inline() {
        let text = "(d / dog :quant 5 :wiki \"Dog\")";
        let g = parse_penman(text).unwrap();
        assert_eq!(serialize_penman(&g), text);
    }

    #[test]
    fn serialize_handles_cycles_without_diverging() {
        let g = parse_penman("(a / alpha :ARG0 (b / beta :ARG0 a))").unwrap();
        assert_eq!(serialize_penman(&g), "(a / alpha :ARG0 (b / beta :ARG0 a))");
    }

    #[test]
    fn corpus_round_trip_with_metadata() {
        let text = "# ::id s0\n# ::snt The dog barks.\n(d / dog)\n\n# ::id s1\n(c / cat)\n";
        let entries = read_corpus(text).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].metadata.get("id").map(String::as_str), Some("s0"));
        assert_eq!(entries[0].metadata.get("snt").map(String::as_str), Some("The dog barks."));
        assert_eq!(entries[1].metadata.get("id").map(String::as_str), Some("s1"));

        let written = write_corpus(&entries);
        let reread = read_corpus(&written).unwrap();
        assert_eq!(entries, reread);
    }

    #[test]
    fn corpus_parse_error_names_the_block() {
        let err = read_corpus("(d / dog)\n\n(c / cat").unwrap_err();
        let CorpusError::Parse { index, .. } = err;
        assert_eq!(index, 1);
    }

    #[test]
    fn empty_corpus_is_ok() {
        assert!(read_corpus("").unwrap().is_empty());
        assert!(read_corpus("\n\n# just a comment\n").unwrap().is_empty());
    }

    #[test]
    fn parser_copes_with_multiline_layout() {
        let text = "(b / belong-01\n      :ARG0 (i / i)\n      :ARG1 (d / dog))";
        let g = parse_penman(text).unwrap();
        assert_eq!(g.nodes.len(), 3);
    }
}
