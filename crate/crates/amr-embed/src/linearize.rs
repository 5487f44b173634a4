//! Depth-first graph linearization.
//!
//! Two schemes share one traversal (root first, edges in source order,
//! parentheses marking depth):
//!
//! * [`Scheme::VariableFree`]: no variables at all. A node seen again off the
//!   DFS stack is repeated as `( concept )`; a node on the stack (directed
//!   cycle) is emitted as its bare concept. Reentrancy becomes unrecoverable,
//!   which is the accepted trade-off for shorter sequences.
//! * [`Scheme::VariableAnnotated`]: the pointer-token baseline this scheme
//!   replaces. Every node carries a `<Rn>` token on first visit and is
//!   referenced by `<Rn>` alone afterwards. Kept for length comparisons; exact
//!   token shapes are internal.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::graph::{constant_shaped, AmrGraph, Edge, Node, NodeId};

pub const MAX_DEPTH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    VariableFree,
    VariableAnnotated,
}

/// Token sequence produced by [`linearize`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearSeq {
    pub tokens: Vec<String>,
    pub source_graph_id: Option<String>,
    pub scheme: Scheme,
}

impl LinearSeq {
    /// Tokens joined by single spaces, the on-disk line format.
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinearizeError {
    #[error("malformed sequence: {0}")]
    MalformedSequence(String),
    #[error("empty corpus")]
    EmptyCorpus,
}

/// Flatten a graph into a token sequence by DFS from the root.
pub fn linearize(g: &AmrGraph, scheme: Scheme) -> LinearSeq {
    let mut tokens = Vec::new();
    match scheme {
        Scheme::VariableFree => {
            let mut stack = Vec::new();
            let mut visited = Vec::new();
            walk_free(g, &g.root, &mut stack, &mut visited, &mut tokens);
        }
        Scheme::VariableAnnotated => {
            let mut pointers = HashMap::new();
            walk_annotated(g, &g.root, &mut pointers, &mut tokens);
        }
    }
    LinearSeq { tokens, source_graph_id: None, scheme }
}

fn walk_free<'a>(
    g: &'a AmrGraph,
    id: &'a NodeId,
    stack: &mut Vec<&'a NodeId>,
    visited: &mut Vec<&'a NodeId>,
    out: &mut Vec<String>,
) {
    let concept = match g.node(id) {
        Some(n) => n.concept.clone(),
        None => id.0.clone(),
    };
    if stack.contains(&id) {
        out.push(concept);
        return;
    }
    out.push("(".into());
    out.push(concept);
    if visited.contains(&id) {
        out.push(")".into());
        return;
    }
    visited.push(id);
    stack.push(id);
    for edge in g.edges_from(id) {
        out.push(edge.role.clone());
        walk_free(g, &edge.target, stack, visited, out);
    }
    stack.pop();
    out.push(")".into());
}

fn walk_annotated<'a>(
    g: &'a AmrGraph,
    id: &'a NodeId,
    pointers: &mut HashMap<&'a NodeId, usize>,
    out: &mut Vec<String>,
) {
    if let Some(k) = pointers.get(&id) {
        out.push(format!("<R{k}>"));
        return;
    }
    let concept = match g.node(id) {
        Some(n) => n.concept.clone(),
        None => id.0.clone(),
    };
    let k = pointers.len();
    pointers.insert(id, k);
    out.push("(".into());
    out.push(format!("<R{k}>"));
    out.push(concept);
    for edge in g.edges_from(id) {
        out.push(edge.role.clone());
        walk_annotated(g, &edge.target, pointers, out);
    }
    out.push(")".into());
}

/// Rebuild the DFS expansion tree from a variable-free sequence.
///
/// Repeated nodes stay duplicated and bare cycle markers collapse to leaves
/// (the information loss is real); fresh variables n0, n1, ... are assigned
/// in traversal order. Exact inverse of [`linearize`] only for trees.
pub fn delinearize(seq: &LinearSeq) -> Result<AmrGraph, LinearizeError> {
    if seq.scheme != Scheme::VariableFree {
        return Err(LinearizeError::MalformedSequence(
            "only variable-free sequences can be delinearized".into(),
        ));
    }
    let tokens = &seq.tokens;
    if tokens.is_empty() {
        return Err(LinearizeError::MalformedSequence("empty sequence".into()));
    }

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut pos = 0usize;
    let root = parse_tree(tokens, &mut pos, &mut nodes, &mut edges, 0)?;
    if pos != tokens.len() {
        return Err(LinearizeError::MalformedSequence(format!(
            "trailing tokens after position {pos}"
        )));
    }
    Ok(AmrGraph { nodes, edges, root })
}

fn is_role_token(t: &str) -> bool {
    t.starts_with(':')
}

fn is_concept_token(t: &str) -> bool {
    t != "(" && t != ")" && !is_role_token(t)
}

fn fresh_node(nodes: &mut Vec<Node>, concept: &str) -> NodeId {
    let id = NodeId::new(format!("n{}", nodes.len()));
    nodes.push(Node {
        id: id.clone(),
        concept: concept.to_string(),
        attribute: constant_shaped(concept),
    });
    id
}

fn parse_tree(
    tokens: &[String],
    pos: &mut usize,
    nodes: &mut Vec<Node>,
    edges: &mut Vec<Edge>,
    depth: usize,
) -> Result<NodeId, LinearizeError> {
    if depth > MAX_DEPTH {
        return Err(LinearizeError::MalformedSequence("nesting too deep".into()));
    }
    match tokens.get(*pos).map(String::as_str) {
        Some("(") => {}
        Some(other) => {
            return Err(LinearizeError::MalformedSequence(format!(
                "expected '(' at position {}, found `{other}`",
                *pos
            )))
        }
        None => return Err(LinearizeError::MalformedSequence("expected '('".into())),
    }
    *pos += 1;

    let concept = match tokens.get(*pos).map(String::as_str) {
        Some(t) if is_concept_token(t) => t,
        _ => {
            return Err(LinearizeError::MalformedSequence(format!(
                "expected a concept at position {}",
                *pos
            )))
        }
    };
    *pos += 1;
    let id = fresh_node(nodes, concept);

    loop {
        match tokens.get(*pos).map(String::as_str) {
            Some(")") => {
                *pos += 1;
                return Ok(id);
            }
            Some(role) if is_role_token(role) => {
                let role = role.to_string();
                *pos += 1;
                let child = match tokens.get(*pos).map(String::as_str) {
                    Some("(") => parse_tree(tokens, pos, nodes, edges, depth + 1)?,
                    Some(t) if is_concept_token(t) => {
                        // Bare concept: a cycle broken during linearization.
                        let leaf = fresh_node(nodes, t);
                        *pos += 1;
                        leaf
                    }
                    _ => {
                        return Err(LinearizeError::MalformedSequence(format!(
                            "role `{role}` has no child at position {}",
                            *pos
                        )))
                    }
                };
                edges.push(Edge { source: id.clone(), role, target: child });
            }
            Some(other) => {
                return Err(LinearizeError::MalformedSequence(format!(
                    "expected a role or ')' at position {}, found `{other}`",
                    *pos
                )))
            }
            None => {
                return Err(LinearizeError::MalformedSequence("unbalanced parentheses".into()))
            }
        }
    }
}

/// Token counts for one graph under both schemes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphLengths {
    pub variable_free: usize,
    pub variable_annotated: usize,
    /// annotated / free.
    pub ratio: f64,
}

/// Corpus-level length comparison between the two schemes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthStats {
    pub per_graph: Vec<GraphLengths>,
    pub mean_variable_free: f64,
    pub mean_variable_annotated: f64,
    pub mean_ratio: f64,
}

/// Compare sequence lengths under both schemes over a corpus.
pub fn length_stats(corpus: &[AmrGraph]) -> Result<LengthStats, LinearizeError> {
    if corpus.is_empty() {
        return Err(LinearizeError::EmptyCorpus);
    }
    let per_graph: Vec<GraphLengths> = corpus
        .iter()
        .map(|g| {
            let free = linearize(g, Scheme::VariableFree).tokens.len();
            let annotated = linearize(g, Scheme::VariableAnnotated).tokens.len();
            GraphLengths {
                variable_free: free,
                variable_annotated: annotated,
                ratio: annotated as f64 / free as f64,
            }
        })
        .collect();
    let n = per_graph.len() as f64;
    Ok(LengthStats {
        mean_variable_free: per_graph.iter().map(|s| s.variable_free as f64).sum::<f64>() / n,
        mean_variable_annotated: per_graph.iter().map(|s| s.variable_annotated as f64).sum::<f64>() / n,
        mean_ratio: per_graph.iter().map(|s| s.ratio).sum::<f64>() / n,
        per_graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::penman::parse_penman;

    fn seq(text: &str, scheme: Scheme) -> LinearSeq {
        linearize(&parse_penman(text).unwrap(), scheme)
    }

    #[test]
    fn single_node_free() {
        assert_eq!(seq("(d / dog)", Scheme::VariableFree).joined(), "( dog )");
    }

    #[test]
    fn three_node_free() {
        assert_eq!(
            seq("(b / belong-01 :ARG0 (i / i) :ARG1 (d / dog))", Scheme::VariableFree).joined(),
            "( belong-01 :ARG0 ( i ) :ARG1 ( dog ) )"
        );
    }

    #[test]
    fn reentrant_node_is_repeated_and_reentrancy_lost() {
        assert_eq!(
            seq("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))", Scheme::VariableFree)
                .joined(),
            "( want-01 :ARG0 ( boy ) :ARG1 ( go-01 :ARG0 ( boy ) ) )"
        );
    }

    #[test]
    fn annotated_uses_pointer_tokens_for_reentrancy() {
        assert_eq!(
            seq("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))", Scheme::VariableAnnotated)
                .joined(),
            "( <R0> want-01 :ARG0 ( <R1> boy ) :ARG1 ( <R2> go-01 :ARG0 <R1> ) )"
        );
    }

    #[test]
    fn known_token_counts() {
        let cases = [
            ("(d / dog)", 3, 4),
            ("(b / belong-01 :ARG0 (i / i) :ARG1 (d / dog))", 11, 14),
            ("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))", 15, 16),
        ];
        for (text, free, annotated) in cases {
            assert_eq!(seq(text, Scheme::VariableFree).tokens.len(), free, "{text}");
            assert_eq!(seq(text, Scheme::VariableAnnotated).tokens.len(), annotated, "{text}");
        }
    }

    #[test]
    fn cycle_emits_bare_concept_and_terminates() {
        assert_eq!(
            seq("(a / alpha :ARG0 (b / beta :ARG0 a))", Scheme::VariableFree).joined(),
            "( alpha :ARG0 ( beta :ARG0 alpha ) )"
        );
        assert_eq!(
            seq("(a / alpha :ARG0 (b / beta :ARG0 a))", Scheme::VariableAnnotated).joined(),
            "( <R0> alpha :ARG0 ( <R1> beta :ARG0 <R0> ) )"
        );
    }

    #[test]
    fn attributes_traverse_uniformly() {
        assert_eq!(
            seq("(d / dog :quant 5)", Scheme::VariableFree).joined(),
            "( dog :quant ( 5 ) )"
        );
    }

    #[test]
    fn parens_balance_in_both_schemes() {
        for scheme in [Scheme::VariableFree, Scheme::VariableAnnotated] {
            let s = seq("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))", scheme);
            let open = s.tokens.iter().filter(|t| *t == "(").count();
            let close = s.tokens.iter().filter(|t| *t == ")").count();
            assert_eq!(open, close);
        }
    }

    #[test]
    fn variable_free_has_no_pointer_or_variable_tokens() {
        let s = seq("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))", Scheme::VariableFree);
        assert!(s.tokens.iter().all(|t| !t.starts_with("<R")));
        for var in ["w", "b", "g"] {
            assert!(!s.tokens.iter().any(|t| t == var));
        }
    }

    #[test]
    fn linearize_is_deterministic() {
        let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))").unwrap();
        assert_eq!(linearize(&g, Scheme::VariableFree), linearize(&g, Scheme::VariableFree));
    }

    #[test]
    fn delinearize_single_node() {
        let g = delinearize(&seq("(d / dog)", Scheme::VariableFree)).unwrap();
        assert_eq!(g.nodes.len(), 1);
        assert_eq!(g.nodes[0].concept, "dog");
        assert_eq!(g.root, NodeId::new("n0"));
    }

    #[test]
    fn delinearize_duplicates_the_repeated_node() {
        let g = delinearize(&seq(
            "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-01 :ARG0 b))",
            Scheme::VariableFree,
        ))
        .unwrap();
        assert_eq!(g.nodes.len(), 4);
        let concepts: Vec<&str> = g.nodes.iter().map(|n| n.concept.as_str()).collect();
        assert_eq!(concepts, vec!["want-01", "boy", "go-01", "boy"]);
        assert_eq!(g.edges.len(), 3);
        assert!(crate::graph::validate(&g).is_empty());
    }

    #[test]
    fn delinearize_rejects_malformed_sequences() {
        let broken = [
            vec!["(", "dog"],
            vec!["(", "dog", ":ARG0", ")"],
            vec![")", "dog", "("],
            vec![],
            vec!["(", "dog", ")", "extra"],
            vec!["(", ":ARG0", ")"],
        ];
        for tokens in broken {
            let s = LinearSeq {
                tokens: tokens.into_iter().map(String::from).collect(),
                source_graph_id: None,
                scheme: Scheme::VariableFree,
            };
            assert!(matches!(delinearize(&s), Err(LinearizeError::MalformedSequence(_))));
        }
    }

    #[test]
    fn delinearize_rejects_annotated_scheme() {
        let s = seq("(d / dog)", Scheme::VariableAnnotated);
        assert!(delinearize(&s).is_err());
    }

    #[test]
    fn length_stats_report_per_graph_and_means() {
        let corpus = vec![
            parse_penman("(d / dog)").unwrap(),
            parse_penman("(b / belong-01 :ARG0 (i / i) :ARG1 (d / dog))").unwrap(),
        ];
        let stats = length_stats(&corpus).unwrap();
        assert_eq!(stats.per_graph.len(), 2);
        assert_eq!(stats.per_graph[0].variable_free, 3);
        assert_eq!(stats.per_graph[0].variable_annotated, 4);
        assert!((stats.mean_variable_free - 7.0).abs() < 1e-12);
        assert!((stats.mean_variable_annotated - 9.0).abs() < 1e-12);
        assert!(stats.per_graph.iter().all(|s| s.ratio > 1.0));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert_eq!(length_stats(&[]), Err(LinearizeError::EmptyCorpus));
    }
}
