//! Rooted, labeled AMR graphs: the data model every later stage consumes.
//!
//! Graphs are plain data with public fields. Well-formed values come out of
//! [`penman::parse_penman`]; tests and callers may build arbitrary shapes by
//! hand and ask [`validate`] which invariants they break.

pub mod penman;

use std::collections::{HashMap, HashSet};
use std::fmt;

/// Variable name identifying a node within one graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(s: impl Into<String>) -> Self {
        NodeId(s.into())
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One concept node.
///
/// Attribute literals (numbers, quoted strings, "-") are modeled as leaf nodes
/// carrying the literal as concept, a synthetic id, and `attribute = true`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    pub concept: String,
    pub attribute: bool,
}

impl Node {
    pub fn new(id: impl Into<String>, concept: impl Into<String>) -> Self {
        Node { id: NodeId::new(id), concept: concept.into(), attribute: false }
    }
}

/// Directed labeled edge. `role` keeps its leading ':'.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: NodeId,
    pub role: String,
    pub target: NodeId,
}

impl Edge {
    pub fn new(source: impl Into<String>, role: impl Into<String>, target: impl Into<String>) -> Self {
        Edge { source: NodeId::new(source), role: role.into(), target: NodeId::new(target) }
    }
}

/// Rooted directed graph of concepts and roles, possibly with reentrancies
/// (nodes with more than one incoming edge). Immutable by convention after
/// construction; nothing in this crate mutates a parsed graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub root: NodeId,
}

impl AmrGraph {
    /// Single-node graph, the smallest valid value.
    pub fn singleton(id: impl Into<String>, concept: impl Into<String>) -> Self {
        let node = Node::new(id, concept);
        let root = node.id.clone();
        AmrGraph { nodes: vec![node], edges: Vec::new(), root }
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    /// Outgoing edges of `id`, in source order.
    pub fn edges_from<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a Edge> {
        self.edges.iter().filter(move |e| &e.source == id)
    }

    /// Count of nodes with more than one incoming edge.
    pub fn reentrancy_count(&self) -> usize {
        let mut incoming: HashMap<&NodeId, usize> = HashMap::new();
        for e in &self.edges {
            *incoming.entry(&e.target).or_insert(0) += 1;
        }
        incoming.values().filter(|&&c| c > 1).count()
    }
}

/// True for role labels of the form `:[A-Za-z0-9-]+`.
pub fn role_is_valid(role: &str) -> bool {
    match role.strip_prefix(':') {
        Some(rest) => !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-'),
        None => false,
    }
}

/// Tokens that can only be attribute constants: quoted strings, numbers, and
/// the polarity/mode markers "-" / "+".
pub(crate) fn constant_shaped(t: &str) -> bool {
    if t == "-" || t == "+" || t.starts_with('"') {
        return true;
    }
    let unsigned = t.strip_prefix(['-', '+']).unwrap_or(t);
    unsigned.bytes().next().is_some_and(|b| b.is_ascii_digit())
        || (unsigned.starts_with('.') && unsigned.as_bytes().get(1).is_some_and(u8::is_ascii_digit))
}

/// Variable shape per AMR convention: one to three lowercase letters, then
/// optional digits ("b", "b2", "ii", "s12").
pub(crate) fn variable_shaped(t: &str) -> bool {
    let letters = t.bytes().take_while(u8::is_ascii_lowercase).count();
    (1..=3).contains(&letters) && t.bytes().skip(letters).all(|b| b.is_ascii_digit())
}

/// One broken invariant found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    MissingRoot { root: NodeId },
    DuplicateVariable { id: NodeId },
    Unreachable { node: NodeId },
    DanglingEdge { role: String, endpoint: NodeId },
    EmptyConcept { node: NodeId },
    BadRole { role: String },
    AttributeWithChildren { node: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MissingRoot { root } => write!(f, "root `{root}` is not a node"),
            Violation::DuplicateVariable { id } => write!(f, "duplicate variable `{id}`"),
            Violation::Unreachable { node } => write!(f, "node `{node}` unreachable from root"),
            Violation::DanglingEdge { role, endpoint } => {
                write!(f, "edge {role} references missing node `{endpoint}`")
            }
            Violation::EmptyConcept { node } => write!(f, "node `{node}` has an empty concept"),
            Violation::BadRole { role } => write!(f, "role `{role}` is not `:[A-Za-z0-9-]+`"),
            Violation::AttributeWithChildren { node } => {
                write!(f, "attribute literal `{node}` has outgoing edges")
            }
        }
    }
}

/// Check every graph invariant; empty result means the graph is valid.
pub fn validate(g: &AmrGraph) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut seen: HashSet<&NodeId> = HashSet::new();
    for n in &g.nodes {
        if !seen.insert(&n.id) {
            out.push(Violation::DuplicateVariable { id: n.id.clone() });
        }
        if n.concept.is_empty() {
            out.push(Violation::EmptyConcept { node: n.id.clone() });
        }
    }

    let ids: HashSet<&NodeId> = g.nodes.iter().map(|n| &n.id).collect();
    for e in &g.edges {
        if !role_is_valid(&e.role) {
            out.push(Violation::BadRole { role: e.role.clone() });
        }
        for endpoint in [&e.source, &e.target] {
            if !ids.contains(endpoint) {
                out.push(Violation::DanglingEdge { role: e.role.clone(), endpoint: endpoint.clone() });
            }
        }
    }

    for n in &g.nodes {
        if n.attribute && g.edges_from(&n.id).next().is_some() {
            out.push(Violation::AttributeWithChildren { node: n.id.clone() });
        }
    }

    if !ids.contains(&g.root) {
        out.push(Violation::MissingRoot { root: g.root.clone() });
        return out;
    }

    let mut reached: HashSet<&NodeId> = HashSet::new();
    let mut stack = vec![&g.root];
    while let Some(id) = stack.pop() {
        if !reached.insert(id) {
            continue;
        }
        for e in g.edges_from(id) {
            if ids.contains(&e.target) {
                stack.push(&e.target);
            }
        }
    }
    for n in &g.nodes {
        if !reached.contains(&n.id) {
            out.push(Violation::Unreachable { node: n.id.clone() });
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn belong_graph() -> AmrGraph {
        AmrGraph {
            nodes: vec![
                Node::new("b", "belong-01"),
                Node::new("i", "i"),
                Node::new("d", "dog"),
            ],
            edges: vec![Edge::new("b", ":ARG0", "i"), Edge::new("b", ":ARG1", "d")],
            root: NodeId::new("b"),
        }
    }

    #[test]
    fn valid_three_node_graph_has_no_violations() {
        assert!(validate(&belong_graph()).is_empty());
    }

    #[test]
    fn unreachable_node_is_reported() {
        let mut g = belong_graph();
        g.nodes.push(Node::new("x", "stray"));
        assert_eq!(
            validate(&g),
            vec![Violation::Unreachable { node: NodeId::new("x") }]
        );
    }

    #[test]
    fn duplicate_variable_is_reported() {
        let mut g = belong_graph();
        g.nodes.push(Node::new("b", "other"));
        let v = validate(&g);
        assert!(v.contains(&Violation::DuplicateVariable { id: NodeId::new("b") }));
    }

    #[test]
    fn dangling_edge_and_bad_role_are_reported() {
        let mut g = belong_graph();
        g.edges.push(Edge::new("b", "ARG2", "zz"));
        let v = validate(&g);
        assert!(v.contains(&Violation::BadRole { role: "ARG2".into() }));
        assert!(v.contains(&Violation::DanglingEdge { role: "ARG2".into(), endpoint: NodeId::new("zz") }));
    }

    #[test]
    fn missing_root_is_reported() {
        let mut g = belong_graph();
        g.root = NodeId::new("nope");
        assert!(validate(&g).contains(&Violation::MissingRoot { root: NodeId::new("nope") }));
    }

    #[test]
    fn attribute_with_children_is_reported() {
        let mut g = belong_graph();
        g.nodes[2].attribute = true;
        g.edges.push(Edge::new("d", ":mod", "i"));
        let v = validate(&g);
        assert!(v.contains(&Violation::AttributeWithChildren { node: NodeId::new("d") }));
    }

    #[test]
    fn reentrancy_count_sees_shared_targets() {
        let g = AmrGraph {
            nodes: vec![Node::new("w", "want-01"), Node::new("b", "boy"), Node::new("g", "go-01")],
            edges: vec![
                Edge::new("w", ":ARG0", "b"),
                Edge::new("w", ":ARG1", "g"),
                Edge::new("g", ":ARG0", "b"),
            ],
            root: NodeId::new("w"),
        };
        assert_eq!(g.reentrancy_count(), 1);
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn role_shape() {
        assert!(role_is_valid(":ARG0"));
        assert!(role_is_valid(":ARG0-of"));
        assert!(role_is_valid(":op1"));
        assert!(!role_is_valid("ARG0"));
        assert!(!role_is_valid(":"));
        assert!(!role_is_valid(":ARG 0"));
    }
}
