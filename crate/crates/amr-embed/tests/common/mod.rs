//! Shared helpers: a seeded random graph generator, a variable-blind
//! isomorphism oracle, gradient-check utilities, and a deterministic
//! text-vector synthesizer.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use amr_embed::contrastive::{
    batch_loss, loss_gradient, EmbeddingVector, Encoder, TrainError, TrainableEncoder, Triplet,
};
use amr_embed::encoder::MeanPoolEncoder;
use amr_embed::graph::{AmrGraph, Edge, Node, NodeId};
use amr_embed::seed::derive_seed;
use amr_embed::store::VectorStore;
use amr_embed::vocab::{build_vocab, byte_base};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub const MAX_NODES: usize = 20;

const CONCEPTS: [&str; 14] = [
    "want-01", "go-02", "boy", "girl", "city", "believe-01", "dog", "run-02", "team", "house",
    "storm", "and", "person", "say-01",
];
const ROLES: [&str; 10] = [
    ":ARG0", ":ARG1", ":ARG2", ":mod", ":time", ":location", ":op1", ":op2", ":manner",
    ":ARG0-of",
];
const ATTR_ROLES: [&str; 4] = [":quant", ":polarity", ":value", ":mode"];
const ATTR_VALUES: [&str; 5] = ["3", "-", "\"Zed\"", "200", "+"];

/// Random rooted graph: a spanning tree over at most [`MAX_NODES`] concept
/// nodes, up to 30% extra edges (reentrancies, possibly cycles or parallel
/// duplicates, never landing on attributes), and occasional attribute leaves.
pub fn random_graph(rng: &mut ChaCha8Rng) -> AmrGraph {
    random_graph_with(rng, true)
}

/// Like [`random_graph`] but without the extra edges: every concept node has
/// exactly one parent.
pub fn random_tree(rng: &mut ChaCha8Rng) -> AmrGraph {
    random_graph_with(rng, false)
}

fn random_graph_with(rng: &mut ChaCha8Rng, reentrancy: bool) -> AmrGraph {
    let n = rng.gen_range(1..=MAX_NODES);
    let mut nodes: Vec<Node> = (0..n)
        .map(|i| Node::new(format!("n{i}"), *CONCEPTS.choose(rng).unwrap()))
        .collect();
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = rng.gen_range(0..i);
        edges.push(Edge::new(format!("n{parent}"), *ROLES.choose(rng).unwrap(), format!("n{i}")));
    }
    let extra = if reentrancy { ((n as f64) * 0.3 * rng.gen::<f64>()) as usize } else { 0 };
    for _ in 0..extra {
        let src = rng.gen_range(0..n);
        let dst = rng.gen_range(0..n);
        edges.push(Edge::new(format!("n{src}"), *ROLES.choose(rng).unwrap(), format!("n{dst}")));
    }
    for i in 0..n {
        if rng.gen::<f64>() < 0.25 {
            let id = format!("a{i}");
            nodes.push(Node {
                id: NodeId::new(&id),
                concept: ATTR_VALUES.choose(rng).unwrap().to_string(),
                attribute: true,
            });
            edges.push(Edge::new(format!("n{i}"), *ATTR_ROLES.choose(rng).unwrap(), id));
        }
    }
    AmrGraph { nodes, edges, root: NodeId::new("n0") }
}

/// DFS event stream with variables renamed in first-visit order. Graphs with
/// matching per-source edge order are isomorphic modulo variable names iff
/// their streams are equal; every reachable edge appears exactly once.
pub fn canonical_events(g: &AmrGraph) -> Vec<String> {
    fn visit(
        g: &AmrGraph,
        id: &NodeId,
        names: &mut HashMap<NodeId, usize>,
        out: &mut Vec<String>,
    ) {
        let node = g.node(id).expect("edge target exists");
        if node.attribute {
            out.push(format!("attr {}", node.concept));
            return;
        }
        if let Some(&k) = names.get(id) {
            out.push(format!("ref {k}"));
            return;
        }
        let k = names.len();
        names.insert(id.clone(), k);
        out.push(format!("node {k} {}", node.concept));
        for e in g.edges_from(id) {
            out.push(format!("edge {}", e.role));
            visit(g, &e.target, names, out);
        }
        out.push("up".to_string());
    }
    let mut out = Vec::new();
    visit(g, &g.root.clone(), &mut HashMap::new(), &mut out);
    out
}

pub fn assert_isomorphic(a: &AmrGraph, b: &AmrGraph) {
    assert_eq!(canonical_events(a), canonical_events(b), "graphs differ structurally");
}

/// Rename every variable to `{prefix}{k}`, keeping structure intact. Attribute
/// ids are renamed too; they never appear in serialized output.
pub fn rename_variables(g: &AmrGraph, prefix: &str) -> AmrGraph {
    let map: HashMap<NodeId, NodeId> = g
        .nodes
        .iter()
        .enumerate()
        .map(|(k, n)| (n.id.clone(), NodeId::new(format!("{prefix}{k}"))))
        .collect();
    AmrGraph {
        nodes: g
            .nodes
            .iter()
            .map(|n| Node { id: map[&n.id].clone(), concept: n.concept.clone(), attribute: n.attribute })
            .collect(),
        edges: g
            .edges
            .iter()
            .map(|e| Edge {
                source: map[&e.source].clone(),
                role: e.role.clone(),
                target: map[&e.target].clone(),
            })
            .collect(),
        root: map[&g.root].clone(),
    }
}

/// True when a directed cycle is reachable from the root.
pub fn has_directed_cycle(g: &AmrGraph) -> bool {
    fn visit(
        g: &AmrGraph,
        id: &NodeId,
        on_stack: &mut Vec<NodeId>,
        done: &mut Vec<NodeId>,
    ) -> bool {
        if on_stack.contains(id) {
            return true;
        }
        if done.contains(id) {
            return false;
        }
        on_stack.push(id.clone());
        let found = g.edges_from(id).any(|e| visit(g, &e.target, on_stack, done));
        on_stack.pop();
        done.push(id.clone());
        found
    }
    visit(g, &g.root.clone(), &mut Vec::new(), &mut Vec::new())
}

/// Encoder whose embeddings are summed lookups in a fixed table, for tests
/// that need exact hand-chosen vectors behind the [`Encoder`] trait.
pub struct LookupEncoder {
    pub dim: usize,
    pub table: HashMap<String, Vec<f64>>,
}

impl LookupEncoder {
    pub fn new(dim: usize, entries: &[(&str, &[f64])]) -> Self {
        let table = entries
            .iter()
            .map(|(k, v)| {
                assert_eq!(v.len(), dim);
                (k.to_string(), v.to_vec())
            })
            .collect();
        LookupEncoder { dim, table }
    }
}

impl Encoder for LookupEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, tokens: &[String]) -> Result<EmbeddingVector, TrainError> {
        let mut v = vec![0.0; self.dim];
        for t in tokens {
            let e = self.table.get(t).unwrap_or_else(|| panic!("token `{t}` not in table"));
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi += ei;
            }
        }
        Ok(v)
    }
}

pub const GRADCHECK_STREAM: u64 = 0x4752_4144;

const GRADCHECK_WORDS: [&str; 6] = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"];

/// Random small encoder plus a batch over a closed word list; each seed picks
/// the dimensions, the temperature, and the sentences.
pub fn random_trainer_setup(seed: u64) -> (MeanPoolEncoder, Vec<Triplet>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, GRADCHECK_STREAM, 0));
    let counts: BTreeMap<String, u64> =
        GRADCHECK_WORDS.iter().map(|w| (w.to_string(), 10)).collect();
    let vocab = build_vocab(&counts, &byte_base(), 1);

    let dim = rng.gen_range(2..=6);
    let token_dim = rng.gen_range(2..=5);
    let encoder = MeanPoolEncoder::new(vocab, dim, token_dim, rng.gen());

    let sentence = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let len = rng.gen_range(1..=3);
        (0..len).map(|_| GRADCHECK_WORDS.choose(rng).unwrap().to_string()).collect()
    };
    let batch: Vec<Triplet> = (0..rng.gen_range(2..=4))
        .map(|_| Triplet::new(sentence(&mut rng), sentence(&mut rng), sentence(&mut rng), "en"))
        .collect();
    let temperature = rng.gen_range(0.05..1.0);
    (encoder, batch, temperature)
}

/// Central-difference gradient check over `samples` randomly chosen
/// parameters; returns the worst relative error seen.
pub fn gradcheck_max_rel_err(
    encoder: &mut MeanPoolEncoder,
    batch: &[Triplet],
    temperature: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    const H: f64 = 1e-5;
    const FLOOR: f64 = 1e-6;
    let (_, analytic) = loss_gradient(batch, encoder, temperature).unwrap();
    let n = encoder.params().len();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let k = rng.gen_range(0..n);
        let orig = encoder.params()[k];
        encoder.params_mut()[k] = orig + H;
        let (up, _) = batch_loss(batch, encoder, temperature).unwrap();
        encoder.params_mut()[k] = orig - H;
        let (down, _) = batch_loss(batch, encoder, temperature).unwrap();
        encoder.params_mut()[k] = orig;
        let numeric = (up - down) / (2.0 * H);
        let denom = numeric.abs().max(analytic[k].abs()).max(FLOOR);
        worst = worst.max((numeric - analytic[k]).abs() / denom);
    }
    worst
}

pub const TEXT_STREAM: u64 = 0x5445_5854;

/// Deterministic stand-in for externally produced sentence embeddings.
/// Config hash 0 marks the store as coming from outside any pipeline run.
pub fn synth_text_store(ids: &[String], dim: usize, seed: u64) -> VectorStore {
    let mut store = VectorStore::new(dim, 0, seed);
    for (i, id) in ids.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TEXT_STREAM, i as u64));
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        store.push(id, &v).unwrap();
    }
    store
}
