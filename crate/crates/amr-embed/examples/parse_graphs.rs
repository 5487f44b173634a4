//! Parse PENMAN text into graphs and print them back out.
//!
//! Run with `cargo run --example parse_graphs`.

use std::error::Error;
use std::fs;
use std::path::Path;

use amr_embed::graph::penman::{parse_penman, read_corpus, serialize_penman};
use amr_embed::graph::validate;

fn main() -> Result<(), Box<dyn Error>> {
    // A single graph: `b` is referenced twice (wanter and goer), which the
    // notation expresses by repeating the variable without a concept.
    let text = "(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))";
    let graph = parse_penman(text)?;
    println!("parsed {} nodes, {} edges, root {}", graph.nodes.len(), graph.edges.len(), graph.root);
    println!("reentrant nodes: {}", graph.reentrancy_count());
    println!("violations: {:?}", validate(&graph));
    println!("reprinted:\n{}\n", serialize_penman(&graph));

    // A corpus file holds many graphs separated by blank lines, each with
    // optional `# ::key value` metadata.
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline/corpus.penman");
    let entries = read_corpus(&fs::read_to_string(path)?)?;
    println!("corpus: {} graphs", entries.len());
    let first = &entries[0];
    println!("first id: {:?}", first.metadata.get("id"));
    println!("first sentence: {:?}", first.metadata.get("snt"));
    println!("{}", serialize_penman(&first.graph));

    // Round trips are exact on canonical output.
    let reprinted = serialize_penman(&first.graph);
    assert_eq!(serialize_penman(&parse_penman(&reprinted)?), reprinted);
    println!("round trip: stable");
    Ok(())
}
