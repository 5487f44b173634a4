//! Build a tokenizer vocabulary extended with corpus AMR symbols.
//!
//! Run with `cargo run --example extend_vocab`.

use std::error::Error;
use std::fs;
use std::path::Path;

use amr_embed::graph::penman::read_corpus;
use amr_embed::vocab::{build_vocab, byte_base, count_symbols, write_tsv};

fn main() -> Result<(), Box<dyn Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline/corpus.penman");
    let graphs: Vec<_> =
        read_corpus(&fs::read_to_string(path)?)?.into_iter().map(|e| e.graph).collect();

    // Count every symbol a linearized graph can emit: concepts, roles,
    // brackets, attribute literals.
    let counts = count_symbols(&graphs)?;
    println!("distinct symbols in corpus: {}", counts.len());

    // Symbols seen at least `threshold` times become single-id tokens on top
    // of the byte-complete base; everything else falls back to pieces.
    let vocab = build_vocab(&counts, &byte_base(), 2);
    println!("vocabulary size: {} ({} extension tokens)", vocab.id_bound(), vocab.extensions().len());
    println!("sample extensions: {:?}", &vocab.extensions()[..8.min(vocab.extensions().len())]);

    // Extension tokens map to one id; unseen words split into runs.
    for word in ["want-01", ":ARG0", "unseen-concept-42"] {
        let ids = vocab.tokenize(&[word.to_string()]);
        println!("{word:>18} -> {} piece(s)", ids[0].len());
    }

    // The TSV round trips through files; hash 0 marks a standalone artifact.
    let tsv = write_tsv(&vocab, 0, 0);
    println!("tsv header: {}", tsv.lines().next().unwrap());
    Ok(())
}
