//! Sentence embeddings with Abstract Meaning Representation graphs in the
//! loop: parse PENMAN text, linearize graphs into token sequences, train a
//! contrastive encoder on mixed-language batches, fuse the result with
//! existing sentence vectors, and score everything on semantic similarity
//! and zero-shot transfer tasks.
//!
//! ```
//! use amr_embed::graph::penman::parse_penman;
//! use amr_embed::linearize::{linearize, Scheme};
//!
//! let g = parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))")?;
//! let seq = linearize(&g, Scheme::VariableFree);
//! assert_eq!(seq.joined(), "( want-01 :ARG0 ( boy ) :ARG1 ( go-02 :ARG0 ( boy ) ) )");
//! # Ok::<(), amr_embed::graph::penman::PenmanError>(())
//! ```
//!
//! # Modules
//!
//! - [`graph`]: the graph data model, PENMAN parsing and serialization,
//!   corpus files with `# ::key value` metadata.
//! - [`linearize`]: depth-first token sequences in two schemes
//!   (variable-free and variable-annotated) and the inverse mapping.
//! - [`vocab`]: byte-complete tokenizer vocabulary extended with frequent
//!   corpus symbols; tokenization is total.
//! - [`contrastive`]: triplet loss over in-batch candidates, its analytic
//!   gradient, and the SGD training loop.
//! - [`encoder`]: the trainable mean-pool reference encoder and its binary
//!   model format.
//! - [`mixer`]: mixed-language batch construction (translate, parse,
//!   linearize per drawn language) and training on the mixed stream.
//! - [`integrate`]: strategies for fusing a text vector with a graph vector.
//! - [`eval`]: Spearman-based similarity scoring by group and the
//!   one-classifier zero-shot transfer protocol.
//! - [`store`]: the id-keyed embedding file format with provenance headers.
//! - [`pipeline`]: one-call orchestration of all stages with config-hash
//!   stamping and a deterministic run report.
//! - [`seed`]: seed derivation so every stage draws from its own stream.
//!
//! Every capability is also demonstrated by a runnable program under
//! `examples/`, and the `amr` binary exposes each stage as a subcommand.
//! With the same seed and inputs, every entry point is bit-reproducible.

pub mod contrastive;
pub mod encoder;
pub mod eval;
pub mod graph;
pub mod integrate;
pub mod linearize;
pub mod mixer;
pub mod pipeline;
pub mod seed;
pub mod store;
pub mod vocab;
