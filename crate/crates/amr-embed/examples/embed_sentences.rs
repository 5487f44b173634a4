//! Embed raw sentences and linearized graphs with one trained encoder, then
//! compare them in the shared space.
//!
//! Run with `cargo run --example embed_sentences`.

use std::collections::BTreeMap;
use std::error::Error;

use amr_embed::contrastive::{cosine, train, Encoder, TrainConfig, Triplet};
use amr_embed::encoder::MeanPoolEncoder;
use amr_embed::graph::penman::parse_penman;
use amr_embed::linearize::{linearize, Scheme};
use amr_embed::vocab::{build_vocab, byte_base, count_symbols};

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn main() -> Result<(), Box<dyn Error>> {
    // One encoder serves both views when its vocabulary covers graph symbols.
    let graphs = vec![
        parse_penman("(w / want-01 :ARG0 (b / boy) :ARG1 (g / go-02 :ARG0 b))")?,
        parse_penman("(r / run-02 :ARG0 (d / dog) :manner (f / fast))")?,
    ];
    let mut counts = count_symbols(&graphs)?;
    for s in ["the", "boy", "wants", "to", "go", "dog", "runs", "fast", "a"] {
        *counts.entry(s.into()).or_insert(0) += 5;
    }
    let vocab = build_vocab(&counts, &byte_base(), 1);
    let mut encoder = MeanPoolEncoder::new(vocab, 16, 8, 3);

    // A few alignment triplets: sentence anchors, their graph as positive,
    // the other graph as negative.
    let lin: Vec<Vec<String>> =
        graphs.iter().map(|g| linearize(g, Scheme::VariableFree).tokens).collect();
    let data = vec![
        Triplet::new(words("the boy wants to go"), lin[0].clone(), lin[1].clone(), "en"),
        Triplet::new(words("a dog runs fast"), lin[1].clone(), lin[0].clone(), "en"),
    ];
    let config = TrainConfig {
        temperature: 0.1,
        batch_size: 2,
        learning_rate: 0.3,
        max_epochs: 40,
        seed: 9,
    };
    train(&mut encoder, &data, &config)?;

    let mut sims: BTreeMap<&str, f64> = BTreeMap::new();
    let sent = encoder.embed(&words("the boy wants to go"))?;
    sims.insert("matching graph", cosine(&sent, &encoder.embed(&lin[0])?)?);
    sims.insert("other graph", cosine(&sent, &encoder.embed(&lin[1])?)?);
    for (name, sim) in sims {
        println!("cos(sentence, {name}) = {sim:+.3}");
    }
    Ok(())
}
