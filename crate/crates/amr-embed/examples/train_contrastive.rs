//! Train the mean-pool encoder on triplets and watch retrieval improve.
//!
//! Run with `cargo run --example train_contrastive`.

use std::collections::BTreeMap;
use std::error::Error;
use std::fs;
use std::path::Path;

use amr_embed::contrastive::{cosine, read_triplets, train, Encoder, TrainConfig, Triplet};
use amr_embed::encoder::MeanPoolEncoder;
use amr_embed::vocab::{build_vocab, byte_base};

/// Fraction of anchors whose positive outranks every negative in the set.
fn retrieval(encoder: &MeanPoolEncoder, triplets: &[Triplet]) -> Result<f64, Box<dyn Error>> {
    let negatives: Vec<Vec<f64>> =
        triplets.iter().map(|t| encoder.embed(&t.negative)).collect::<Result<_, _>>()?;
    let mut hits = 0usize;
    for t in triplets {
        let a = encoder.embed(&t.anchor)?;
        let own = cosine(&a, &encoder.embed(&t.positive)?)?;
        let mut best_negative = f64::NEG_INFINITY;
        for n in &negatives {
            best_negative = best_negative.max(cosine(&a, n)?);
        }
        if own > best_negative {
            hits += 1;
        }
    }
    Ok(hits as f64 / triplets.len() as f64)
}

fn main() -> Result<(), Box<dyn Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/separable_triplets.jsonl");
    let triplets = read_triplets(&fs::read_to_string(path)?)?;
    println!("{} triplets, e.g. {:?} / {:?} / {:?}", triplets.len(), triplets[0].anchor, triplets[0].positive, triplets[0].negative);

    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for t in &triplets {
        for tok in t.anchor.iter().chain(&t.positive).chain(&t.negative) {
            *counts.entry(tok.clone()).or_insert(0) += 1;
        }
    }
    let vocab = build_vocab(&counts, &byte_base(), 1);

    let mut encoder = MeanPoolEncoder::new(vocab, 16, 8, 7);
    println!("retrieval before training: {:.0}%", retrieval(&encoder, &triplets)? * 100.0);

    let config = TrainConfig {
        temperature: 0.1,
        batch_size: 8,
        learning_rate: 0.5,
        max_epochs: 50,
        seed: 11,
    };
    let report = train(&mut encoder, &triplets, &config)?;
    println!(
        "trained {} epochs: loss {:.4} -> {:.4}",
        report.epoch_losses.len(),
        report.epoch_losses.first().unwrap(),
        report.epoch_losses.last().unwrap()
    );
    println!("retrieval after training: {:.0}%", retrieval(&encoder, &triplets)? * 100.0);
    Ok(())
}
