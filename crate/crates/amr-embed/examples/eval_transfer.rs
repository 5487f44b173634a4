//! Zero-shot transfer evaluation: fit one English classifier on frozen
//! embeddings, select regularization on the pooled dev split, score every
//! language.
//!
//! Run with `cargo run --example eval_transfer`.

use std::collections::BTreeSet;
use std::error::Error;
use std::fs;
use std::path::Path;

use amr_embed::eval::transfer::{read_transfer_jsonl, transfer_evaluate, TransferTask};
use amr_embed::eval::EvalError;

/// Toy embedder: bag-of-character-codes folded into 8 dimensions. Weak on
/// purpose; the point here is the protocol, not the score.
fn embed(text: &str) -> Result<Vec<f64>, EvalError> {
    let mut v = vec![0.0; 8];
    for (i, b) in text.bytes().enumerate() {
        v[(i + b as usize) % 8] += (b as f64 / 128.0) - 0.5;
    }
    Ok(v)
}

fn main() -> Result<(), Box<dyn Error>> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline/transfer.jsonl");
    let records = read_transfer_jsonl(&fs::read_to_string(path)?)?;
    println!("{} records across splits", records.len());

    // "Seen" means the embedder trained on the language; the report macro
    // averages over that subset separately.
    let seen: BTreeSet<String> = ["en", "de"].iter().map(|s| s.to_string()).collect();
    let task = TransferTask::new("topics", records, seen)?;

    let report = transfer_evaluate(&task, embed, 1)?;
    println!("selected regularization: {}", report.selected_reg);
    println!("classifier fits: {} (grid search fits: {})", report.classifier_fits, report.grid_fits);
    for (lang, acc) in &report.test_accuracy {
        println!("test accuracy {lang}: {acc:.3}");
    }
    println!("test macro over seen languages: {:?}", report.test_macro_seen);
    println!("test macro over all languages:  {:.3}", report.test_macro_all);
    Ok(())
}
