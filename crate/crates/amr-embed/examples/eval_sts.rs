//! Score sentence vectors on similarity pairs: Spearman per group, then the
//! unweighted mean over groups.
//!
//! Run with `cargo run --example eval_sts`.

use std::error::Error;
use std::fs;
use std::path::Path;

use amr_embed::eval::{read_sts_tsv, spearman, sts_evaluate, StsPair};
use amr_embed::store::VectorStore;

fn main() -> Result<(), Box<dyn Error>> {
    // Spearman is rank-based: any monotone map of the scores leaves it fixed.
    let gold = [1.0, 2.0, 3.0, 4.0, 5.0];
    let pred = [0.1, 0.4, 0.2, 0.8, 0.9];
    println!("spearman {:.4}", spearman(&gold, &pred)?);
    let cubed: Vec<f64> = pred.iter().map(|x| x.powi(3)).collect();
    println!("spearman after cubing predictions {:.4}", spearman(&gold, &cubed)?);

    // Full protocol: look up each pair's vectors, correlate cosine with gold
    // per group, average the groups.
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline");
    let store = VectorStore::from_bytes(&fs::read(dir.join("text.vec"))?)?;
    println!("store: {} vectors of dim {}", store.len(), store.dim());

    let rows = read_sts_tsv(&fs::read_to_string(dir.join("sts.tsv"))?)?;
    let pairs: Vec<StsPair> = rows
        .iter()
        .map(|r| {
            let a = store.get(&r.id1).expect("id in store").to_vec();
            let b = store.get(&r.id2).expect("id in store").to_vec();
            StsPair::new(a, b, r.gold, &r.group)
        })
        .collect();
    let report = sts_evaluate(&pairs)?;
    for (group, rho) in &report.per_group {
        println!("{group:>10}: {rho:+.4}");
    }
    println!("{:>10}: {:+.4}", "average", report.average);
    Ok(())
}
