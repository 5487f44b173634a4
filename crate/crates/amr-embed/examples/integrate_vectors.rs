//! Combine a text embedding and a graph embedding into one vector under each
//! integration strategy.
//!
//! Run with `cargo run --example integrate_vectors`.

use std::error::Error;

use amr_embed::contrastive::cosine;
use amr_embed::integrate::{integrate, IntegrationStrategy};

fn main() -> Result<(), Box<dyn Error>> {
    let text = [3.0, 4.0];
    let graph = [0.0, 2.0];

    for strategy in IntegrationStrategy::ALL {
        let fused = integrate(&text, &graph, strategy)?;
        println!("{:<12} dim {} -> {fused:?}", strategy.name(), strategy.output_dim(text.len(), graph.len()));
    }

    // Normalized concatenation has a useful exact property: the cosine of two
    // fused vectors is the mean of the two part cosines, because each half
    // sits on the unit sphere.
    let (s1, h1) = ([1.0, 2.0, -0.5], [0.3, -1.0]);
    let (s2, h2) = ([0.4, -1.1, 2.2], [1.5, 0.2]);
    let f1 = integrate(&s1, &h1, IntegrationStrategy::NormConcat)?;
    let f2 = integrate(&s2, &h2, IntegrationStrategy::NormConcat)?;
    let fused = cosine(&f1, &f2)?;
    let mean = (cosine(&s1, &s2)? + cosine(&h1, &h2)?) / 2.0;
    println!("cos(fused) {fused:.12}");
    println!("mean cos   {mean:.12}");
    println!("norm(fused) {:.12} = sqrt(2)", f1.iter().map(|x| x * x).sum::<f64>().sqrt());
    Ok(())
}
