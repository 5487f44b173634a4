//! Mixed-language batch construction: each sentence occurrence becomes either
//! English text or a linearized graph in a sampled language.
//!
//! Run with `cargo run --example mix_languages`.

use std::error::Error;

use amr_embed::mixer::{
    mix_batch, mix_example_traced, write_mixed_jsonl, DictTranslator, ItemKind, MixerConfig,
    TemplateParser,
};
use amr_embed::contrastive::Triplet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

fn main() -> Result<(), Box<dyn Error>> {
    // Uniform weights over seven languages, threshold 0.5.
    let config = MixerConfig::default();
    config.validate()?;
    let names: Vec<&str> = config.languages.iter().map(|(l, _)| l.as_str()).collect();
    println!("languages: {names:?}, threshold {}", config.threshold);

    // Trace a few single draws.
    let sentence = words("the boy wants to go");
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..5 {
        let (item, draw) =
            mix_example_traced(&sentence, &config, &DictTranslator, &TemplateParser, &mut rng);
        println!(
            "drew {:<2} q {:<22} -> {:?} [{}] {}",
            config.languages[draw.lang_index].0,
            format!("{:?}", draw.q),
            item.kind,
            item.lang,
            item.tokens.join(" ")
        );
    }

    // Whole triplets mix item by item; a JSONL line records each part.
    let triplet = Triplet::new(
        words("the boy wants to go"),
        words("the boy would like to leave"),
        words("the storm destroyed the bridge"),
        "en",
    );
    let mut batch_rng = ChaCha8Rng::seed_from_u64(7);
    let batch = mix_batch(&[triplet], &config, &DictTranslator, &TemplateParser, &mut batch_rng);
    print!("{}", write_mixed_jsonl(&batch));

    // The long-run graph fraction follows from the weights and threshold:
    // every non-English draw plus the above-threshold English share.
    let mut graphs = 0usize;
    let draws = 10_000;
    for _ in 0..draws {
        let (item, _) =
            mix_example_traced(&sentence, &config, &DictTranslator, &TemplateParser, &mut rng);
        if item.kind == ItemKind::Graph {
            graphs += 1;
        }
    }
    println!("graph fraction over {draws} draws: {:.4} (expected {:.4})", graphs as f64 / draws as f64, 13.0 / 14.0);
    Ok(())
}
