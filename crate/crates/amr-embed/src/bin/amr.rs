//! Command line front end: one subcommand per stage, plus `pipeline` to run
//! them all from a JSON config. Exit codes: 0 success, 1 usage, 2 bad data,
//! 3 numeric failure.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::exit;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use amr_embed::contrastive::{read_triplets, train, TrainConfig};
use amr_embed::encoder::{decode_model, encode_model, MeanPoolEncoder};
use amr_embed::eval::transfer::{read_transfer_jsonl, transfer_evaluate, TransferTask};
use amr_embed::eval::{read_sts_tsv, sts_evaluate, StsPair};
use amr_embed::graph::penman::{read_corpus, write_corpus};
use amr_embed::integrate::{integrate, IntegrateError, IntegrationStrategy};
use amr_embed::linearize::{length_stats, linearize, Scheme};
use amr_embed::mixer::{mix_batch, write_mixed_jsonl, DictTranslator, MixerConfig, TemplateParser};
use amr_embed::pipeline::{
    embed_sequences, graph_embed, load_config, run_pipeline, PipelineError,
};
use amr_embed::store::VectorStore;
use amr_embed::vocab::{build_vocab, byte_base, count_symbols, read_tsv, write_tsv};

#[derive(Parser)]
#[command(name = "amr", version, about = "AMR linearization, mixed-language contrastive training, and embedding evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    /// Repeat concepts at reentrancies; no variables in the output.
    Free,
    /// Mark reentrancies with explicit `<Rn>` pointers.
    Annotated,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Free => Scheme::VariableFree,
            SchemeArg::Annotated => Scheme::VariableAnnotated,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a PENMAN corpus and reprint it canonically.
    Parse {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Linearize each graph to one token line.
    Linearize {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemeArg::Free)]
        scheme: SchemeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare sequence lengths under both linearization schemes.
    Stats { input: PathBuf },
    /// Build a byte-fallback vocabulary extended with frequent AMR symbols.
    Vocab {
        input: PathBuf,
        /// Minimum corpus count for an extension token.
        #[arg(long, default_value_t = 5)]
        threshold: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train an encoder on triplets as given, without language mixing.
    Train {
        #[arg(long)]
        triplets: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = MeanPoolEncoder::DEFAULT_DIM)]
        dim: usize,
        #[arg(long, default_value_t = MeanPoolEncoder::DEFAULT_TOKEN_DIM)]
        token_dim: usize,
        #[arg(long, default_value_t = 0.05)]
        temperature: f64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 5e-5)]
        learning_rate: f64,
        #[arg(long, default_value_t = 9)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Preview mixed-language batch construction without training.
    Mix {
        #[arg(long)]
        triplets: PathBuf,
        /// Mixing is preview-only here; training mixes internally.
        #[arg(long, required = true)]
        dry_run: bool,
        /// Comma list of lang:weight pairs, weights summing to 1.
        #[arg(long)]
        languages: Option<String>,
        /// q must exceed this for an English sentence to become a graph.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed one whitespace-tokenized sequence per input line.
    Embed {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Combine text and graph vector stores id by id.
    Integrate {
        #[arg(long)]
        text_vecs: PathBuf,
        #[arg(long)]
        amr_vecs: PathBuf,
        #[arg(long, default_value = "norm-concat")]
        strategy: String,
        #[arg(long)]
        out: PathBuf,
        /// Combine stores even if their config hashes disagree.
        #[arg(long)]
        force: bool,
    },
    /// Spearman correlation of store cosines against gold similarities.
    EvalSts {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Zero-shot transfer: fit one classifier on English, test everywhere.
    EvalTransfer {
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        name: String,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Comma list of languages counted as seen in macro-averages.
        #[arg(long)]
        seen: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run every stage end to end from a JSON config.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
        /// Accept input artifacts whose config hash disagrees.
        #[arg(long)]
        force: bool,
    },
}

fn main() {
    configure_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            exit(code);
        }
    };
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        exit(e.kind.exit_code());
    }
}

/// AMR_THREADS caps the rayon pool; anything unparseable is a usage error.
fn configure_threads() {
    if let Ok(raw) = std::env::var("AMR_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(n) => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            Err(_) => {
                eprintln!("error: AMR_THREADS must be an unsigned integer, got `{raw}`");
                exit(1);
            }
        }
    }
}

fn read_text(stage: &'static str, path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path)
        .map_err(|e| PipelineError::data(stage, format!("{}: {e}", path.display())))
}

fn read_bytes(stage: &'static str, path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|e| PipelineError::data(stage, format!("{}: {e}", path.display())))
}

fn write_bytes(stage: &'static str, path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    fs::write(path, bytes)
        .map_err(|e| PipelineError::data(stage, format!("{}: {e}", path.display())))
}

/// Print to stdout, or write to `out` when given.
fn emit(stage: &'static str, out: Option<&Path>, text: &str) -> Result<(), PipelineError> {
    match out {
        Some(path) => write_bytes(stage, path, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn load_vocab(stage: &'static str, path: &Path) -> Result<(amr_embed::vocab::Vocabulary, u64, u64), PipelineError> {
    read_tsv(&read_text(stage, path)?).map_err(|e| PipelineError::data(stage, e))
}

/// Parse `en:0.4,de:0.2,...` into a weighted language list.
fn parse_languages(spec: &str) -> Result<Vec<(String, f64)>, PipelineError> {
    spec.split(',')
        .map(|part| {
            let (lang, weight) = part.split_once(':').ok_or_else(|| {
                PipelineError::data("mix", format!("expected lang:weight, got `{part}`"))
            })?;
            let w: f64 = weight.parse().map_err(|_| {
                PipelineError::data("mix", format!("bad weight `{weight}` for `{lang}`"))
            })?;
            Ok((lang.trim().to_string(), w))
        })
        .collect()
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Parse { input, out } => {
            let entries = read_corpus(&read_text("parse", &input)?)
                .map_err(|e| PipelineError::data("parse", e))?;
            emit("parse", out.as_deref(), &write_corpus(&entries))
        }
        Command::Linearize { input, scheme, out } => {
            let entries = read_corpus(&read_text("linearize", &input)?)
                .map_err(|e| PipelineError::data("linearize", e))?;
            let mut text = String::new();
            for entry in &entries {
                text.push_str(&linearize(&entry.graph, scheme.into()).joined());
                text.push('\n');
            }
            emit("linearize", out.as_deref(), &text)
        }
        Command::Stats { input } => {
            let entries = read_corpus(&read_text("stats", &input)?)
                .map_err(|e| PipelineError::data("stats", e))?;
            let graphs: Vec<_> = entries.into_iter().map(|e| e.graph).collect();
            let stats = length_stats(&graphs).map_err(|e| PipelineError::data("stats", e))?;
            emit("stats", None, &to_pretty_json(&stats))
        }
        Command::Vocab { input, threshold, out, seed } => {
            let entries = read_corpus(&read_text("vocab", &input)?)
                .map_err(|e| PipelineError::data("vocab", e))?;
            let graphs: Vec<_> = entries.into_iter().map(|e| e.graph).collect();
            let counts = count_symbols(&graphs).map_err(|e| PipelineError::data("vocab", e))?;
            let vocab = build_vocab(&counts, &byte_base(), threshold);
            // Hash 0 marks a standalone artifact with no producing pipeline.
            emit("vocab", out.as_deref(), &write_tsv(&vocab, 0, seed))
        }
        Command::Train {
            triplets,
            vocab,
            out,
            dim,
            token_dim,
            temperature,
            batch_size,
            learning_rate,
            epochs,
            seed,
        } => {
            let (vocab, _, _) = load_vocab("train", &vocab)?;
            let data = read_triplets(&read_text("train", &triplets)?)
                .map_err(|e| PipelineError::from_train("train", &e))?;
            let config = TrainConfig {
                temperature,
                batch_size,
                learning_rate,
                max_epochs: epochs,
                seed,
            };
            let mut encoder = MeanPoolEncoder::new(vocab, dim, token_dim, seed);
            let report = train(&mut encoder, &data, &config)
                .map_err(|e| PipelineError::from_train("train", &e))?;
            write_bytes("train", &out, &encode_model(&encoder, 0, seed))?;
            emit("train", None, &to_pretty_json(&report))
        }
        Command::Mix { triplets, dry_run, languages, threshold, seed, out } => {
            assert!(dry_run, "clap enforces --dry-run");
            let data = read_triplets(&read_text("mix", &triplets)?)
                .map_err(|e| PipelineError::from_train("mix", &e))?;
            let mut config = MixerConfig { threshold, seed, ..MixerConfig::default() };
            if let Some(spec) = languages {
                config.languages = parse_languages(&spec)?;
            }
            config.validate().map_err(|e| PipelineError::from_mix("mix", &e))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mixed = mix_batch(&data, &config, &DictTranslator, &TemplateParser, &mut rng);
            emit("mix", out.as_deref(), &write_mixed_jsonl(&mixed))
        }
        Command::Embed { model, vocab, input, out } => {
            let (vocab, vocab_hash, _) = load_vocab("embed", &vocab)?;
            let (encoder, model_hash, model_seed) =
                decode_model(&read_bytes("embed", &model)?, vocab)
                    .map_err(|e| PipelineError::data("embed", e))?;
            if vocab_hash != 0 && model_hash != 0 && vocab_hash != model_hash {
                return Err(PipelineError::data(
                    "embed",
                    format!(
                        "vocab config {vocab_hash:016x} and model config {model_hash:016x} \
                         come from different runs"
                    ),
                ));
            }
            let store =
                embed_sequences(&encoder, &read_text("embed", &input)?, model_hash, model_seed)
                    .map_err(|e| PipelineError::data("embed", e))?;
            write_bytes("embed", &out, &store.to_bytes())
        }
        Command::Integrate { text_vecs, amr_vecs, strategy, out, force } => {
            let strategy = IntegrationStrategy::parse(&strategy).ok_or_else(|| {
                let names: Vec<_> =
                    IntegrationStrategy::ALL.iter().map(|s| s.name()).collect();
                PipelineError::data(
                    "integrate",
                    format!("unknown strategy `{strategy}`, expected one of {}", names.join(", ")),
                )
            })?;
            let text_store = VectorStore::from_bytes(&read_bytes("integrate", &text_vecs)?)
                .map_err(|e| PipelineError::data("integrate", e))?;
            let amr_store = VectorStore::from_bytes(&read_bytes("integrate", &amr_vecs)?)
                .map_err(|e| PipelineError::data("integrate", e))?;
            let (th, ah) = (text_store.config_hash, amr_store.config_hash);
            if th != 0 && ah != 0 && th != ah && !force {
                return Err(PipelineError::data(
                    "integrate",
                    format!(
                        "stores were produced under different configs \
                         ({th:016x} vs {ah:016x}); pass --force to combine them"
                    ),
                ));
            }
            let hash = if ah != 0 { ah } else { th };
            let mut fused = VectorStore::new(
                strategy.output_dim(text_store.dim(), amr_store.dim()),
                hash,
                amr_store.seed,
            );
            for id in amr_store.ids() {
                let text_vec = text_store.get(id).ok_or_else(|| {
                    PipelineError::data("integrate", format!("no text vector for id `{id}`"))
                })?;
                let combined = integrate(text_vec, amr_store.get(id).unwrap(), strategy)
                    .map_err(|e| match e {
                        IntegrateError::ZeroVector => PipelineError::numeric("integrate", e),
                        other => PipelineError::data("integrate", other),
                    })?;
                fused
                    .push(id, &combined)
                    .map_err(|e| PipelineError::data("integrate", e))?;
            }
            write_bytes("integrate", &out, &fused.to_bytes())
        }
        Command::EvalSts { vectors, pairs } => {
            let store = VectorStore::from_bytes(&read_bytes("eval-sts", &vectors)?)
                .map_err(|e| PipelineError::data("eval-sts", e))?;
            let rows = read_sts_tsv(&read_text("eval-sts", &pairs)?)
                .map_err(|e| PipelineError::from_eval("eval-sts", &e))?;
            let mut sts_pairs = Vec::with_capacity(rows.len());
            for row in rows {
                let fetch = |id: &str| {
                    store.get(id).map(<[f64]>::to_vec).ok_or_else(|| {
                        PipelineError::data("eval-sts", format!("no vector for id `{id}`"))
                    })
                };
                sts_pairs.push(StsPair::new(fetch(&row.id1)?, fetch(&row.id2)?, row.gold, &row.group));
            }
            let report = sts_evaluate(&sts_pairs)
                .map_err(|e| PipelineError::from_eval("eval-sts", &e))?;
            emit("eval-sts", None, &to_pretty_json(&report))
        }
        Command::EvalTransfer { task, name, model, vocab, seen, seed } => {
            let (vocab, _, _) = load_vocab("eval-transfer", &vocab)?;
            let (encoder, _, _) = decode_model(&read_bytes("eval-transfer", &model)?, vocab)
                .map_err(|e| PipelineError::data("eval-transfer", e))?;
            let records = read_transfer_jsonl(&read_text("eval-transfer", &task)?)
                .map_err(|e| PipelineError::from_eval("eval-transfer", &e))?;
            let seen: BTreeSet<String> = match seen {
                Some(spec) => spec.split(',').map(|s| s.trim().to_string()).collect(),
                None => MixerConfig::default().languages.into_iter().map(|(l, _)| l).collect(),
            };
            let task = TransferTask::new(&name, records, seen)
                .map_err(|e| PipelineError::from_eval("eval-transfer", &e))?;
            let report = transfer_evaluate(&task, |text| graph_embed(&encoder, text), seed)
                .map_err(|e| PipelineError::from_eval("eval-transfer", &e))?;
            emit("eval-transfer", None, &to_pretty_json(&report))
        }
        Command::Pipeline { config, force } => {
            let config = load_config(&config)?;
            let report = run_pipeline(&config, force)?;
            emit("pipeline", None, &to_pretty_json(&report))
        }
    }
}
