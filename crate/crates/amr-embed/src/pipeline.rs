//! End-to-end orchestration: parse -> linearize -> vocab -> mixed training
//! -> embed -> integrate -> evaluate, producing artifacts that embed the
//! producing config hash and a deterministic JSON run report (no
//! timestamps; identical config and seed give identical bytes).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::contrastive::{read_triplets, TrainConfig, TrainError};
use crate::contrastive::Encoder;
use crate::encoder::{encode_model, MeanPoolEncoder};
use crate::eval::transfer::{read_transfer_jsonl, transfer_evaluate, TransferReport, TransferTask};
use crate::eval::{read_sts_tsv, sts_evaluate, EvalError, StsPair, StsReport};
use crate::graph::penman::read_corpus;
use crate::graph::AmrGraph;
use crate::integrate::{integrate, IntegrationStrategy};
use crate::linearize::{length_stats, linearize, Scheme};
use crate::mixer::{
    run_mixed_training, DictTranslator, MixError, MixerConfig, SentenceParser, TemplateParser,
};
use crate::seed::derive_seed;
use crate::store::{StoreError, VectorStore};
use crate::vocab::{build_vocab, byte_base, count_symbols, write_tsv};

/// How a failure should be reported at the process boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Bad inputs: unreadable files, malformed formats, missing ids.
    Data,
    /// Math went wrong: zero vectors, zero variance, non-finite losses.
    Numeric,
}

impl FailureKind {
    /// Process exit code for this failure class.
    pub fn exit_code(self) -> i32 {
        match self {
            FailureKind::Data => 2,
            FailureKind::Numeric => 3,
        }
    }
}

#[derive(Debug)]
pub struct PipelineError {
    pub stage: &'static str,
    pub kind: FailureKind,
    pub message: String,
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineError {}

impl PipelineError {
    pub fn data(stage: &'static str, message: impl fmt::Display) -> Self {
        PipelineError { stage, kind: FailureKind::Data, message: message.to_string() }
    }

    pub fn numeric(stage: &'static str, message: impl fmt::Display) -> Self {
        PipelineError { stage, kind: FailureKind::Numeric, message: message.to_string() }
    }

    pub fn from_train(stage: &'static str, e: &TrainError) -> Self {
        match e {
            TrainError::ZeroVector | TrainError::NonFinite { .. } => {
                Self::numeric(stage, e)
            }
            other => Self::data(stage, other),
        }
    }

    pub fn from_eval(stage: &'static str, e: &EvalError) -> Self {
        match e {
            EvalError::ZeroVariance | EvalError::ZeroVector => Self::numeric(stage, e),
            other => Self::data(stage, other),
        }
    }

    pub fn from_mix(stage: &'static str, e: &MixError) -> Self {
        match e {
            MixError::Train(inner) => Self::from_train(stage, inner),
            other => Self::data(stage, other),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransferSpec {
    pub name: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// PENMAN corpus; each graph's `::id` names its vectors downstream.
    pub corpus: PathBuf,
    /// Training triplets, JSONL.
    pub triplets: PathBuf,
    /// Externally produced text embeddings (config hash 0 in its header).
    pub text_vectors: PathBuf,
    /// STS pairs TSV; skip STS evaluation when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sts: Option<PathBuf>,
    /// Zero-shot transfer tasks.
    #[serde(default)]
    pub transfer: Vec<TransferSpec>,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub mixer: MixerConfig,
    #[serde(default)]
    pub strategy: IntegrationStrategy,
    #[serde(default = "default_threshold")]
    pub vocab_threshold: u64,
    /// Encoder output dimension.
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Token embedding width.
    #[serde(default = "default_token_dim")]
    pub token_dim: usize,
    /// Languages counted as seen in transfer macro-averages; empty means
    /// the mixer's language set.
    #[serde(default)]
    pub seen_languages: Vec<String>,
}

fn default_threshold() -> u64 {
    5
}

fn default_dim() -> usize {
    MeanPoolEncoder::DEFAULT_DIM
}

fn default_token_dim() -> usize {
    MeanPoolEncoder::DEFAULT_TOKEN_DIM
}

/// Read and deserialize a pipeline config file.
pub fn load_config(path: &Path) -> Result<PipelineConfig, PipelineError> {
    let text = fs::read_to_string(path)
        .map_err(|e| PipelineError::data("config", format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| PipelineError::data("config", format!("{}: {e}", path.display())))
}

/// Hash the canonical JSON form of the config: the leading 8 bytes key
/// artifact headers, the full digest goes in the run report.
pub fn config_hash(config: &PipelineConfig) -> (u64, String) {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    let short = u64::from_le_bytes(digest[..8].try_into().unwrap());
    (short, hex::encode(digest))
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Embed one token sequence per line. A line with a TAB uses the text before
/// it as the vector id; otherwise the id is the 0-based line index.
pub fn embed_sequences(
    encoder: &MeanPoolEncoder,
    text: &str,
    config_hash: u64,
    seed: u64,
) -> Result<VectorStore, StoreError> {
    let mut store = VectorStore::new(encoder.dim(), config_hash, seed);
    for (i, line) in text.lines().enumerate() {
        let (id, rest) = match line.split_once('\t') {
            Some((id, rest)) => (id.to_string(), rest),
            None => (i.to_string(), line),
        };
        let tokens: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
        let vector = encoder
            .embed(&tokens)
            .map_err(|e| StoreError::Format(format!("line {}: {e}", i + 1)))?;
        store.push(&id, &vector)?;
    }
    Ok(store)
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusSection {
    pub graphs: usize,
    pub mean_variable_free: f64,
    pub mean_variable_annotated: f64,
    pub mean_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VocabSection {
    pub total: usize,
    pub extensions: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainSection {
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_loss: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub seed: u64,
    /// Full SHA-256 of the canonical config JSON.
    pub config_hash: String,
    /// Leading 8 bytes of the hash; what artifact headers carry.
    pub config_hash_short: String,
    pub config: PipelineConfig,
    pub corpus: CorpusSection,
    pub vocab: VocabSection,
    pub train: TrainSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sts: Option<StsReport>,
    pub transfer: Vec<TransferReport>,
    /// Artifact name -> SHA-256 of the written file.
    pub artifacts: BTreeMap<String, String>,
}

fn read_input(stage: &'static str, path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path)
        .map_err(|e| PipelineError::data(stage, format!("{}: {e}", path.display())))
}

fn write_artifact(
    out_dir: &Path,
    name: &str,
    bytes: &[u8],
    artifacts: &mut BTreeMap<String, String>,
) -> Result<(), PipelineError> {
    let path = out_dir.join(name);
    fs::write(&path, bytes)
        .map_err(|e| PipelineError::data("write", format!("{}: {e}", path.display())))?;
    artifacts.insert(name.to_string(), sha256_hex(bytes));
    Ok(())
}

/// Refuse an input artifact built by a different config, unless it is
/// externally produced (hash 0) or the caller forces the mix.
fn check_artifact_hash(
    stage: &'static str,
    path: &Path,
    found: u64,
    expected: u64,
    force: bool,
) -> Result<(), PipelineError> {
    if found != 0 && found != expected && !force {
        return Err(PipelineError::data(
            stage,
            format!(
                "{} was produced under config {found:016x}, this run is {expected:016x}; \
                 pass force to mix artifacts",
                path.display()
            ),
        ));
    }
    Ok(())
}

/// Run every stage. All referenced paths are checked before the first stage
/// touches anything.
pub fn run_pipeline(config: &PipelineConfig, force: bool) -> Result<RunReport, PipelineError> {
    let (hash64, hash_hex) = config_hash(config);

    let mut required: Vec<&Path> =
        vec![&config.corpus, &config.triplets, &config.text_vectors];
    if let Some(sts) = &config.sts {
        required.push(sts);
    }
    for spec in &config.transfer {
        required.push(&spec.path);
    }
    for path in required {
        if !path.exists() {
            return Err(PipelineError::data(
                "config",
                format!("referenced file does not exist: {}", path.display()),
            ));
        }
    }
    if config.dim == 0 || config.token_dim == 0 {
        return Err(PipelineError::data("config", "dim and token_dim must be at least 1"));
    }
    fs::create_dir_all(&config.out_dir)
        .map_err(|e| PipelineError::data("config", format!("{}: {e}", config.out_dir.display())))?;

    // Parse.
    let corpus_text = read_input("parse", &config.corpus)?;
    let entries = read_corpus(&corpus_text).map_err(|e| PipelineError::data("parse", e))?;
    if entries.is_empty() {
        return Err(PipelineError::data("parse", "corpus holds no graphs"));
    }
    let graphs: Vec<AmrGraph> = entries.iter().map(|e| e.graph.clone()).collect();
    let ids: Vec<String> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| e.metadata.get("id").cloned().unwrap_or_else(|| i.to_string()))
        .collect();

    // Linearize.
    let stats = length_stats(&graphs).map_err(|e| PipelineError::data("linearize", e))?;
    let corpus_section = CorpusSection {
        graphs: graphs.len(),
        mean_variable_free: stats.mean_variable_free,
        mean_variable_annotated: stats.mean_variable_annotated,
        mean_ratio: stats.mean_ratio,
    };

    // Vocabulary.
    let counts = count_symbols(&graphs).map_err(|e| PipelineError::data("vocab", e))?;
    let vocab = build_vocab(&counts, &byte_base(), config.vocab_threshold);
    let vocab_section = VocabSection { total: vocab.len(), extensions: vocab.extensions().len() };
    let mut artifacts = BTreeMap::new();
    write_artifact(
        &config.out_dir,
        "vocab.tsv",
        write_tsv(&vocab, hash64, config.seed).as_bytes(),
        &mut artifacts,
    )?;

    // Mixed-language contrastive training.
    let triplet_text = read_input("train", &config.triplets)?;
    let dataset = read_triplets(&triplet_text)
        .map_err(|e| PipelineError::from_train("train", &e))?;
    let mut encoder = MeanPoolEncoder::new(
        vocab,
        config.dim,
        config.token_dim,
        derive_seed(config.seed, 1, 0),
    );
    let mixer_config = MixerConfig { seed: derive_seed(config.seed, 2, 0), ..config.mixer.clone() };
    let train_config = TrainConfig { seed: derive_seed(config.seed, 3, 0), ..config.train.clone() };
    let curve = run_mixed_training(
        &mut encoder,
        &dataset,
        &mixer_config,
        &train_config,
        &DictTranslator,
        &TemplateParser,
    )
    .map_err(|e| PipelineError::from_mix("train", &e))?;
    let train_section = TrainSection {
        steps: curve.len(),
        first_loss: curve.first().copied(),
        last_loss: curve.last().copied(),
    };
    write_artifact(
        &config.out_dir,
        "model.amre",
        &encode_model(&encoder, hash64, config.seed),
        &mut artifacts,
    )?;

    // Embed the corpus graphs.
    let mut amr_store = VectorStore::new(config.dim, hash64, config.seed);
    for (id, graph) in ids.iter().zip(&graphs) {
        let seq = linearize(graph, Scheme::VariableFree);
        let vector = encoder
            .embed(&seq.tokens)
            .map_err(|e| PipelineError::from_train("embed", &e))?;
        amr_store
            .push(id, &vector)
            .map_err(|e| PipelineError::data("embed", e))?;
    }
    write_artifact(&config.out_dir, "amr.vec", &amr_store.to_bytes(), &mut artifacts)?;

    // Integrate with the externally supplied text vectors.
    let text_bytes = fs::read(&config.text_vectors)
        .map_err(|e| PipelineError::data("integrate", format!("{}: {e}", config.text_vectors.display())))?;
    let text_store =
        VectorStore::from_bytes(&text_bytes).map_err(|e| PipelineError::data("integrate", e))?;
    check_artifact_hash("integrate", &config.text_vectors, text_store.config_hash, hash64, force)?;

    let fused_dim = config.strategy.output_dim(text_store.dim(), config.dim);
    let mut fused = VectorStore::new(fused_dim, hash64, config.seed);
    for id in amr_store.ids() {
        let text_vec = text_store.get(id).ok_or_else(|| {
            PipelineError::data("integrate", format!("no text vector for id `{id}`"))
        })?;
        let combined = integrate(text_vec, amr_store.get(id).unwrap(), config.strategy)
            .map_err(|e| match e {
                crate::integrate::IntegrateError::ZeroVector => {
                    PipelineError::numeric("integrate", e)
                }
                other => PipelineError::data("integrate", other),
            })?;
        fused.push(id, &combined).map_err(|e| PipelineError::data("integrate", e))?;
    }
    write_artifact(&config.out_dir, "fused.vec", &fused.to_bytes(), &mut artifacts)?;

    // STS evaluation over the fused store.
    let sts = match &config.sts {
        Some(path) => {
            let rows =
                read_sts_tsv(&read_input("eval-sts", path)?).map_err(|e| PipelineError::from_eval("eval-sts", &e))?;
            let mut pairs = Vec::with_capacity(rows.len());
            for row in rows {
                let fetch = |id: &str| {
                    fused.get(id).map(<[f64]>::to_vec).ok_or_else(|| {
                        PipelineError::data("eval-sts", format!("no fused vector for id `{id}`"))
                    })
                };
                pairs.push(StsPair::new(fetch(&row.id1)?, fetch(&row.id2)?, row.gold, &row.group));
            }
            Some(sts_evaluate(&pairs).map_err(|e| PipelineError::from_eval("eval-sts", &e))?)
        }
        None => None,
    };

    // Zero-shot transfer over graph embeddings of the raw sentences.
    let seen: BTreeSet<String> = if config.seen_languages.is_empty() {
        mixer_config.languages.iter().map(|(l, _)| l.clone()).collect()
    } else {
        config.seen_languages.iter().cloned().collect()
    };
    let mut transfer = Vec::with_capacity(config.transfer.len());
    for (i, spec) in config.transfer.iter().enumerate() {
        let records = read_transfer_jsonl(&read_input("eval-transfer", &spec.path)?)
            .map_err(|e| PipelineError::from_eval("eval-transfer", &e))?;
        let task = TransferTask::new(&spec.name, records, seen.clone())
            .map_err(|e| PipelineError::from_eval("eval-transfer", &e))?;
        let report = transfer_evaluate(
            &task,
            |text| graph_embed(&encoder, text),
            derive_seed(config.seed, 4, i as u64),
        )
        .map_err(|e| PipelineError::from_eval("eval-transfer", &e))?;
        transfer.push(report);
    }

    let report = RunReport {
        seed: config.seed,
        config_hash: hash_hex,
        config_hash_short: format!("{hash64:016x}"),
        config: config.clone(),
        corpus: corpus_section,
        vocab: vocab_section,
        train: train_section,
        sts,
        transfer,
        artifacts,
    };
    let mut rendered = serde_json::to_string_pretty(&report).expect("report serializes");
    rendered.push('\n');
    fs::write(config.out_dir.join("report.json"), rendered)
        .map_err(|e| PipelineError::data("write", e))?;
    Ok(report)
}

/// Sentence embedder used for transfer tasks: template-parse the sentence,
/// linearize variable-free, embed with the trained encoder.
pub fn graph_embed(encoder: &MeanPoolEncoder, text: &str) -> Result<Vec<f64>, EvalError> {
    let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    let graph = TemplateParser
        .parse(&tokens)
        .map_err(|e| EvalError::Embed(e.to_string()))?;
    let seq = linearize(&graph, Scheme::VariableFree);
    encoder.embed(&seq.tokens).map_err(EvalError::from)
}
