//! In-batch-negative contrastive loss, its exact gradient, and a small SGD
//! training loop over a pluggable encoder.
//!
//! For a batch of M triplets (anchor, positive, negative), every positive and
//! every negative in the batch is a candidate for every anchor (2M candidates
//! per anchor). The per-example loss is
//!
//! ```text
//! l_i = -s(a_i, p_i)/tau + log sum_j exp(s(a_i, c_j)/tau)
//! ```
//!
//! with cosine similarity s and log-sum-exp computed max-subtracted. The loss
//! is always strictly positive: the numerator term is one summand of the
//! denominator.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::derive_seed;

pub type EmbeddingVector = Vec<f64>;

/// Shuffle stream tag, kept apart from other consumers of the run seed.
const SHUFFLE_STREAM: u64 = 0x7452_4149_4e53_4846;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("empty triplet dataset")]
    EmptyDataset,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("triplet line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One training example: anchor, entailed paraphrase, contradiction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: Vec<String>,
    pub positive: Vec<String>,
    pub negative: Vec<String>,
    #[serde(default = "default_lang")]
    pub lang: String,
}

fn default_lang() -> String {
    "en".into()
}

impl Triplet {
    pub fn new(
        anchor: Vec<String>,
        positive: Vec<String>,
        negative: Vec<String>,
        lang: &str,
    ) -> Self {
        Triplet { anchor, positive, negative, lang: lang.into() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub temperature: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            temperature: 0.05,
            batch_size: 32,
            learning_rate: 5e-5,
            max_epochs: 9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), TrainError> {
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            return Err(TrainError::InvalidConfig("temperature must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(TrainError::InvalidConfig("batch size must be at least 1".into()));
        }
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(TrainError::InvalidConfig("learning rate must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Maps a token sequence to a fixed-dimension embedding.
pub trait Encoder: Sync {
    /// Output dimension, constant across inputs.
    fn dim(&self) -> usize;
    fn embed(&self, tokens: &[String]) -> Result<EmbeddingVector, TrainError>;
}

/// An [`Encoder`] with a flat parameter vector and a reverse pass.
pub trait TrainableEncoder: Encoder {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Accumulate dL/dtheta into `grad`, given dL/dembedding for one
    /// sequence. `grad` has `params().len()` entries.
    fn backward(&self, tokens: &[String], upstream: &[f64], grad: &mut [f64])
        -> Result<(), TrainError>;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity in [-1, 1].
pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, TrainError> {
    debug_assert_eq!(a.len(), b.len());
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(TrainError::ZeroVector);
    }
    Ok(dot(a, b) / (na * nb))
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Loss of one example given its positive similarity and the similarities to
/// all candidates (the positive's similarity appears among them too).
pub fn example_loss(positive_sim: f64, candidate_sims: &[f64], temperature: f64) -> f64 {
    let scaled: Vec<f64> = candidate_sims.iter().map(|s| s / temperature).collect();
    log_sum_exp(&scaled) - positive_sim / temperature
}

/// Embeddings of one batch: anchors, then the 2M candidates (all positives
/// first, then all negatives), plus cached norms.
struct BatchEmbeddings {
    anchors: Vec<EmbeddingVector>,
    candidates: Vec<EmbeddingVector>,
    anchor_norms: Vec<f64>,
    candidate_norms: Vec<f64>,
}

fn embed_batch<E: Encoder>(batch: &[&Triplet], encoder: &E) -> Result<BatchEmbeddings, TrainError> {
    let anchors: Vec<EmbeddingVector> = batch
        .par_iter()
        .map(|t| encoder.embed(&t.anchor))
        .collect::<Result<_, _>>()?;
    let candidates: Vec<EmbeddingVector> = batch
        .par_iter()
        .map(|t| encoder.embed(&t.positive))
        .chain(batch.par_iter().map(|t| encoder.embed(&t.negative)))
        .collect::<Result<_, _>>()?;
    let check_norms = |vs: &[EmbeddingVector]| -> Result<Vec<f64>, TrainError> {
        vs.iter()
            .map(|v| {
                let n = norm(v);
                if n == 0.0 {
                    Err(TrainError::ZeroVector)
                } else {
                    Ok(n)
                }
            })
            .collect()
    };
    let anchor_norms = check_norms(&anchors)?;
    let candidate_norms = check_norms(&candidates)?;
    Ok(BatchEmbeddings { anchors, candidates, anchor_norms, candidate_norms })
}

fn batch_losses(emb: &BatchEmbeddings, temperature: f64) -> (f64, Vec<f64>, Vec<Vec<f64>>) {
    let m = emb.anchors.len();
    let mut sims = vec![vec![0.0; emb.candidates.len()]; m];
    let mut losses = Vec::with_capacity(m);
    for (i, row) in sims.iter_mut().enumerate() {
        for (j, c) in emb.candidates.iter().enumerate() {
            row[j] = dot(&emb.anchors[i], c) / (emb.anchor_norms[i] * emb.candidate_norms[j]);
        }
        losses.push(example_loss(row[i], row, temperature));
    }
    let mean = losses.iter().sum::<f64>() / m as f64;
    (mean, losses, sims)
}

fn batch_loss_refs<E: Encoder>(
    batch: &[&Triplet],
    encoder: &E,
    temperature: f64,
) -> Result<(f64, Vec<f64>), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let emb = embed_batch(batch, encoder)?;
    let (mean, losses, _) = batch_losses(&emb, temperature);
    Ok((mean, losses))
}

/// Mean loss over the batch plus the per-example losses.
pub fn batch_loss<E: Encoder>(
    batch: &[Triplet],
    encoder: &E,
    temperature: f64,
) -> Result<(f64, Vec<f64>), TrainError> {
    let refs: Vec<&Triplet> = batch.iter().collect();
    batch_loss_refs(&refs, encoder, temperature)
}

fn loss_gradient_refs<E: TrainableEncoder>(
    batch: &[&Triplet],
    encoder: &E,
    temperature: f64,
) -> Result<(f64, Vec<f64>), TrainError> {
    if batch.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let m = batch.len();
    let emb = embed_batch(batch, encoder)?;
    let (mean, _, sims) = batch_losses(&emb, temperature);
    let d = encoder.dim();

    // dL/ds[i][j] = (softmax_j(s[i]/tau) - [j is i's positive]) / (M * tau),
    // chained through the cosine:
    //   ds/du = v/(|u||v|) - s u/|u|^2,  ds/dv symmetric.
    let mut d_anchor = vec![vec![0.0; d]; m];
    let mut d_cand = vec![vec![0.0; d]; emb.candidates.len()];
    for i in 0..m {
        let scaled: Vec<f64> = sims[i].iter().map(|s| s / temperature).collect();
        let lse = log_sum_exp(&scaled);
        let a = &emb.anchors[i];
        let na = emb.anchor_norms[i];
        for (j, c) in emb.candidates.iter().enumerate() {
            let w = (scaled[j] - lse).exp();
            let ds = (w - if j == i { 1.0 } else { 0.0 }) / (m as f64 * temperature);
            if ds == 0.0 {
                continue;
            }
            let nc = emb.candidate_norms[j];
            let s = sims[i][j];
            for k in 0..d {
                d_anchor[i][k] += ds * (c[k] / (na * nc) - s * a[k] / (na * na));
                d_cand[j][k] += ds * (a[k] / (na * nc) - s * c[k] / (nc * nc));
            }
        }
    }

    let mut grad = vec![0.0; encoder.params().len()];
    for (i, t) in batch.iter().enumerate() {
        encoder.backward(&t.anchor, &d_anchor[i], &mut grad)?;
        encoder.backward(&t.positive, &d_cand[i], &mut grad)?;
        encoder.backward(&t.negative, &d_cand[m + i], &mut grad)?;
    }
    Ok((mean, grad))
}

/// Exact gradient of the mean batch loss with respect to the encoder
/// parameters, paired with that loss.
pub fn loss_gradient<E: TrainableEncoder>(
    batch: &[Triplet],
    encoder: &E,
    temperature: f64,
) -> Result<(f64, Vec<f64>), TrainError> {
    let refs: Vec<&Triplet> = batch.iter().collect();
    loss_gradient_refs(&refs, encoder, temperature)
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    /// Mean per-example loss of each epoch.
    pub epoch_losses: Vec<f64>,
    /// Selection score after each epoch, when a selector ran.
    pub scores: Vec<f64>,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: usize,
}

/// Per-epoch model scorer used by [`train_selected`].
type Selector<'a, E> = &'a mut dyn FnMut(&E) -> Result<f64, TrainError>;

fn run_train<E: TrainableEncoder>(
    encoder: &mut E,
    data: &[Triplet],
    config: &TrainConfig,
    mut selector: Option<Selector<'_, E>>,
) -> Result<TrainReport, TrainError> {
    config.validate()?;
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }

    let mut epoch_losses = Vec::with_capacity(config.max_epochs);
    let mut scores = Vec::new();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for epoch in 0..config.max_epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SHUFFLE_STREAM, epoch as u64));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Triplet> = chunk.iter().map(|&i| &data[i]).collect();
            let (mean, grad) = loss_gradient_refs(&batch, encoder, config.temperature)?;
            if !mean.is_finite() {
                return Err(TrainError::NonFinite { epoch });
            }
            loss_sum += mean * batch.len() as f64;
            let params = encoder.params_mut();
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
        }
        epoch_losses.push(loss_sum / data.len() as f64);

        if let Some(sel) = selector.as_mut() {
            let score = sel(encoder)?;
            scores.push(score);
            let better = best.as_ref().is_none_or(|(b, _, _)| score > *b);
            if better {
                best = Some((score, epoch, encoder.params().to_vec()));
            }
        }
    }

    let best_epoch = match best {
        Some((_, epoch, params)) => {
            encoder.params_mut().copy_from_slice(&params);
            epoch
        }
        None => config.max_epochs.saturating_sub(1),
    };
    Ok(TrainReport { epoch_losses, scores, best_epoch })
}

/// SGD over shuffled mini-batches; the encoder keeps its final parameters.
pub fn train<E: TrainableEncoder>(
    encoder: &mut E,
    data: &[Triplet],
    config: &TrainConfig,
) -> Result<TrainReport, TrainError> {
    run_train(encoder, data, config, None)
}

/// Like [`train`], but scores the encoder after every epoch and restores the
/// parameters of the best-scoring one (higher is better; ties keep the
/// earliest epoch).
pub fn train_selected<E, F>(
    encoder: &mut E,
    data: &[Triplet],
    config: &TrainConfig,
    mut score: F,
) -> Result<TrainReport, TrainError>
where
    E: TrainableEncoder,
    F: FnMut(&E) -> Result<f64, TrainError>,
{
    run_train(encoder, data, config, Some(&mut score))
}

/// Parse triplets from JSONL, one object per line; blank lines are skipped.
pub fn read_triplets(text: &str) -> Result<Vec<Triplet>, TrainError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let t: Triplet = serde_json::from_str(line)
            .map_err(|e| TrainError::Parse { line: i + 1, message: e.to_string() })?;
        for (field, seq) in
            [("anchor", &t.anchor), ("positive", &t.positive), ("negative", &t.negative)]
        {
            if seq.is_empty() {
                return Err(TrainError::Parse {
                    line: i + 1,
                    message: format!("{field} must be non-empty"),
                });
            }
        }
        out.push(t);
    }
    Ok(out)
}

pub fn write_triplets(triplets: &[Triplet]) -> String {
    let mut out = String::new();
    for t in triplets {
        out.push_str(&serde_json::to_string(t).expect("triplet serializes"));
        out.push('\n');
    }
    out
}
