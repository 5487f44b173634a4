//! Reference encoder: token embedding table, mean pooling, one affine layer
//! with tanh. Small enough to finite-difference, real enough to exercise the
//! full loss/gradient path.
//!
//! Parameter layout (flat, in this order):
//!   E: vocab_size x token_dim embedding rows
//!   W: dim x token_dim affine weights
//!   b: dim biases
//!
//! Forward: mean of the E rows of the tokenized sequence (empty sequence
//! pools to the zero vector), then tanh(W m + b).

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::contrastive::{EmbeddingVector, Encoder, TrainableEncoder, TrainError};
use crate::vocab::Vocabulary;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("model file: {0}")]
    Format(String),
    #[error("model format version {found} is not supported")]
    Version { found: u32 },
    #[error("model was built for a vocabulary of {expected} ids, got {found}")]
    VocabMismatch { expected: u32, found: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const MAGIC: &[u8; 4] = b"AMRE";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct MeanPoolEncoder {
    vocab: Vocabulary,
    vocab_size: usize,
    token_dim: usize,
    dim: usize,
    params: Vec<f64>,
}

impl MeanPoolEncoder {
    pub const DEFAULT_DIM: usize = 64;
    pub const DEFAULT_TOKEN_DIM: usize = 16;

    /// Fresh encoder with parameters drawn uniformly from [-0.1, 0.1].
    pub fn new(vocab: Vocabulary, dim: usize, token_dim: usize, seed: u64) -> Self {
        assert!(dim >= 1 && token_dim >= 1);
        let vocab_size = vocab.id_bound() as usize;
        let count = vocab_size * token_dim + dim * token_dim + dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-0.1, 0.1);
        let params = (0..count).map(|_| dist.sample(&mut rng)).collect();
        MeanPoolEncoder { vocab, vocab_size, token_dim, dim, params }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn token_dim(&self) -> usize {
        self.token_dim
    }

    fn embedding_row(&self, id: usize) -> &[f64] {
        let off = id * self.token_dim;
        &self.params[off..off + self.token_dim]
    }

    fn affine_offsets(&self) -> (usize, usize) {
        let w = self.vocab_size * self.token_dim;
        (w, w + self.dim * self.token_dim)
    }

    /// Mean of the embedding rows; the zero vector for an empty sequence.
    fn pooled(&self, ids: &[u32]) -> Vec<f64> {
        let mut mean = vec![0.0; self.token_dim];
        if ids.is_empty() {
            return mean;
        }
        for &id in ids {
            let row = self.embedding_row(id as usize);
            for (m, r) in mean.iter_mut().zip(row) {
                *m += r;
            }
        }
        let inv = 1.0 / ids.len() as f64;
        for m in &mut mean {
            *m *= inv;
        }
        mean
    }

    fn forward(&self, ids: &[u32]) -> Vec<f64> {
        let mean = self.pooled(ids);
        let (w_off, b_off) = self.affine_offsets();
        let mut out = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let row = &self.params[w_off + k * self.token_dim..w_off + (k + 1) * self.token_dim];
            let z: f64 =
                row.iter().zip(&mean).map(|(w, m)| w * m).sum::<f64>() + self.params[b_off + k];
            out.push(z.tanh());
        }
        out
    }
}

impl Encoder for MeanPoolEncoder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, tokens: &[String]) -> Result<EmbeddingVector, TrainError> {
        Ok(self.forward(&self.vocab.tokenize_flat(tokens)))
    }
}

impl TrainableEncoder for MeanPoolEncoder {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn backward(
        &self,
        tokens: &[String],
        upstream: &[f64],
        grad: &mut [f64],
    ) -> Result<(), TrainError> {
        debug_assert_eq!(upstream.len(), self.dim);
        debug_assert_eq!(grad.len(), self.params.len());
        let ids = self.vocab.tokenize_flat(tokens);
        let mean = self.pooled(&ids);
        let out = self.forward(&ids);
        let (w_off, b_off) = self.affine_offsets();

        // h = tanh(z), dz = upstream * (1 - h^2).
        let mut d_mean = vec![0.0; self.token_dim];
        for k in 0..self.dim {
            let dz = upstream[k] * (1.0 - out[k] * out[k]);
            grad[b_off + k] += dz;
            let row_off = w_off + k * self.token_dim;
            for j in 0..self.token_dim {
                grad[row_off + j] += dz * mean[j];
                d_mean[j] += dz * self.params[row_off + j];
            }
        }
        if !ids.is_empty() {
            let inv = 1.0 / ids.len() as f64;
            for &id in &ids {
                let off = id as usize * self.token_dim;
                for j in 0..self.token_dim {
                    grad[off + j] += d_mean[j] * inv;
                }
            }
        }
        Ok(())
    }
}

fn push_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn push_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EncoderError> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.bytes.len());
        let end = end.ok_or_else(|| EncoderError::Format("file truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, EncoderError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, EncoderError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Serialize: magic "AMRE", format version, dim, vocab id bound, token dim,
/// config hash, seed, then the parameter blob as little-endian f64.
pub fn encode_model(enc: &MeanPoolEncoder, config_hash: u64, seed: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(40 + enc.params.len() * 8);
    out.extend_from_slice(MAGIC);
    push_u32(&mut out, FORMAT_VERSION);
    push_u32(&mut out, enc.dim as u32);
    push_u32(&mut out, enc.vocab_size as u32);
    push_u32(&mut out, enc.token_dim as u32);
    push_u64(&mut out, config_hash);
    push_u64(&mut out, seed);
    for p in &enc.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_model`]. The vocabulary is stored separately; the
/// caller supplies it and its id bound must match the header.
pub fn decode_model(
    bytes: &[u8],
    vocab: Vocabulary,
) -> Result<(MeanPoolEncoder, u64, u64), EncoderError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(EncoderError::Format("bad magic, not a model file".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(EncoderError::Version { found: version });
    }
    let dim = r.u32()? as usize;
    let vocab_size = r.u32()? as usize;
    let token_dim = r.u32()? as usize;
    let config_hash = r.u64()?;
    let seed = r.u64()?;
    if vocab.id_bound() as usize != vocab_size {
        return Err(EncoderError::VocabMismatch {
            expected: vocab_size as u32,
            found: vocab.id_bound(),
        });
    }
    if dim == 0 || token_dim == 0 {
        return Err(EncoderError::Format("zero dimensions".into()));
    }
    let count = vocab_size * token_dim + dim * token_dim + dim;
    let blob = r.take(count * 8)?;
    if r.pos != bytes.len() {
        return Err(EncoderError::Format("trailing bytes after parameter blob".into()));
    }
    let params: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if params.iter().any(|p| !p.is_finite()) {
        return Err(EncoderError::Format("non-finite parameter".into()));
    }
    Ok((MeanPoolEncoder { vocab, vocab_size, token_dim, dim, params }, config_hash, seed))
}
