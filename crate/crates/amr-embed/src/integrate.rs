//! Fuse a text embedding s and a graph embedding h into one sentence vector.
//!
//! NormConcat is the default: each input is length-normalized before
//! concatenation, which fixes the output norm at sqrt(2) and makes the fused
//! cosine the average of the per-space cosines.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contrastive::EmbeddingVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntegrateError {
    #[error("dimension mismatch: text {text} vs graph {graph}")]
    DimensionMismatch { text: usize, graph: usize },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationStrategy {
    Concat,
    Sum,
    #[default]
    NormConcat,
    NormSum,
}

impl IntegrationStrategy {
    pub const ALL: [IntegrationStrategy; 4] = [
        IntegrationStrategy::Concat,
        IntegrationStrategy::Sum,
        IntegrationStrategy::NormConcat,
        IntegrationStrategy::NormSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntegrationStrategy::Concat => "concat",
            IntegrationStrategy::Sum => "sum",
            IntegrationStrategy::NormConcat => "norm-concat",
            IntegrationStrategy::NormSum => "norm-sum",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Output dimension for inputs of dimension p (text) and d (graph).
    pub fn output_dim(self, p: usize, d: usize) -> usize {
        match self {
            IntegrationStrategy::Concat | IntegrationStrategy::NormConcat => p + d,
            IntegrationStrategy::Sum | IntegrationStrategy::NormSum => p,
        }
    }
}

fn normalized(v: &[f64]) -> Result<Vec<f64>, IntegrateError> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(IntegrateError::ZeroVector);
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

fn summed(a: &[f64], b: &[f64]) -> Result<Vec<f64>, IntegrateError> {
    if a.len() != b.len() {
        return Err(IntegrateError::DimensionMismatch { text: a.len(), graph: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x + y).collect())
}

pub fn integrate(
    text: &[f64],
    graph: &[f64],
    strategy: IntegrationStrategy,
) -> Result<EmbeddingVector, IntegrateError> {
    match strategy {
        IntegrationStrategy::Concat => {
            Ok(text.iter().chain(graph).copied().collect())
        }
        IntegrationStrategy::Sum => summed(text, graph),
        IntegrationStrategy::NormConcat => {
            let mut out = normalized(text)?;
            out.extend(normalized(graph)?);
            Ok(out)
        }
        IntegrationStrategy::NormSum => summed(&normalized(text)?, &normalized(graph)?),
    }
}
