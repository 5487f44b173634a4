//! Evaluation protocol: STS by Spearman rank correlation of cosine scores,
//! zero-shot transfer by logistic regression over frozen embeddings.

pub mod logreg;
pub mod transfer;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::contrastive::{cosine, EmbeddingVector, TrainError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("zero variance: correlation undefined")]
    ZeroVariance,
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("dimension mismatch: {a} vs {b}")]
    DimensionMismatch { a: usize, b: usize },
    #[error("group `{group}` has {count} pairs, need at least 2")]
    TooFewPairs { group: String, count: usize },
    #[error("no data")]
    EmptyInput,
    #[error("all training labels identical")]
    DegenerateLabels,
    #[error("{split} split is missing")]
    MissingSplit { split: &'static str },
    #[error("zero-shot train split must be English, found `{lang}`")]
    TrainNotEnglish { lang: String },
    #[error("gold score {value} outside [0, 5]")]
    GoldOutOfRange { value: f64 },
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("embedder: {0}")]
    Embed(String),
}

impl From<TrainError> for EvalError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::ZeroVector => EvalError::ZeroVector,
            other => EvalError::Embed(other.to_string()),
        }
    }
}

/// Ranks with ties assigned the average of their positional ranks (1-based).
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start..end (0-based) share the mean of ranks start+1..end.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(EvalError::ZeroVariance);
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

/// Spearman's rho: Pearson correlation over average-assigned ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, EvalError> {
    if x.len() != y.len() {
        return Err(EvalError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 2 {
        return Err(EvalError::ZeroVariance);
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// One scored sentence pair, tagged with its reporting group (a language
/// pair like "EN-AR").
#[derive(Debug, Clone)]
pub struct StsPair {
    pub a: EmbeddingVector,
    pub b: EmbeddingVector,
    pub gold: f64,
    pub group: String,
}

impl StsPair {
    pub fn new(a: EmbeddingVector, b: EmbeddingVector, gold: f64, group: &str) -> Self {
        debug_assert!((0.0..=5.0).contains(&gold));
        StsPair { a, b, gold, group: group.into() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StsReport {
    /// Spearman rho per group.
    pub per_group: BTreeMap<String, f64>,
    /// Unweighted mean over groups.
    pub average: f64,
}

/// Score every pair by embedding cosine and correlate with gold per group.
pub fn sts_evaluate(pairs: &[StsPair]) -> Result<StsReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut groups: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in pairs {
        let entry = groups.entry(&p.group).or_default();
        entry.0.push(cosine(&p.a, &p.b)?);
        entry.1.push(p.gold);
    }
    let mut per_group = BTreeMap::new();
    for (group, (predicted, gold)) in &groups {
        if predicted.len() < 2 {
            return Err(EvalError::TooFewPairs {
                group: group.to_string(),
                count: predicted.len(),
            });
        }
        per_group.insert(group.to_string(), spearman(predicted, gold)?);
    }
    let average = per_group.values().sum::<f64>() / per_group.len() as f64;
    Ok(StsReport { per_group, average })
}

/// Sentence-pair classifier features: [a, b, |a-b|, a*b].
pub fn pair_features(a: &[f64], b: &[f64]) -> Result<Vec<f64>, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::DimensionMismatch { a: a.len(), b: b.len() });
    }
    let mut out = Vec::with_capacity(4 * a.len());
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    out.extend(a.iter().zip(b).map(|(x, y)| (x - y).abs()));
    out.extend(a.iter().zip(b).map(|(x, y)| x * y));
    Ok(out)
}

/// One row of an STS input file: two sentence ids, a gold score, and an
/// optional group tag (defaults to "all").
#[derive(Debug, Clone, PartialEq)]
pub struct StsRow {
    pub id1: String,
    pub id2: String,
    pub gold: f64,
    pub group: String,
}

/// Parse `id1<TAB>id2<TAB>gold[<TAB>group]` lines; `#` comments and blank
/// lines are skipped.
pub fn read_sts_tsv(text: &str) -> Result<Vec<StsRow>, EvalError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(EvalError::Parse {
                line: lineno,
                message: format!("expected 3 or 4 tab-separated fields, got {}", fields.len()),
            });
        }
        let gold: f64 = fields[2].parse().map_err(|e: std::num::ParseFloatError| {
            EvalError::Parse { line: lineno, message: e.to_string() }
        })?;
        if !(0.0..=5.0).contains(&gold) {
            return Err(EvalError::GoldOutOfRange { value: gold });
        }
        rows.push(StsRow {
            id1: fields[0].to_string(),
            id2: fields[1].to_string(),
            gold,
            group: fields.get(3).unwrap_or(&"all").to_string(),
        });
    }
    Ok(rows)
}
