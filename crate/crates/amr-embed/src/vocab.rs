//! Vocabulary extension and tokenization for linearized graphs.
//!
//! The base vocabulary is a byte-fallback table (256 tokens named `<0xNN>`),
//! optionally extended with caller-supplied entries. Corpus symbols seen at
//! least `threshold` times (role labels and frame-named concepts) become
//! single-id extension tokens. Tokenization is total: unknown tokens split
//! into character-class runs, then single characters, then raw UTF-8 bytes,
//! so `detokenize(tokenize(x)) == x` holds for any input.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::graph::AmrGraph;

pub type TokenId = u32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VocabError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("unknown token id {0}")]
    UnknownId(TokenId),
    #[error("token ids decode to invalid UTF-8")]
    InvalidUtf8,
    #[error("vocabulary file line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Token table: base entries plus frequency-selected extensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: BTreeMap<String, TokenId>,
    names: HashMap<TokenId, String>,
    /// Extension tokens in id order.
    extension_names: Vec<String>,
    byte_ids: [TokenId; 256],
    threshold: u64,
}

fn byte_name(b: u8) -> String {
    format!("<0x{b:02X}>")
}

fn parse_byte_name(name: &str) -> Option<u8> {
    let hex = name.strip_prefix("<0x")?.strip_suffix('>')?;
    if hex.len() != 2 {
        return None;
    }
    u8::from_str_radix(hex, 16).ok()
}

/// The 256-entry byte fallback table, ids 0..=255.
pub fn byte_base() -> BTreeMap<String, TokenId> {
    (0u16..256).map(|b| (byte_name(b as u8), b as TokenId)).collect()
}

impl Vocabulary {
    /// Number of distinct token ids.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// One past the largest id; the embedding-table size an encoder needs.
    pub fn id_bound(&self) -> u32 {
        self.tokens.values().max().map_or(0, |m| m + 1)
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    pub fn id_of(&self, token: &str) -> Option<TokenId> {
        self.tokens.get(token).copied()
    }

    /// Extension tokens in id order.
    pub fn extensions(&self) -> &[String] {
        &self.extension_names
    }

    /// Map one surface token to ids: whole token, else character-class runs,
    /// else single characters, else UTF-8 bytes.
    fn tokenize_one(&self, token: &str, out: &mut Vec<TokenId>) {
        if let Some(&id) = self.tokens.get(token) {
            out.push(id);
            return;
        }
        for run in class_runs(token) {
            if let Some(&id) = self.tokens.get(run) {
                out.push(id);
                continue;
            }
            let mut buf = [0u8; 4];
            for ch in run.chars() {
                let s = ch.encode_utf8(&mut buf);
                if let Some(&id) = self.tokens.get(&*s) {
                    out.push(id);
                    continue;
                }
                for b in s.as_bytes() {
                    out.push(self.byte_ids[*b as usize]);
                }
            }
        }
    }

    /// Tokenize a sequence, keeping one id group per source token so the
    /// mapping stays invertible.
    pub fn tokenize(&self, tokens: &[String]) -> Vec<Vec<TokenId>> {
        tokens
            .iter()
            .map(|t| {
                let mut ids = Vec::with_capacity(1);
                self.tokenize_one(t, &mut ids);
                ids
            })
            .collect()
    }

    /// Tokenize and flatten; what sequence encoders consume.
    pub fn tokenize_flat(&self, tokens: &[String]) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(tokens.len());
        for t in tokens {
            self.tokenize_one(t, &mut out);
        }
        out
    }

    /// Invert [`Vocabulary::tokenize`], reproducing the original token strings.
    pub fn detokenize(&self, groups: &[Vec<TokenId>]) -> Result<Vec<String>, VocabError> {
        groups
            .iter()
            .map(|group| {
                let mut token = String::new();
                let mut bytes: Vec<u8> = Vec::new();
                for &id in group {
                    let name = self.names.get(&id).ok_or(VocabError::UnknownId(id))?;
                    match parse_byte_name(name) {
                        Some(b) => bytes.push(b),
                        None => {
                            flush_bytes(&mut bytes, &mut token)?;
                            token.push_str(name);
                        }
                    }
                }
                flush_bytes(&mut bytes, &mut token)?;
                Ok(token)
            })
            .collect()
    }
}

fn flush_bytes(bytes: &mut Vec<u8>, token: &mut String) -> Result<(), VocabError> {
    if bytes.is_empty() {
        return Ok(());
    }
    let s = String::from_utf8(std::mem::take(bytes)).map_err(|_| VocabError::InvalidUtf8)?;
    token.push_str(&s);
    Ok(())
}

/// Split a token into maximal runs of one character class (alphabetic,
/// numeric, other), e.g. "belong-01" -> ["belong", "-", "01"].
fn class_runs(token: &str) -> impl Iterator<Item = &str> {
    fn class(c: char) -> u8 {
        if c.is_alphabetic() {
            0
        } else if c.is_numeric() {
            1
        } else {
            2
        }
    }
    let mut rest = token;
    std::iter::from_fn(move || {
        let first = rest.chars().next()?;
        let cls = class(first);
        let end = rest
            .char_indices()
            .find(|(_, c)| class(*c) != cls)
            .map_or(rest.len(), |(i, _)| i);
        let (run, tail) = rest.split_at(end);
        rest = tail;
        Some(run)
    })
}

/// True for frame-named concepts: a stem, a dash, then a 2-3 digit sense tag.
pub fn frame_shaped(concept: &str) -> bool {
    match concept.rsplit_once('-') {
        Some((stem, digits)) => {
            !stem.is_empty()
                && (2..=3).contains(&digits.len())
                && digits.bytes().all(|b| b.is_ascii_digit())
        }
        None => false,
    }
}

/// Count role labels and frame-named concepts over a corpus, one count per
/// occurrence.
pub fn count_symbols(corpus: &[AmrGraph]) -> Result<BTreeMap<String, u64>, VocabError> {
    if corpus.is_empty() {
        return Err(VocabError::EmptyCorpus);
    }
    let mut counts = BTreeMap::new();
    for g in corpus {
        for e in &g.edges {
            *counts.entry(e.role.clone()).or_insert(0) += 1;
        }
        for n in &g.nodes {
            if frame_shaped(&n.concept) {
                *counts.entry(n.concept.clone()).or_insert(0) += 1;
            }
        }
    }
    Ok(counts)
}

/// Extend `base` with every counted symbol reaching `threshold`.
///
/// The byte fallback table is always unioned into the base first, keeping
/// tokenization total. Extension ids are contiguous after the base, ordered by
/// descending count then token name.
pub fn build_vocab(
    counts: &BTreeMap<String, u64>,
    base: &BTreeMap<String, TokenId>,
    threshold: u64,
) -> Vocabulary {
    assert!(threshold >= 1, "threshold must be at least 1");

    let mut tokens = base.clone();
    let mut next_id = tokens.values().max().map_or(0, |m| m + 1);
    for b in 0u16..256 {
        tokens.entry(byte_name(b as u8)).or_insert_with(|| {
            let id = next_id;
            next_id += 1;
            id
        });
    }

    let mut selected: Vec<(&String, u64)> = counts
        .iter()
        .filter(|(symbol, &count)| count >= threshold && !tokens.contains_key(*symbol))
        .map(|(symbol, &count)| (symbol, count))
        .collect();
    selected.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut extension_names = Vec::with_capacity(selected.len());
    for (symbol, _) in selected {
        tokens.insert(symbol.clone(), next_id);
        next_id += 1;
        extension_names.push(symbol.clone());
    }

    finish_vocab(tokens, extension_names, threshold)
}

fn finish_vocab(
    tokens: BTreeMap<String, TokenId>,
    extension_names: Vec<String>,
    threshold: u64,
) -> Vocabulary {
    let names: HashMap<TokenId, String> = tokens.iter().map(|(t, &id)| (id, t.clone())).collect();
    let mut byte_ids = [0 as TokenId; 256];
    for b in 0u16..256 {
        byte_ids[b as usize] = tokens[&byte_name(b as u8)];
    }
    Vocabulary { tokens, names, extension_names, byte_ids, threshold }
}

/// Render the vocabulary as `token<TAB>id` lines with provenance comments.
pub fn write_tsv(v: &Vocabulary, config_hash: u64, seed: u64) -> String {
    let mut rows: Vec<(&String, TokenId)> = v.tokens.iter().map(|(t, &id)| (t, id)).collect();
    rows.sort_by_key(|&(_, id)| id);
    let mut out = format!("# config-hash: {config_hash:016x}\n# seed: {seed}\n");
    for (token, id) in rows {
        debug_assert!(!token.contains('\t') && !token.contains('\n'));
        out.push_str(token);
        out.push('\t');
        out.push_str(&id.to_string());
        out.push('\n');
    }
    out
}

/// Parse [`write_tsv`] output: `(vocabulary, config hash, seed)`.
///
/// Extension markers are not stored in the file; reading treats every entry
/// as base, which tokenizes identically.
pub fn read_tsv(text: &str) -> Result<(Vocabulary, u64, u64), VocabError> {
    let mut tokens: BTreeMap<String, TokenId> = BTreeMap::new();
    let mut config_hash = 0u64;
    let mut seed = 0u64;
    let mut seen_ids: HashMap<TokenId, usize> = HashMap::new();

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(h) = rest.strip_prefix("config-hash:") {
                config_hash = u64::from_str_radix(h.trim(), 16)
                    .map_err(|e| VocabError::Parse { line: lineno, message: e.to_string() })?;
            } else if let Some(s) = rest.strip_prefix("seed:") {
                seed = s
                    .trim()
                    .parse()
                    .map_err(|e: std::num::ParseIntError| VocabError::Parse {
                        line: lineno,
                        message: e.to_string(),
                    })?;
            }
            continue;
        }
        let (token, id) = line.split_once('\t').ok_or_else(|| VocabError::Parse {
            line: lineno,
            message: "expected token<TAB>id".into(),
        })?;
        let id: TokenId = id.trim().parse().map_err(|e: std::num::ParseIntError| {
            VocabError::Parse { line: lineno, message: e.to_string() }
        })?;
        if let Some(first) = seen_ids.insert(id, lineno) {
            return Err(VocabError::Parse {
                line: lineno,
                message: format!("id {id} already used on line {first}"),
            });
        }
        if tokens.insert(token.to_string(), id).is_some() {
            return Err(VocabError::Parse {
                line: lineno,
                message: format!("token `{token}` listed twice"),
            });
        }
    }

    for b in 0u16..256 {
        if !tokens.contains_key(&byte_name(b as u8)) {
            return Err(VocabError::Parse {
                line: 0,
                message: format!("byte fallback entry {} missing", byte_name(b as u8)),
            });
        }
    }

    Ok((finish_vocab(tokens, Vec::new(), 1), config_hash, seed))
}
