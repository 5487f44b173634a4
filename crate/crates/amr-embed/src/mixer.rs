//! Mixed-language, mixed text/graph batch construction.
//!
//! For every sentence occurrence a language l is drawn from the configured
//! set. A non-English draw routes the sentence through translate -> parse ->
//! linearize and yields a Graph item in l. An English draw flips q ~ U(0,1):
//! q above the threshold parses the English sentence into a Graph item,
//! otherwise the raw sentence stays a Text item. Translator or parser
//! failures fall back to the original English sentence as Text, so mixing is
//! total.
//!
//! Language selection compares integers (fixed-point cumulative weights);
//! the only float in control flow is the literal `q > threshold` draw.

use std::cell::RefCell;
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contrastive::{loss_gradient, TrainConfig, TrainError, TrainableEncoder, Triplet};
use crate::graph::penman::{parse_penman, PenmanError};
use crate::graph::{AmrGraph, Edge, Node};
use crate::linearize::{linearize, Scheme};
use crate::seed::derive_seed;

/// Step stream tag for deriving per-step RNGs from the run seed.
const STEP_STREAM: u64 = 0x4d49_5853_5445_5053;

#[derive(Debug, Error)]
pub enum MixError {
    #[error("invalid mixer config: {0}")]
    InvalidConfig(String),
    #[error("no content tokens to build a graph from")]
    NoContent,
    #[error("subprocess: {0}")]
    Subprocess(String),
    #[error(transparent)]
    Penman(#[from] PenmanError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixerConfig {
    /// Languages with their draw weights.
    pub languages: Vec<(String, f64)>,
    /// q must exceed this for an English sentence to become a graph.
    pub threshold: f64,
    pub seed: u64,
    /// Training steps T.
    pub max_steps: usize,
    pub batch_size: usize,
}

impl Default for MixerConfig {
    fn default() -> Self {
        let langs = ["en", "de", "es", "it", "zh", "fr", "ar"];
        MixerConfig {
            languages: langs.iter().map(|l| (l.to_string(), 1.0 / langs.len() as f64)).collect(),
            threshold: 0.5,
            seed: 0,
            max_steps: 100,
            batch_size: 32,
        }
    }
}

impl MixerConfig {
    pub fn validate(&self) -> Result<(), MixError> {
        if self.languages.is_empty() {
            return Err(MixError::InvalidConfig("language set is empty".into()));
        }
        if !self.languages.iter().any(|(l, _)| l == "en") {
            return Err(MixError::InvalidConfig("language set must contain en".into()));
        }
        if self.languages.iter().any(|(_, w)| w.is_nan() || *w <= 0.0) {
            return Err(MixError::InvalidConfig("language weights must be positive".into()));
        }
        let sum: f64 = self.languages.iter().map(|(_, w)| w).sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MixError::InvalidConfig(format!("weights sum to {sum}, expected 1")));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(MixError::InvalidConfig("threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub trait Translator {
    fn translate(&self, tokens: &[String], lang: &str) -> Result<Vec<String>, MixError>;
}

pub trait SentenceParser {
    fn parse(&self, tokens: &[String]) -> Result<AmrGraph, MixError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemKind {
    Text,
    Graph,
}

/// One mixed sentence occurrence. Text items are always English.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixedItem {
    pub kind: ItemKind,
    pub lang: String,
    pub tokens: Vec<String>,
}

impl MixedItem {
    fn new(kind: ItemKind, lang: String, tokens: Vec<String>) -> Self {
        assert!(
            kind != ItemKind::Text || lang == "en",
            "text items must stay in the original language"
        );
        MixedItem { kind, lang, tokens }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MixedTriplet {
    pub anchor: MixedItem,
    pub positive: MixedItem,
    pub negative: MixedItem,
}

impl MixedTriplet {
    /// Collapse back into a trainable triplet; the language tag records the
    /// anchor's realized language.
    pub fn to_triplet(&self) -> Triplet {
        Triplet::new(
            self.anchor.tokens.clone(),
            self.positive.tokens.clone(),
            self.negative.tokens.clone(),
            &self.anchor.lang,
        )
    }
}

/// Draw trace of one mixing decision: the language index and, when the
/// English branch was taken, its q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixDraw {
    pub lang_index: usize,
    pub q: Option<f64>,
}

/// Pick a language index by integer comparison on fixed-point cumulative
/// weights.
fn draw_language<R: Rng>(languages: &[(String, f64)], rng: &mut R) -> usize {
    const SCALE: f64 = 4_294_967_296.0;
    let steps: Vec<u64> =
        languages.iter().map(|(_, w)| ((w * SCALE).round() as u64).max(1)).collect();
    let total: u64 = steps.iter().sum();
    let mut r = rng.gen_range(0..total);
    for (i, s) in steps.iter().enumerate() {
        if r < *s {
            return i;
        }
        r -= s;
    }
    languages.len() - 1
}

fn graph_tokens(
    tokens: &[String],
    lang: &str,
    translator: &dyn Translator,
    parser: &dyn SentenceParser,
) -> Result<Vec<String>, MixError> {
    let source = if lang == "en" {
        tokens.to_vec()
    } else {
        translator.translate(tokens, lang)?
    };
    let graph = parser.parse(&source)?;
    Ok(linearize(&graph, Scheme::VariableFree).tokens)
}

/// Mix one sentence, reporting the draws that led to the outcome.
pub fn mix_example_traced(
    tokens: &[String],
    config: &MixerConfig,
    translator: &dyn Translator,
    parser: &dyn SentenceParser,
    rng: &mut ChaCha8Rng,
) -> (MixedItem, MixDraw) {
    assert!(!tokens.is_empty(), "cannot mix an empty sentence");
    let lang_index = draw_language(&config.languages, rng);
    let lang = config.languages[lang_index].0.clone();

    let (wants_graph, q) = if lang == "en" {
        let q: f64 = rng.gen();
        (q > config.threshold, Some(q))
    } else {
        (true, None)
    };

    let item = if wants_graph {
        match graph_tokens(tokens, &lang, translator, parser) {
            Ok(linearized) => MixedItem::new(ItemKind::Graph, lang, linearized),
            // Failed translations and parses keep the original sentence.
            Err(_) => MixedItem::new(ItemKind::Text, "en".into(), tokens.to_vec()),
        }
    } else {
        MixedItem::new(ItemKind::Text, "en".into(), tokens.to_vec())
    };
    (item, MixDraw { lang_index, q })
}

/// Mix one sentence occurrence; see [`mix_example_traced`] for the draws.
pub fn mix_example(
    tokens: &[String],
    config: &MixerConfig,
    translator: &dyn Translator,
    parser: &dyn SentenceParser,
    rng: &mut ChaCha8Rng,
) -> MixedItem {
    mix_example_traced(tokens, config, translator, parser, rng).0
}

/// Mix every sentence occurrence of every triplet, each with its own RNG
/// split off `rng` so the three draws stay independent.
pub fn mix_batch(
    batch: &[Triplet],
    config: &MixerConfig,
    translator: &dyn Translator,
    parser: &dyn SentenceParser,
    rng: &mut ChaCha8Rng,
) -> Vec<MixedTriplet> {
    batch
        .iter()
        .map(|t| {
            let mut slot = |tokens: &[String]| {
                let mut item_rng = ChaCha8Rng::seed_from_u64(rng.gen());
                mix_example(tokens, config, translator, parser, &mut item_rng)
            };
            let anchor = slot(&t.anchor);
            let positive = slot(&t.positive);
            let negative = slot(&t.negative);
            MixedTriplet { anchor, positive, negative }
        })
        .collect()
}

/// One mixed item per JSONL line, triplet order anchor, positive, negative.
pub fn write_mixed_jsonl(batch: &[MixedTriplet]) -> String {
    let mut out = String::new();
    for t in batch {
        for item in [&t.anchor, &t.positive, &t.negative] {
            out.push_str(&serde_json::to_string(item).expect("item serializes"));
            out.push('\n');
        }
    }
    out
}

/// T steps of mix -> loss -> SGD update. Returns the per-step mean loss.
///
/// Graphs are linearized variable-free. `train.max_epochs` is ignored; the
/// step budget comes from `config.max_steps`.
pub fn run_mixed_training<E: TrainableEncoder>(
    encoder: &mut E,
    dataset: &[Triplet],
    config: &MixerConfig,
    train: &TrainConfig,
    translator: &dyn Translator,
    parser: &dyn SentenceParser,
) -> Result<Vec<f64>, MixError> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(MixError::Train(TrainError::EmptyDataset));
    }
    let translator = CachingTranslator::new(translator);
    let parser = CachingParser::new(parser);

    let mut curve = Vec::with_capacity(config.max_steps);
    for step in 0..config.max_steps {
        let mut rng =
            ChaCha8Rng::seed_from_u64(derive_seed(config.seed, STEP_STREAM, step as u64));
        let take = config.batch_size.min(dataset.len());
        let picks = rand::seq::index::sample(&mut rng, dataset.len(), take);
        let batch: Vec<Triplet> = picks.iter().map(|i| dataset[i].clone()).collect();

        let mixed = mix_batch(&batch, config, &translator, &parser, &mut rng);
        let train_batch: Vec<Triplet> = mixed.iter().map(MixedTriplet::to_triplet).collect();

        let (loss, grad) = loss_gradient(&train_batch, encoder, train.temperature)?;
        for (p, g) in encoder.params_mut().iter_mut().zip(&grad) {
            *p -= train.learning_rate * g;
        }
        curve.push(loss);
    }
    Ok(curve)
}

/// Memoizes translations keyed by (sentence, language).
pub struct CachingTranslator<'a> {
    inner: &'a dyn Translator,
    cache: RefCell<HashMap<(String, String), Vec<String>>>,
}

impl<'a> CachingTranslator<'a> {
    pub fn new(inner: &'a dyn Translator) -> Self {
        CachingTranslator { inner, cache: RefCell::new(HashMap::new()) }
    }
}

impl Translator for CachingTranslator<'_> {
    fn translate(&self, tokens: &[String], lang: &str) -> Result<Vec<String>, MixError> {
        let key = (tokens.join(" "), lang.to_string());
        if let Some(hit) = self.cache.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let out = self.inner.translate(tokens, lang)?;
        self.cache.borrow_mut().insert(key, out.clone());
        Ok(out)
    }
}

/// Memoizes parses keyed by sentence.
pub struct CachingParser<'a> {
    inner: &'a dyn SentenceParser,
    cache: RefCell<HashMap<String, AmrGraph>>,
}

impl<'a> CachingParser<'a> {
    pub fn new(inner: &'a dyn SentenceParser) -> Self {
        CachingParser { inner, cache: RefCell::new(HashMap::new()) }
    }
}

impl SentenceParser for CachingParser<'_> {
    fn parse(&self, tokens: &[String]) -> Result<AmrGraph, MixError> {
        let key = tokens.join(" ");
        if let Some(hit) = self.cache.borrow().get(&key) {
            return Ok(hit.clone());
        }
        let out = self.inner.parse(tokens)?;
        self.cache.borrow_mut().insert(key, out.clone());
        Ok(out)
    }
}

/// Pseudo-translator: prefixes every token with the target language, so
/// realized languages stay visible in the output.
#[derive(Debug, Default)]
pub struct DictTranslator;

impl Translator for DictTranslator {
    fn translate(&self, tokens: &[String], lang: &str) -> Result<Vec<String>, MixError> {
        if lang == "en" {
            return Ok(tokens.to_vec());
        }
        Ok(tokens.iter().map(|t| format!("{lang}_{t}")).collect())
    }
}

/// Pseudo-parser: a star graph over the sentence's content tokens, rooted at
/// the first one, children attached as :op1, :op2, ...
#[derive(Debug, Default)]
pub struct TemplateParser;

fn content_concept(token: &str) -> Option<String> {
    let cleaned: String = token
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '-' })
        .collect();
    let trimmed = cleaned.trim_matches('-');
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.to_string())
    }
}

impl SentenceParser for TemplateParser {
    fn parse(&self, tokens: &[String]) -> Result<AmrGraph, MixError> {
        let concepts: Vec<String> = tokens.iter().filter_map(|t| content_concept(t)).collect();
        let Some((root, rest)) = concepts.split_first() else {
            return Err(MixError::NoContent);
        };
        let mut g = AmrGraph::singleton("n0", root.clone());
        for (i, concept) in rest.iter().enumerate() {
            let id = format!("n{}", i + 1);
            g.nodes.push(Node::new(id.clone(), concept.clone()));
            g.edges.push(Edge::new("n0", format!(":op{}", i + 1), id));
        }
        Ok(g)
    }
}

struct ChildIo {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl ChildIo {
    fn spawn(program: &str, args: &[String]) -> Result<Self, MixError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(ChildIo { child, stdin, stdout })
    }

    fn round_trip(&mut self, request: &str) -> Result<String, MixError> {
        writeln!(self.stdin, "{request}")?;
        self.stdin.flush()?;
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(MixError::Subprocess("child closed its stdout".into()));
        }
        Ok(line.trim_end_matches(['\n', '\r']).to_string())
    }
}

impl Drop for ChildIo {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Line protocol: request `lang<TAB>sentence`, response one line holding the
/// translated sentence, tokens space-separated.
pub struct SubprocessTranslator {
    io: Mutex<ChildIo>,
}

impl SubprocessTranslator {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, MixError> {
        Ok(SubprocessTranslator { io: Mutex::new(ChildIo::spawn(program, args)?) })
    }
}

impl Translator for SubprocessTranslator {
    fn translate(&self, tokens: &[String], lang: &str) -> Result<Vec<String>, MixError> {
        let mut io = self.io.lock().expect("translator lock");
        let reply = io.round_trip(&format!("{lang}\t{}", tokens.join(" ")))?;
        if reply.is_empty() {
            return Err(MixError::Subprocess("empty translation".into()));
        }
        Ok(reply.split_whitespace().map(str::to_string).collect())
    }
}

/// Line protocol: request the sentence, response its graph in single-line
/// PENMAN notation.
pub struct SubprocessParser {
    io: Mutex<ChildIo>,
}

impl SubprocessParser {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, MixError> {
        Ok(SubprocessParser { io: Mutex::new(ChildIo::spawn(program, args)?) })
    }
}

impl SentenceParser for SubprocessParser {
    fn parse(&self, tokens: &[String]) -> Result<AmrGraph, MixError> {
        let mut io = self.io.lock().expect("parser lock");
        let reply = io.round_trip(&tokens.join(" "))?;
        Ok(parse_penman(&reply)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::MeanPoolEncoder;
    use crate::graph::{validate, NodeId};
    use crate::vocab::{build_vocab, byte_base};
    use std::collections::BTreeMap;

    fn toks(ts: &[&str]) -> Vec<String> {
        ts.iter().map(|s| s.to_string()).collect()
    }

    fn config_with(languages: &[(&str, f64)]) -> MixerConfig {
        MixerConfig {
            languages: languages.iter().map(|(l, w)| (l.to_string(), *w)).collect(),
            ..MixerConfig::default()
        }
    }

    fn item_rng(i: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(99, 1, i))
    }

    #[test]
    fn forced_language_always_yields_graphs() {
        let config = config_with(&[("de", 1.0)]);
        let sentence = toks(&["the", "dog", "barks"]);
        for i in 0..100 {
            let item = mix_example(
                &sentence,
                &config,
                &DictTranslator,
                &TemplateParser,
                &mut item_rng(i),
            );
            assert_eq!(item.kind, ItemKind::Graph);
            assert_eq!(item.lang, "de");
            assert!(item.tokens.contains(&"de-the".to_string()));
        }
    }

    #[test]
    fn english_only_splits_at_the_threshold() {
        let config = config_with(&[("en", 1.0)]);
        let sentence = toks(&["the", "dog", "barks"]);
        let mut graphs = 0usize;
        for i in 0..10_000 {
            let (item, draw) = mix_example_traced(
                &sentence,
                &config,
                &DictTranslator,
                &TemplateParser,
                &mut item_rng(i),
            );
            if item.kind == ItemKind::Graph {
                graphs += 1;
                assert!(draw.q.unwrap() > 0.5);
            } else {
                assert!(draw.q.unwrap() <= 0.5);
                assert_eq!(item.lang, "en");
            }
        }
        let fraction = graphs as f64 / 10_000.0;
        assert!((fraction - 0.5).abs() <= 0.02, "graph fraction {fraction}");
    }

    #[test]
    fn default_seven_language_graph_fraction() {
        let config = MixerConfig::default();
        let expected = 6.0 / 7.0 + 0.5 / 7.0;
        let sentence = toks(&["a", "small", "dog"]);
        let mut graphs = 0usize;
        for i in 0..10_000 {
            let item = mix_example(
                &sentence,
                &config,
                &DictTranslator,
                &TemplateParser,
                &mut item_rng(i),
            );
            if item.kind == ItemKind::Graph {
                graphs += 1;
            }
        }
        let fraction = graphs as f64 / 10_000.0;
        assert!((fraction - expected).abs() <= 0.02, "graph fraction {fraction} vs {expected}");
    }

    #[test]
    fn text_items_are_always_english() {
        let config = MixerConfig::default();
        let sentence = toks(&["some", "words"]);
        for i in 0..2_000 {
            let item = mix_example(
                &sentence,
                &config,
                &DictTranslator,
                &TemplateParser,
                &mut item_rng(i),
            );
            if item.kind == ItemKind::Text {
                assert_eq!(item.lang, "en");
                assert_eq!(item.tokens, sentence);
            }
        }
    }

    #[test]
    fn fixed_seed_reproduces_the_item() {
        let config = MixerConfig::default();
        let sentence = toks(&["the", "dog"]);
        let a = mix_example(&sentence, &config, &DictTranslator, &TemplateParser, &mut item_rng(7));
        let b = mix_example(&sentence, &config, &DictTranslator, &TemplateParser, &mut item_rng(7));
        assert_eq!(a, b);
    }

    #[test]
    fn per_sentence_draws_are_independent() {
        let config = config_with(&[("en", 0.5), ("de", 0.5)]);
        let triplet = Triplet::new(toks(&["a", "b"]), toks(&["c", "d"]), toks(&["e", "f"]), "en");
        let batch: Vec<Triplet> = vec![triplet; 10_000];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mixed = mix_batch(&batch, &config, &DictTranslator, &TemplateParser, &mut rng);

        let n = mixed.len() as f64;
        let p_a = mixed.iter().filter(|m| m.anchor.lang == "de").count() as f64 / n;
        let p_p = mixed.iter().filter(|m| m.positive.lang == "de").count() as f64 / n;
        let p_joint = mixed
            .iter()
            .filter(|m| m.anchor.lang == "de" && m.positive.lang == "de")
            .count() as f64
            / n;
        assert!((p_joint - p_a * p_p).abs() <= 0.03, "joint {p_joint} vs {}", p_a * p_p);
    }

    #[test]
    fn stub_parser_linearization_is_reproduced_verbatim() {
        struct FixedParser;
        impl SentenceParser for FixedParser {
            fn parse(&self, _: &[String]) -> Result<AmrGraph, MixError> {
                Ok(parse_penman("(w / want-01 :ARG0 (b / boy))").unwrap())
            }
        }
        let config = config_with(&[("de", 1.0)]);
        let item = mix_example(
            &toks(&["anything"]),
            &config,
            &DictTranslator,
            &FixedParser,
            &mut item_rng(1),
        );
        assert_eq!(item.tokens, toks(&["(", "want-01", ":ARG0", "(", "boy", ")", ")"]));
    }

    #[test]
    fn failures_fall_back_to_english_text() {
        struct BrokenParser;
        impl SentenceParser for BrokenParser {
            fn parse(&self, _: &[String]) -> Result<AmrGraph, MixError> {
                Err(MixError::Subprocess("down".into()))
            }
        }
        let config = config_with(&[("de", 1.0)]);
        let sentence = toks(&["keep", "me"]);
        let item =
            mix_example(&sentence, &config, &DictTranslator, &BrokenParser, &mut item_rng(3));
        assert_eq!(item.kind, ItemKind::Text);
        assert_eq!(item.lang, "en");
        assert_eq!(item.tokens, sentence);
    }

    #[test]
    fn template_parser_builds_a_valid_star() {
        let g = TemplateParser.parse(&toks(&["The", "dog", "barks", "."])).unwrap();
        assert!(validate(&g).is_empty());
        assert_eq!(g.nodes.len(), 3);
        assert_eq!(g.root, NodeId::new("n0"));
        assert_eq!(g.node(&g.root).unwrap().concept, "the");
        let tokens = linearize(&g, Scheme::VariableFree).tokens;
        assert_eq!(tokens, toks(&["(", "the", ":op1", "(", "dog", ")", ":op2", "(", "barks", ")", ")"]));
    }

    #[test]
    fn template_parser_needs_content() {
        assert!(matches!(
            TemplateParser.parse(&toks(&["...", "!!"])),
            Err(MixError::NoContent)
        ));
    }

    #[test]
    fn mixing_an_empty_batch_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mixed =
            mix_batch(&[], &MixerConfig::default(), &DictTranslator, &TemplateParser, &mut rng);
        assert!(mixed.is_empty());
    }

    #[test]
    fn config_validation_catches_bad_sets() {
        assert!(config_with(&[("de", 1.0)]).validate().is_err());
        assert!(config_with(&[("en", 0.5), ("de", 0.4)]).validate().is_err());
        assert!(config_with(&[("en", 1.5), ("de", -0.5)]).validate().is_err());
        assert!(config_with(&[]).validate().is_err());
        assert!(MixerConfig::default().validate().is_ok());
    }

    #[test]
    fn dry_run_jsonl_shape() {
        let config = config_with(&[("de", 1.0)]);
        let t = Triplet::new(toks(&["a"]), toks(&["b"]), toks(&["c"]), "en");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mixed = mix_batch(&[t], &config, &DictTranslator, &TemplateParser, &mut rng);
        let jsonl = write_mixed_jsonl(&mixed);
        let lines: Vec<&str> = jsonl.lines().collect();
        assert_eq!(lines.len(), 3);
        for line in lines {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert_eq!(v["kind"], "graph");
            assert_eq!(v["lang"], "de");
            assert!(v["tokens"].is_array());
        }
    }

    fn training_setup() -> (MeanPoolEncoder, Vec<Triplet>) {
        let counts: BTreeMap<String, u64> = BTreeMap::new();
        let vocab = build_vocab(&counts, &byte_base(), 5);
        let encoder = MeanPoolEncoder::new(vocab, 6, 4, 11);
        let data = vec![
            Triplet::new(toks(&["sun", "shines"]), toks(&["sun", "bright"]), toks(&["rain"]), "en"),
            Triplet::new(toks(&["rain", "falls"]), toks(&["rain", "wet"]), toks(&["sun"]), "en"),
        ];
        (encoder, data)
    }

    #[test]
    fn zero_steps_leave_parameters_untouched() {
        let (mut enc, data) = training_setup();
        let before = enc.params().to_vec();
        let config = MixerConfig { max_steps: 0, ..MixerConfig::default() };
        let curve = run_mixed_training(
            &mut enc,
            &data,
            &config,
            &TrainConfig::default(),
            &DictTranslator,
            &TemplateParser,
        )
        .unwrap();
        assert!(curve.is_empty());
        assert_eq!(enc.params(), before.as_slice());
    }

    #[test]
    fn mixed_training_reduces_loss() {
        let (mut enc, data) = training_setup();
        let config = MixerConfig { max_steps: 50, batch_size: 2, seed: 4, ..MixerConfig::default() };
        let train = TrainConfig { learning_rate: 0.1, temperature: 0.1, ..TrainConfig::default() };
        let curve = run_mixed_training(
            &mut enc,
            &data,
            &config,
            &train,
            &DictTranslator,
            &TemplateParser,
        )
        .unwrap();
        assert_eq!(curve.len(), 50);
        let head: f64 = curve[..5].iter().sum::<f64>() / 5.0;
        let tail: f64 = curve[45..].iter().sum::<f64>() / 5.0;
        assert!(tail < head, "loss head {head}, tail {tail}");
    }

    #[test]
    fn same_seed_reproduces_final_parameters() {
        let run = || {
            let (mut enc, data) = training_setup();
            let config =
                MixerConfig { max_steps: 10, batch_size: 2, seed: 9, ..MixerConfig::default() };
            let train =
                TrainConfig { learning_rate: 0.05, temperature: 0.2, ..TrainConfig::default() };
            run_mixed_training(
                &mut enc,
                &data,
                &config,
                &train,
                &DictTranslator,
                &TemplateParser,
            )
            .unwrap();
            enc.params().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn translation_cache_collapses_repeat_work() {
        struct CountingTranslator {
            calls: RefCell<usize>,
        }
        impl Translator for CountingTranslator {
            fn translate(&self, tokens: &[String], lang: &str) -> Result<Vec<String>, MixError> {
                *self.calls.borrow_mut() += 1;
                DictTranslator.translate(tokens, lang)
            }
        }
        let counting = CountingTranslator { calls: RefCell::new(0) };
        let caching = CachingTranslator::new(&counting);
        let sentence = toks(&["same", "again"]);
        for _ in 0..5 {
            caching.translate(&sentence, "de").unwrap();
        }
        caching.translate(&sentence, "fr").unwrap();
        assert_eq!(*counting.calls.borrow(), 2);
    }

    #[test]
    fn subprocess_translator_and_parser_speak_the_line_protocol() {
        let translator = SubprocessTranslator::spawn(
            "sh",
            &[
                "-c".to_string(),
                r#"while IFS="	" read -r lang sent; do out=""; for w in $sent; do out="$out ${lang}+${w}"; done; echo $out; done"#
                    .to_string(),
            ],
        )
        .unwrap();
        let out = translator.translate(&toks(&["good", "day"]), "de").unwrap();
        assert_eq!(out, toks(&["de+good", "de+day"]));

        let parser = SubprocessParser::spawn(
            "sh",
            &["-c".to_string(), r#"while read -r _; do echo "(d / dog-01 :ARG0 (c / cat))"; done"#.to_string()],
        )
        .unwrap();
        let g = parser.parse(&toks(&["whatever"])).unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert!(validate(&g).is_empty());

        let garbage = SubprocessParser::spawn(
            "sh",
            &["-c".to_string(), "while read -r _; do echo 'not penman'; done".to_string()],
        )
        .unwrap();
        assert!(garbage.parse(&toks(&["x"])).is_err());
    }
}
