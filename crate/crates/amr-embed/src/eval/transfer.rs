//! Zero-shot cross-lingual transfer: fit one English classifier per task on
//! frozen embeddings, pick its regularization on the pooled all-language dev
//! split, then report per-language accuracy plus seen/all macro-averages.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::logreg::{accuracy, fit_logreg, LogRegModel};
use super::{pair_features, EvalError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRecord {
    pub text: String,
    /// Second sentence for pair tasks; single-sentence tasks leave it unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text2: Option<String>,
    pub label: usize,
    pub lang: String,
    pub split: Split,
}

#[derive(Debug, Clone)]
pub struct TransferTask {
    pub name: String,
    pub records: Vec<TransferRecord>,
    /// Languages the embedder saw in training; drives the seen macro-average.
    pub seen: BTreeSet<String>,
}

impl TransferTask {
    pub fn new(
        name: &str,
        records: Vec<TransferRecord>,
        seen: BTreeSet<String>,
    ) -> Result<Self, EvalError> {
        let mut has = [false; 3];
        for r in &records {
            has[r.split as usize] = true;
            if r.split == Split::Train && r.lang != "en" {
                return Err(EvalError::TrainNotEnglish { lang: r.lang.clone() });
            }
        }
        for (present, split) in has.into_iter().zip(["train", "dev", "test"]) {
            if !present {
                return Err(EvalError::MissingSplit { split });
            }
        }
        let labels: BTreeSet<usize> = records.iter().map(|r| r.label).collect();
        let max = *labels.iter().max().expect("non-empty by split check");
        if labels.len() != max + 1 {
            return Err(EvalError::InvalidData(format!(
                "labels must be contiguous from 0, found {labels:?}"
            )));
        }
        let paired = records[0].text2.is_some();
        if records.iter().any(|r| r.text2.is_some() != paired) {
            return Err(EvalError::InvalidData(
                "records mix single-sentence and sentence-pair shapes".into(),
            ));
        }
        Ok(TransferTask { name: name.into(), records, seen })
    }
}

/// Regularization strengths 2^-5 .. 2^5, searched in this order.
pub fn reg_grid() -> Vec<f64> {
    (-5..=5).map(|k| 2f64.powi(k)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub task: String,
    pub selected_reg: f64,
    /// Micro accuracy on the pooled dev union under the selected model.
    pub pooled_dev_accuracy: f64,
    pub dev_accuracy: BTreeMap<String, f64>,
    pub test_accuracy: BTreeMap<String, f64>,
    pub dev_macro_seen: Option<f64>,
    pub dev_macro_all: f64,
    pub test_macro_seen: Option<f64>,
    pub test_macro_all: f64,
    /// Task-level classifier fits; always 1.
    pub classifier_fits: usize,
    /// Fits spent on the regularization search.
    pub grid_fits: usize,
}

struct Featurized {
    features: Vec<f64>,
    label: usize,
    lang: String,
    split: Split,
}

fn featurize<F>(task: &TransferTask, embed: &mut F) -> Result<Vec<Featurized>, EvalError>
where
    F: FnMut(&str) -> Result<Vec<f64>, EvalError>,
{
    let mut cache: HashMap<String, Vec<f64>> = HashMap::new();
    let mut lookup = |text: &str, embed: &mut F| -> Result<Vec<f64>, EvalError> {
        if let Some(hit) = cache.get(text) {
            return Ok(hit.clone());
        }
        let v = embed(text)?;
        cache.insert(text.to_string(), v.clone());
        Ok(v)
    };
    task.records
        .iter()
        .map(|r| {
            let a = lookup(&r.text, embed)?;
            let features = match &r.text2 {
                Some(t2) => pair_features(&a, &lookup(t2, embed)?)?,
                None => a,
            };
            Ok(Featurized { features, label: r.label, lang: r.lang.clone(), split: r.split })
        })
        .collect()
}

fn per_language_accuracy(
    model: &LogRegModel,
    rows: &[&Featurized],
) -> BTreeMap<String, f64> {
    let mut by_lang: BTreeMap<&str, (Vec<Vec<f64>>, Vec<usize>)> = BTreeMap::new();
    for r in rows {
        let entry = by_lang.entry(&r.lang).or_default();
        entry.0.push(r.features.clone());
        entry.1.push(r.label);
    }
    by_lang
        .into_iter()
        .map(|(lang, (x, y))| (lang.to_string(), accuracy(model, &x, &y)))
        .collect()
}

fn macro_average(per_lang: &BTreeMap<String, f64>, keep: Option<&BTreeSet<String>>) -> Option<f64> {
    let vals: Vec<f64> = per_lang
        .iter()
        .filter(|(lang, _)| keep.is_none_or(|s| s.contains(*lang)))
        .map(|(_, acc)| *acc)
        .collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// One task, one classifier: grid-search the regularization on the pooled
/// dev union, refit once, report everywhere.
pub fn transfer_evaluate<F>(
    task: &TransferTask,
    mut embed: F,
    seed: u64,
) -> Result<TransferReport, EvalError>
where
    F: FnMut(&str) -> Result<Vec<f64>, EvalError>,
{
    let rows = featurize(task, &mut embed)?;
    let train: Vec<&Featurized> = rows.iter().filter(|r| r.split == Split::Train).collect();
    let dev: Vec<&Featurized> = rows.iter().filter(|r| r.split == Split::Dev).collect();
    let test: Vec<&Featurized> = rows.iter().filter(|r| r.split == Split::Test).collect();

    let train_x: Vec<Vec<f64>> = train.iter().map(|r| r.features.clone()).collect();
    let train_y: Vec<usize> = train.iter().map(|r| r.label).collect();
    let dev_x: Vec<Vec<f64>> = dev.iter().map(|r| r.features.clone()).collect();
    let dev_y: Vec<usize> = dev.iter().map(|r| r.label).collect();

    let mut grid_fits = 0;
    let mut best: Option<(f64, f64)> = None;
    for reg in reg_grid() {
        let model = fit_logreg(&train_x, &train_y, reg, seed)?;
        grid_fits += 1;
        let acc = accuracy(&model, &dev_x, &dev_y);
        // Strict improvement only, so ties keep the earliest grid entry.
        if best.is_none_or(|(b, _)| acc > b) {
            best = Some((acc, reg));
        }
    }
    let (pooled_dev_accuracy, selected_reg) = best.expect("grid is non-empty");

    let model = fit_logreg(&train_x, &train_y, selected_reg, seed)?;
    let classifier_fits = 1;

    let dev_accuracy = per_language_accuracy(&model, &dev);
    let test_accuracy = per_language_accuracy(&model, &test);
    let dev_macro_all = macro_average(&dev_accuracy, None).expect("dev split non-empty");
    let test_macro_all = macro_average(&test_accuracy, None).expect("test split non-empty");

    Ok(TransferReport {
        task: task.name.clone(),
        selected_reg,
        pooled_dev_accuracy,
        dev_macro_seen: macro_average(&dev_accuracy, Some(&task.seen)),
        test_macro_seen: macro_average(&test_accuracy, Some(&task.seen)),
        dev_accuracy,
        test_accuracy,
        dev_macro_all,
        test_macro_all,
        classifier_fits,
        grid_fits,
    })
}

/// Parse transfer records from JSONL; blank lines are skipped.
pub fn read_transfer_jsonl(text: &str) -> Result<Vec<TransferRecord>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line)
                .map_err(|e| EvalError::Parse { line: i + 1, message: e.to_string() })
        })
        .collect()
}

pub fn write_transfer_jsonl(records: &[TransferRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}
