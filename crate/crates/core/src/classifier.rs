//! Hashed n-gram linear classifier plus score-file ingestion.
//!
//! A small logistic-regression model over hashed word 1-/2-gram frequency
//! features, trained with seeded SGD so retraining is bit-identical. It
//! stands in wherever the pipeline needs a text scorer (language id, web
//! quality, ASCII math, open QA); externally produced scores can be
//! supplied instead through a [`ScoreFile`].

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hashing;
use crate::record::Document;
use crate::stats::StageStats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Positive,
    Negative,
}

#[derive(Debug, Clone)]
pub struct LabeledExample {
    pub text: String,
    pub label: Label,
}

/// Training hyperparameters. Defaults match the shipped pipeline models.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Power-of-two feature dimension.
    pub feature_dim: usize,
    pub epochs: u32,
    pub learning_rate: f64,
    /// Word n-gram orders hashed into features.
    pub ngram_orders: Vec<u8>,
    pub hash_seed: u64,
    /// Seed for example shuffling.
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            feature_dim: 1 << 20,
            epochs: 5,
            learning_rate: 0.1,
            ngram_orders: vec![1, 2],
            hash_seed: 0x5eed_cafe,
            shuffle_seed: 42,
        }
    }
}

/// Logistic regression over hashed n-gram counts.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    pub feature_dim: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub ngram_orders: Vec<u8>,
    pub hash_seed: u64,
}

/// Sparse feature vector: index -> normalized count.
pub fn features(text: &str, orders: &[u8], hash_seed: u64, dim: usize) -> BTreeMap<u32, f64> {
    debug_assert!(dim.is_power_of_two());
    let tokens: Vec<String> = text.split_whitespace().map(str::to_lowercase).collect();
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    let mut total = 0u64;
    let mask = (dim - 1) as u64;
    for &n in orders {
        let n = n as usize;
        if n == 0 || tokens.len() < n {
            continue;
        }
        for window in tokens.windows(n) {
            let gram = window.join(" ");
            let idx = (hashing::hash64_seeded(hash_seed, gram.as_bytes()) & mask) as u32;
            *counts.entry(idx).or_insert(0.0) += 1.0;
            total += 1;
        }
    }
    if total > 0 {
        for v in counts.values_mut() {
            *v /= total as f64;
        }
    }
    counts
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl NgramModel {
    /// Train by SGD on the logistic loss. Deterministic for a fixed config:
    /// identical inputs give bit-identical weights. Returns the model and
    /// the mean training loss per epoch.
    pub fn train(examples: &[LabeledExample], cfg: &TrainConfig) -> Result<(NgramModel, Vec<f64>)> {
        if !cfg.feature_dim.is_power_of_two() || cfg.feature_dim == 0 {
            return Err(Error::Config(format!(
                "feature_dim must be a power of two, got {}",
                cfg.feature_dim
            )));
        }
        let positives = examples.iter().filter(|e| e.label == Label::Positive).count();
        if positives == 0 || positives == examples.len() {
            return Err(Error::InvalidInput(
                "training needs at least one example per class".into(),
            ));
        }

        let feats: Vec<BTreeMap<u32, f64>> = examples
            .iter()
            .map(|e| features(&e.text, &cfg.ngram_orders, cfg.hash_seed, cfg.feature_dim))
            .collect();
        let targets: Vec<f64> = examples
            .iter()
            .map(|e| if e.label == Label::Positive { 1.0 } else { 0.0 })
            .collect();

        let mut model = NgramModel {
            feature_dim: cfg.feature_dim,
            weights: vec![0.0; cfg.feature_dim],
            bias: 0.0,
            ngram_orders: cfg.ngram_orders.clone(),
            hash_seed: cfg.hash_seed,
        };

        let mut order: Vec<usize> = (0..examples.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.shuffle_seed);
        let mut epoch_losses = Vec::with_capacity(cfg.epochs as usize);
        for _epoch in 0..cfg.epochs {
            order.shuffle(&mut rng);
            let mut loss_sum = 0.0;
            for &i in &order {
                let x = &feats[i];
                let y = targets[i];
                let z =
                    model.bias + x.iter().map(|(j, v)| model.weights[*j as usize] * v).sum::<f64>();
                let s = sigmoid(z);
                loss_sum += logistic_loss(s, y);
                let g = s - y;
                let lr = cfg.learning_rate;
                for (j, v) in x {
                    model.weights[*j as usize] -= lr * g * v;
                }
                model.bias -= lr * g;
            }
            epoch_losses.push(loss_sum / examples.len() as f64);
        }
        Ok((model, epoch_losses))
    }

    /// Confidence in [0,1]: sigmoid of the linear score. Pure and
    /// deterministic; empty text scores `sigmoid(bias)`.
    pub fn score(&self, text: &str) -> f64 {
        let x = features(text, &self.ngram_orders, self.hash_seed, self.feature_dim);
        let z = self.bias + x.iter().map(|(j, v)| self.weights[*j as usize] * v).sum::<f64>();
        sigmoid(z)
    }

    /// Serialize to the versioned binary layout (all little-endian):
    ///
    /// ```text
    /// magic   4 bytes  b"WCNG"
    /// version u32      = 1
    /// dim     u64
    /// orders  u32 count, then count x u8
    /// seed    u64
    /// bias    f64
    /// weights dim x f64
    /// ```
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        w.write_all(b"WCNG").map_err(io)?;
        w.write_all(&1u32.to_le_bytes()).map_err(io)?;
        w.write_all(&(self.feature_dim as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.ngram_orders.len() as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&self.ngram_orders).map_err(io)?;
        w.write_all(&self.hash_seed.to_le_bytes()).map_err(io)?;
        w.write_all(&self.bias.to_le_bytes()).map_err(io)?;
        for v in &self.weights {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<NgramModel> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut r = BufReader::new(file);
        let bad = |detail: String| Error::format("model file", path, detail);

        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| Error::io(path, e))?;
        if &magic != b"WCNG" {
            return Err(bad("bad magic".into()));
        }
        let version = read_u32(&mut r, path)?;
        if version != 1 {
            return Err(bad(format!("unsupported version {version}")));
        }
        let dim = read_u64(&mut r, path)? as usize;
        if !dim.is_power_of_two() || dim > (1 << 30) {
            return Err(bad(format!("implausible feature_dim {dim}")));
        }
        let n_orders = read_u32(&mut r, path)? as usize;
        if n_orders > 8 {
            return Err(bad(format!("implausible order count {n_orders}")));
        }
        let mut orders = vec![0u8; n_orders];
        r.read_exact(&mut orders).map_err(|e| Error::io(path, e))?;
        let seed = read_u64(&mut r, path)?;
        let bias = f64::from_le_bytes(read_8(&mut r, path)?);
        let mut weights = Vec::with_capacity(dim);
        for _ in 0..dim {
            weights.push(f64::from_le_bytes(read_8(&mut r, path)?));
        }
        if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
            return Err(bad("non-finite weights".into()));
        }
        Ok(NgramModel { feature_dim: dim, weights, bias, ngram_orders: orders, hash_seed: seed })
    }
}

/// Numerically safe logistic loss -[y ln s + (1-y) ln(1-s)].
pub fn logistic_loss(s: f64, y: f64) -> f64 {
    let eps = 1e-12;
    -(y * (s + eps).ln() + (1.0 - y) * (1.0 - s + eps).ln())
}

fn read_8(r: &mut impl Read, path: &Path) -> Result<[u8; 8]> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    Ok(u64::from_le_bytes(read_8(r, path)?))
}

/// Externally produced per-document confidences, `doc_id<TAB>score` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreFile {
    pub entries: BTreeMap<String, f64>,
}

impl ScoreFile {
    pub fn load(path: &Path) -> Result<ScoreFile> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut entries = BTreeMap::new();
        for (no, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (id, score) = line.split_once('\t').ok_or_else(|| {
                Error::format("score file", path, format!("line {}: missing tab", no + 1))
            })?;
            let score: f64 = score.trim().parse().map_err(|_| {
                Error::format("score file", path, format!("line {}: bad score", no + 1))
            })?;
            if !(0.0..=1.0).contains(&score) {
                return Err(Error::format(
                    "score file",
                    path,
                    format!("line {}: score {score} outside [0,1]", no + 1),
                ));
            }
            entries.insert(id.to_string(), score);
        }
        Ok(ScoreFile { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (id, score) in &self.entries {
            out.push_str(&format!("{id}\t{score}\n"));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Where per-document scores come from.
pub enum ScoreSource<'a> {
    Model(&'a NgramModel),
    File(&'a ScoreFile),
}

impl ScoreSource<'_> {
    pub fn score_for(&self, doc: &Document) -> Option<f64> {
        match self {
            ScoreSource::Model(m) => Some(m.score(&doc.text)),
            ScoreSource::File(f) => f.entries.get(&doc.doc_id).copied(),
        }
    }
}

/// Keep documents whose score strictly exceeds `threshold`. Documents
/// without a score (score-file mode) are discarded and counted under
/// `score_missing`.
pub fn filter_by_score(
    docs: Vec<Document>,
    source: &ScoreSource<'_>,
    threshold: f64,
    stats: &mut StageStats,
) -> Vec<Document> {
    let mut kept = Vec::with_capacity(docs.len());
    for doc in docs {
        stats.observe_in(&doc);
        match source.score_for(&doc) {
            None => stats.hit("score_missing"),
            Some(s) if s > threshold => {
                stats.observe_out(&doc);
                kept.push(doc);
            }
            Some(_) => stats.hit("model_score"),
        }
    }
    kept
}

/// Parse `__pos__<TAB>text` / `__neg__<TAB>text` labeled-data lines.
pub fn load_labeled(path: &Path) -> Result<Vec<LabeledExample>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| {
            Error::format("labeled data", path, format!("line {}: missing tab", no + 1))
        })?;
        let label = match label {
            "__pos__" => Label::Positive,
            "__neg__" => Label::Negative,
            other => {
                return Err(Error::format(
                    "labeled data",
                    path,
                    format!("line {}: unknown label {other:?}", no + 1),
                ))
            }
        };
        out.push(LabeledExample { text: text.to_string(), label });
    }
    Ok(out)
}
