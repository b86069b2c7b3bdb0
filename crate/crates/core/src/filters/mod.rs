//! Language, length, repetition, document-level and sentence-level quality
//! rules with auditable per-rule verdicts.
//!
//! Every threshold lives in [`RuleThresholds`]; no rule hard-codes a number.
//! Thresholds are decimal constants and comparisons are strict: a measured
//! ratio fails only when it strictly exceeds (or strictly leaves the range
//! of) its threshold, evaluated in exact arithmetic via
//! [`crate::textutil::ratio_cmp`].

mod document_rules;
mod repetition;
mod segment;
mod sentence_rules;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::record::Document;
use crate::textutil;

pub use document_rules::document_filter;
pub use repetition::{repetition_filter, RepetitionMeasurements};
pub use segment::{segment, split_sentences, TextSegmentation};
pub use sentence_rules::{sentence_filter, SentenceFilterOutcome};

/// All filter constants, config-overridable. The defaults are the published
/// pipeline constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleThresholds {
    /// Language-id confidence a page must strictly exceed to be kept.
    pub lang_confidence: f64,
    /// Minimum character count for WET-path documents.
    pub wet_min_length: u64,
    pub dup_sentence_ratio: f64,
    pub dup_sentence_char_ratio: f64,
    pub dup_paragraph_ratio: f64,
    pub dup_paragraph_char_ratio: f64,
    /// n -> max fraction of characters covered by the most common word n-gram.
    #[serde(with = "u8_key_map")]
    pub top_ngram_char_ratio: BTreeMap<u8, f64>,
    /// n -> max fraction of characters covered by duplicated word n-grams
    /// (each character counted once across overlapping occurrences).
    #[serde(with = "u8_key_map")]
    pub dup_ngram_char_ratio: BTreeMap<u8, f64>,
    /// Inclusive word-count range a document must fall into.
    pub word_count_range: (u64, u64),
    /// Inclusive mean-word-length range.
    pub mean_word_len_range: (f64, f64),
    /// Max (hash symbols + ellipses) per word.
    pub symbol_word_ratio: f64,
    /// Max fraction of sentences starting with a bullet character.
    pub bullet_start_ratio: f64,
    /// Max fraction of sentences ending with an ellipsis.
    pub ellipsis_end_ratio: f64,
    /// Max fraction of words without any alphabetic character.
    pub non_alpha_word_ratio: f64,
    /// Minimum number of distinct stop words a document must contain.
    pub min_stop_words: u32,
    /// Per-sentence uppercase-letter fraction above which the sentence is
    /// removed.
    pub sentence_uppercase_ratio: f64,
    /// If sentence removal deletes more than this fraction of the words,
    /// the whole document is discarded.
    pub max_removed_word_fraction: f64,
    /// Stop-word lexicon for the `min_stop_words` rule.
    pub stop_words: Vec<String>,
    /// Characters that count as bullets for `bullet_start_ratio`.
    pub bullet_chars: Vec<char>,
}

impl Default for RuleThresholds {
    fn default() -> Self {
        RuleThresholds {
            lang_confidence: 0.5,
            wet_min_length: 300,
            dup_sentence_ratio: 0.3,
            dup_sentence_char_ratio: 0.2,
            dup_paragraph_ratio: 0.3,
            dup_paragraph_char_ratio: 0.2,
            top_ngram_char_ratio: BTreeMap::from([(2, 0.20), (3, 0.18), (4, 0.16)]),
            dup_ngram_char_ratio: BTreeMap::from([
                (5, 0.15),
                (6, 0.14),
                (7, 0.13),
                (8, 0.12),
                (9, 0.11),
                (10, 0.10),
            ]),
            word_count_range: (50, 100_000),
            mean_word_len_range: (3.0, 10.0),
            symbol_word_ratio: 0.1,
            bullet_start_ratio: 0.9,
            ellipsis_end_ratio: 0.3,
            non_alpha_word_ratio: 0.2,
            min_stop_words: 2,
            sentence_uppercase_ratio: 0.6,
            max_removed_word_fraction: 0.05,
            stop_words: ["the", "be", "to", "of", "and", "that", "have", "with"]
                .into_iter()
                .map(String::from)
                .collect(),
            bullet_chars: vec!['•', '‣', '▪', '-', '*'],
        }
    }
}

impl RuleThresholds {
    /// Override one threshold by its public name, e.g.
    /// `dup_sentence_ratio`, `top_ngram_char_ratio.2`,
    /// `word_count_range.min`.
    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        match name {
            "lang_confidence" => self.lang_confidence = value,
            "wet_min_length" => self.wet_min_length = value as u64,
            "dup_sentence_ratio" => self.dup_sentence_ratio = value,
            "dup_sentence_char_ratio" => self.dup_sentence_char_ratio = value,
            "dup_paragraph_ratio" => self.dup_paragraph_ratio = value,
            "dup_paragraph_char_ratio" => self.dup_paragraph_char_ratio = value,
            "symbol_word_ratio" => self.symbol_word_ratio = value,
            "bullet_start_ratio" => self.bullet_start_ratio = value,
            "ellipsis_end_ratio" => self.ellipsis_end_ratio = value,
            "non_alpha_word_ratio" => self.non_alpha_word_ratio = value,
            "min_stop_words" => self.min_stop_words = value as u32,
            "sentence_uppercase_ratio" => self.sentence_uppercase_ratio = value,
            "max_removed_word_fraction" => self.max_removed_word_fraction = value,
            "word_count_range.min" => self.word_count_range.0 = value as u64,
            "word_count_range.max" => self.word_count_range.1 = value as u64,
            "mean_word_len_range.min" => self.mean_word_len_range.0 = value,
            "mean_word_len_range.max" => self.mean_word_len_range.1 = value,
            other => {
                let set_map = |map: &mut BTreeMap<u8, f64>, key: &str| -> Result<(), String> {
                    let n: u8 = key.parse().map_err(|_| format!("bad n-gram order: {key}"))?;
                    if !map.contains_key(&n) {
                        return Err(format!("no rule for n-gram order {n}"));
                    }
                    map.insert(n, value);
                    Ok(())
                };
                if let Some(key) = other.strip_prefix("top_ngram_char_ratio.") {
                    set_map(&mut self.top_ngram_char_ratio, key)?;
                } else if let Some(key) = other.strip_prefix("dup_ngram_char_ratio.") {
                    set_map(&mut self.dup_ngram_char_ratio, key)?;
                } else {
                    return Err(format!("unknown threshold: {other}"));
                }
            }
        }
        Ok(())
    }

    /// Sanity diagnostics for configuration validation. Empty means usable.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ratios: [(&str, f64); 10] = [
            ("lang_confidence", self.lang_confidence),
            ("dup_sentence_ratio", self.dup_sentence_ratio),
            ("dup_sentence_char_ratio", self.dup_sentence_char_ratio),
            ("dup_paragraph_ratio", self.dup_paragraph_ratio),
            ("dup_paragraph_char_ratio", self.dup_paragraph_char_ratio),
            ("symbol_word_ratio", self.symbol_word_ratio),
            ("bullet_start_ratio", self.bullet_start_ratio),
            ("ellipsis_end_ratio", self.ellipsis_end_ratio),
            ("non_alpha_word_ratio", self.non_alpha_word_ratio),
            ("sentence_uppercase_ratio", self.sentence_uppercase_ratio),
        ];
        for (name, v) in ratios {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("threshold {name}={v} outside [0,1]"));
            }
        }
        for (name, map) in [
            ("top_ngram_char_ratio", &self.top_ngram_char_ratio),
            ("dup_ngram_char_ratio", &self.dup_ngram_char_ratio),
        ] {
            for (n, v) in map {
                if !(0.0..=1.0).contains(v) {
                    out.push(format!("threshold {name}.{n}={v} outside [0,1]"));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.max_removed_word_fraction) {
            out.push(format!(
                "threshold max_removed_word_fraction={} outside [0,1]",
                self.max_removed_word_fraction
            ));
        }
        if self.word_count_range.0 > self.word_count_range.1 {
            out.push("word_count_range is not ordered".into());
        }
        if self.mean_word_len_range.0 > self.mean_word_len_range.1 {
            out.push("mean_word_len_range is not ordered".into());
        }
        if self.stop_words.is_empty() {
            out.push("stop_words is empty".into());
        }
        out
    }
}

mod u8_key_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<u8, f64>, s: S) -> Result<S::Ok, S::Error> {
        let stringly: BTreeMap<String, f64> =
            map.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        stringly.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u8, f64>, D::Error> {
        let stringly = BTreeMap::<String, f64>::deserialize(d)?;
        stringly
            .into_iter()
            .map(|(k, v)| {
                k.parse::<u8>()
                    .map(|n| (n, v))
                    .map_err(|_| serde::de::Error::custom(format!("bad n-gram order key: {k}")))
            })
            .collect()
    }
}

/// Outcome of one rule applied to one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleVerdict {
    pub rule_id: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl RuleVerdict {
    pub fn new(rule_id: &str, measured: f64, threshold: f64, passed: bool) -> Self {
        RuleVerdict { rule_id: rule_id.to_string(), measured, threshold, passed }
    }

    /// Verdict for a "ratio must not exceed t" rule, decided exactly.
    pub fn ratio_capped(rule_id: &str, num: u64, den: u64, t: f64) -> Self {
        RuleVerdict::new(
            rule_id,
            textutil::ratio_f64(num, den),
            t,
            !textutil::ratio_gt(num, den, t),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Keep,
    Discard,
}

/// Auditable record of every rule applied to one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub doc_id: String,
    pub verdicts: Vec<RuleVerdict>,
    pub decision: Decision,
    /// `(sentence_index, rule_id)` for each removed sentence; indices refer
    /// to the original document's sentence order.
    pub removed_sentences: Vec<(usize, String)>,
}

impl FilterReport {
    pub fn failed_rules(&self) -> impl Iterator<Item = &RuleVerdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }
}

/// Which extraction path produced the document; each path has its own rule
/// set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WebSource {
    Wet,
    Warc,
}

/// Keep iff the argmax language is English and its confidence strictly
/// exceeds the threshold. An empty/missing score map discards with
/// `lang_missing`.
pub fn language_filter(
    lang_scores: &BTreeMap<String, f64>,
    thresholds: &RuleThresholds,
) -> RuleVerdict {
    let best = lang_scores
        .iter()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap_or(std::cmp::Ordering::Equal));
    match best {
        None => RuleVerdict::new("lang_missing", 0.0, thresholds.lang_confidence, false),
        Some((lang, score)) => {
            let passed = lang == "en" && *score > thresholds.lang_confidence;
            RuleVerdict::new("lang_confidence", *score, thresholds.lang_confidence, passed)
        }
    }
}

/// WET length rule: discard iff the character count is below the minimum.
pub fn wet_length_filter(doc: &Document, thresholds: &RuleThresholds) -> RuleVerdict {
    let chars = doc.char_count() as u64;
    RuleVerdict::new(
        "wet_min_length",
        chars as f64,
        thresholds.wet_min_length as f64,
        chars >= thresholds.wet_min_length,
    )
}

/// Apply the full rule set for one source path. Returns the (possibly
/// sentence-trimmed) document when it is kept, plus the report either way.
/// `lang_scores`: `None` disables the language rule (no scorer configured),
/// `Some(map)` applies it, with an empty map meaning "scores missing".
pub fn run_web_filters(
    doc: &Document,
    source: WebSource,
    thresholds: &RuleThresholds,
    lang_scores: Option<&BTreeMap<String, f64>>,
) -> (Option<Document>, FilterReport) {
    let mut verdicts = Vec::new();
    if let Some(scores) = lang_scores {
        verdicts.push(language_filter(scores, thresholds));
    }
    let mut removed_sentences = Vec::new();
    let mut result_doc = doc.clone();

    match source {
        WebSource::Wet => {
            verdicts.push(wet_length_filter(doc, thresholds));
        }
        WebSource::Warc => {
            let seg = segment(&doc.text);
            verdicts.extend(repetition_filter(&doc.text, &seg, thresholds));
            verdicts.extend(document_filter(&doc.text, &seg, thresholds));
            let outcome = sentence_filter(doc, thresholds);
            verdicts.push(outcome.fraction_verdict.clone());
            removed_sentences = outcome.removed;
            result_doc = outcome.document;
        }
    }

    let decision = if verdicts.iter().all(|v| v.passed) {
        Decision::Keep
    } else {
        Decision::Discard
    };
    let report = FilterReport {
        doc_id: doc.doc_id.clone(),
        verdicts,
        decision,
        removed_sentences,
    };
    let kept = match decision {
        Decision::Keep => Some(result_doc),
        Decision::Discard => None,
    };
    (kept, report)
}
