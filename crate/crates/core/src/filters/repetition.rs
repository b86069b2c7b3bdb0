//! Internal-repetition rules: duplicated sentences/paragraphs and n-gram
//! character ratios.
//!
//! "Duplicated" counts occurrences after the first of an identical string,
//! so k copies contribute k-1 duplicates. For the top n-gram rules
//! (n = 2..4) the measured quantity is `occurrences * characters-in-gram`
//! over total text characters; for the duplicated n-gram rules (n = 5..10)
//! it is the number of word characters covered by any occurrence of an
//! n-gram that appears more than once, each character counted once no
//! matter how many overlapping n-grams cover it.

use std::collections::HashMap;

use super::{RuleThresholds, RuleVerdict, TextSegmentation};
use crate::textutil;

/// The raw numerator/denominator pairs behind the ten repetition verdicts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepetitionMeasurements {
    pub total_chars: u64,
    /// (duplicated occurrences, total) for sentences.
    pub dup_sentences: (u64, u64),
    /// Characters inside duplicated sentence occurrences.
    pub dup_sentence_chars: u64,
    pub dup_paragraphs: (u64, u64),
    pub dup_paragraph_chars: u64,
    /// n -> occurrences-of-top-gram * chars-in-gram.
    pub top_ngram_chars: HashMap<u8, u64>,
    /// n -> distinct word characters covered by duplicated n-grams.
    pub dup_ngram_chars: HashMap<u8, u64>,
}

fn duplicate_counts<'a, I>(items: I) -> (u64, u64, u64)
where
    I: Iterator<Item = &'a str>,
{
    let mut seen: HashMap<&str, ()> = HashMap::new();
    let mut total = 0u64;
    let mut dups = 0u64;
    let mut dup_chars = 0u64;
    for item in items {
        total += 1;
        if seen.insert(item, ()).is_some() {
            dups += 1;
            dup_chars += textutil::char_count(item) as u64;
        }
    }
    (dups, total, dup_chars)
}

/// Measure all repetition quantities for one segmented text.
pub fn measure_repetition(text: &str, seg: &TextSegmentation, orders_top: &[u8], orders_dup: &[u8]) -> RepetitionMeasurements {
    let total_chars = textutil::char_count(text) as u64;

    let (dup_sent, total_sent, dup_sent_chars) =
        duplicate_counts(seg.sentences.iter().map(String::as_str));

    // Whitespace-only paragraphs carry no content and are excluded from the
    // duplicate counts (blank lines would otherwise all count as copies of
    // each other).
    let (dup_par, total_par, dup_par_chars) = duplicate_counts(
        seg.paragraphs
            .iter()
            .map(String::as_str)
            .filter(|p| !p.trim().is_empty()),
    );

    let words: Vec<&str> = seg.words.iter().map(String::as_str).collect();
    let word_chars: Vec<u64> = words.iter().map(|w| textutil::char_count(w) as u64).collect();

    let mut top_ngram_chars = HashMap::new();
    for &n in orders_top {
        top_ngram_chars.insert(n, top_ngram_coverage(&words, &word_chars, n as usize));
    }
    let mut dup_ngram_chars = HashMap::new();
    for &n in orders_dup {
        dup_ngram_chars.insert(n, dup_ngram_coverage(&words, &word_chars, n as usize));
    }

    RepetitionMeasurements {
        total_chars,
        dup_sentences: (dup_sent, total_sent),
        dup_sentence_chars: dup_sent_chars,
        dup_paragraphs: (dup_par, total_par),
        dup_paragraph_chars: dup_par_chars,
        top_ngram_chars,
        dup_ngram_chars,
    }
}

fn gram_key(words: &[&str]) -> String {
    words.join("\u{1f}")
}

/// occurrences * chars of the most frequent word n-gram (ties broken toward
/// more characters).
fn top_ngram_coverage(words: &[&str], word_chars: &[u64], n: usize) -> u64 {
    if n == 0 || words.len() < n {
        return 0;
    }
    let mut counts: HashMap<String, (u64, u64)> = HashMap::new(); // key -> (count, chars)
    for i in 0..=(words.len() - n) {
        let chars: u64 = word_chars[i..i + n].iter().sum();
        let e = counts.entry(gram_key(&words[i..i + n])).or_insert((0, chars));
        e.0 += 1;
    }
    counts
        .values()
        .map(|(count, chars)| (*count, *chars))
        .max()
        .map(|(count, chars)| count * chars)
        .unwrap_or(0)
}

/// Word characters covered by occurrences of n-grams appearing >= 2 times,
/// counted once per character.
fn dup_ngram_coverage(words: &[&str], word_chars: &[u64], n: usize) -> u64 {
    if n == 0 || words.len() < n {
        return 0;
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for i in 0..=(words.len() - n) {
        *counts.entry(gram_key(&words[i..i + n])).or_insert(0) += 1;
    }
    let mut covered = vec![false; words.len()];
    for i in 0..=(words.len() - n) {
        if counts[&gram_key(&words[i..i + n])] >= 2 {
            for flag in &mut covered[i..i + n] {
                *flag = true;
            }
        }
    }
    covered
        .iter()
        .zip(word_chars)
        .filter(|(c, _)| **c)
        .map(|(_, chars)| *chars)
        .sum()
}

/// The ten repetition verdicts.
pub fn repetition_filter(
    text: &str,
    seg: &TextSegmentation,
    thresholds: &RuleThresholds,
) -> Vec<RuleVerdict> {
    let orders_top: Vec<u8> = thresholds.top_ngram_char_ratio.keys().copied().collect();
    let orders_dup: Vec<u8> = thresholds.dup_ngram_char_ratio.keys().copied().collect();
    let m = measure_repetition(text, seg, &orders_top, &orders_dup);

    let mut out = Vec::with_capacity(4 + orders_top.len() + orders_dup.len());
    out.push(RuleVerdict::ratio_capped(
        "dup_sentence_ratio",
        m.dup_sentences.0,
        m.dup_sentences.1,
        thresholds.dup_sentence_ratio,
    ));
    out.push(RuleVerdict::ratio_capped(
        "dup_sentence_char_ratio",
        m.dup_sentence_chars,
        m.total_chars,
        thresholds.dup_sentence_char_ratio,
    ));
    out.push(RuleVerdict::ratio_capped(
        "dup_paragraph_ratio",
        m.dup_paragraphs.0,
        m.dup_paragraphs.1,
        thresholds.dup_paragraph_ratio,
    ));
    out.push(RuleVerdict::ratio_capped(
        "dup_paragraph_char_ratio",
        m.dup_paragraph_chars,
        m.total_chars,
        thresholds.dup_paragraph_char_ratio,
    ));
    for (n, t) in &thresholds.top_ngram_char_ratio {
        out.push(RuleVerdict::ratio_capped(
            &format!("top_ngram_char_ratio_{n}"),
            m.top_ngram_chars[n],
            m.total_chars,
            *t,
        ));
    }
    for (n, t) in &thresholds.dup_ngram_char_ratio {
        out.push(RuleVerdict::ratio_capped(
            &format!("dup_ngram_char_ratio_{n}"),
            m.dup_ngram_chars[n],
            m.total_chars,
            *t,
        ));
    }
    out
}
