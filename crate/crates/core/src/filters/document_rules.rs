//! Document-level rules: word counts, word shapes, symbol density,
//! bullet/ellipsis layout and stop-word presence.

use super::{RuleThresholds, RuleVerdict, TextSegmentation};
use crate::textutil;

/// The seven document-level verdicts.
pub fn document_filter(
    text: &str,
    seg: &TextSegmentation,
    thresholds: &RuleThresholds,
) -> Vec<RuleVerdict> {
    let word_count = seg.words.len() as u64;
    let sentence_count = seg.sentences.len() as u64;

    let mut out = Vec::with_capacity(7);

    // word count inside the inclusive range
    let (wc_min, wc_max) = thresholds.word_count_range;
    let wc_ok = word_count >= wc_min && word_count <= wc_max;
    out.push(RuleVerdict::new(
        "word_count_range",
        word_count as f64,
        if word_count > wc_max { wc_max as f64 } else { wc_min as f64 },
        wc_ok,
    ));

    // mean word length inside the inclusive range
    let total_word_chars: u64 = seg.words.iter().map(|w| textutil::char_count(w) as u64).sum();
    let (len_min, len_max) = thresholds.mean_word_len_range;
    let too_short = textutil::ratio_lt(total_word_chars, word_count, len_min);
    let too_long = textutil::ratio_gt(total_word_chars, word_count, len_max);
    // a document with no words at all has no meaningful mean: fail low
    let mean_ok = word_count > 0 && !too_short && !too_long;
    out.push(RuleVerdict::new(
        "mean_word_len_range",
        textutil::ratio_f64(total_word_chars, word_count),
        if too_long { len_max } else { len_min },
        mean_ok,
    ));

    // hash symbols + ellipses per word
    let hashes = text.chars().filter(|&c| c == '#').count() as u64;
    let ellipses = text.matches("...").count() as u64 + text.matches('…').count() as u64;
    out.push(RuleVerdict::ratio_capped(
        "symbol_word_ratio",
        hashes + ellipses,
        word_count,
        thresholds.symbol_word_ratio,
    ));

    // sentences starting with a bullet
    let bullet_starts = seg
        .sentences
        .iter()
        .filter(|s| s.chars().next().is_some_and(|c| thresholds.bullet_chars.contains(&c)))
        .count() as u64;
    out.push(RuleVerdict::ratio_capped(
        "bullet_start_ratio",
        bullet_starts,
        sentence_count,
        thresholds.bullet_start_ratio,
    ));

    // sentences ending with an ellipsis
    let ellipsis_ends = seg
        .sentences
        .iter()
        .filter(|s| s.ends_with("...") || s.ends_with('…'))
        .count() as u64;
    out.push(RuleVerdict::ratio_capped(
        "ellipsis_end_ratio",
        ellipsis_ends,
        sentence_count,
        thresholds.ellipsis_end_ratio,
    ));

    // words with no alphabetic character
    let non_alpha = seg
        .words
        .iter()
        .filter(|w| !w.chars().any(char::is_alphabetic))
        .count() as u64;
    out.push(RuleVerdict::ratio_capped(
        "non_alpha_word_ratio",
        non_alpha,
        word_count,
        thresholds.non_alpha_word_ratio,
    ));

    // distinct stop words present
    let distinct_stop = distinct_stop_words(seg, &thresholds.stop_words);
    out.push(RuleVerdict::new(
        "min_stop_words",
        distinct_stop as f64,
        thresholds.min_stop_words as f64,
        distinct_stop >= thresholds.min_stop_words as usize,
    ));

    out
}

/// Count how many distinct entries of `stop_words` occur in the text.
/// A word matches after lowercasing and trimming non-alphabetic edges, so
/// "The," counts as "the".
pub fn distinct_stop_words(seg: &TextSegmentation, stop_words: &[String]) -> usize {
    let mut found = vec![false; stop_words.len()];
    for word in &seg.words {
        let bare: String = word
            .trim_matches(|c: char| !c.is_alphabetic())
            .to_lowercase();
        if bare.is_empty() {
            continue;
        }
        if let Some(idx) = stop_words.iter().position(|s| *s == bare) {
            found[idx] = true;
        }
    }
    found.iter().filter(|f| **f).count()
}
