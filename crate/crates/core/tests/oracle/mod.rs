//! Independent naive re-implementations used as acceptance oracles.
//!
//! These deliberately avoid the library's code paths: segmentation is
//! re-derived, duplicate detection is quadratic scanning, n-gram coverage
//! is recomputed from scratch and threshold comparisons go through plain
//! integer arithmetic (the shipped thresholds all have at most two decimal
//! places).

use std::collections::BTreeMap;

use webcorpus::classifier::{features, logistic_loss, LabeledExample, TrainConfig};
use webcorpus::filters::{FilterReport, RuleThresholds};

pub struct OracleReport {
    /// (rule_id, measured, passed)
    pub verdicts: Vec<(String, f64, bool)>,
    pub discard: bool,
    pub removed: Vec<(usize, String)>,
}

/// ratio > t where t has at most 2 decimals: num/den > t  <=>  100*num > t100*den.
fn gt(num: usize, den: usize, t: f64) -> bool {
    let t100 = (t * 100.0).round() as u128;
    (num as u128) * 100 > t100 * (den as u128)
}

fn lt(num: usize, den: usize, t: f64) -> bool {
    let t100 = (t * 100.0).round() as u128;
    (num as u128) * 100 < t100 * (den as u128)
}

fn chars_of(s: &str) -> usize {
    s.chars().count()
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

// -- independent segmentation ------------------------------------------

fn split_paragraphs(text: &str) -> Vec<&str> {
    text.split('\n').collect()
}

/// Sentences of one paragraph: terminated by . ! ? followed by whitespace
/// or paragraph end; otherwise the whole paragraph. Trimmed, empties
/// dropped. Written over byte indices rather than a char cursor.
fn split_sentences_naive(paragraph: &str) -> Vec<String> {
    let mut out = Vec::new();
    let bytes: Vec<char> = paragraph.chars().collect();
    let mut current = String::new();
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k];
        current.push(c);
        let boundary = matches!(c, '.' | '!' | '?')
            && (k + 1 == bytes.len() || bytes[k + 1].is_whitespace());
        if boundary {
            let s = current.trim().to_string();
            if !s.is_empty() {
                out.push(s);
            }
            current.clear();
        }
        k += 1;
    }
    let s = current.trim().to_string();
    if !s.is_empty() {
        out.push(s);
    }
    out
}

fn all_sentences(text: &str) -> Vec<String> {
    split_paragraphs(text).iter().flat_map(|p| split_sentences_naive(p)).collect()
}

// -- the full WARC-path report ------------------------------------------

pub fn warc_report(text: &str, t: &RuleThresholds) -> OracleReport {
    let mut verdicts: Vec<(String, f64, bool)> = Vec::new();
    let total_chars = chars_of(text);
    let words: Vec<&str> = text.split_whitespace().collect();
    let sentences = all_sentences(text);
    let paragraphs: Vec<&str> = split_paragraphs(text)
        .into_iter()
        .filter(|p| !p.trim().is_empty())
        .collect();

    // duplicated sentences / paragraphs: occurrence i is a duplicate iff
    // an identical string occurs at j < i (quadratic scan)
    let quadratic_dups = |items: &[String]| -> (usize, usize) {
        let mut count = 0;
        let mut chars = 0;
        for i in 0..items.len() {
            if items[..i].iter().any(|prev| *prev == items[i]) {
                count += 1;
                chars += chars_of(&items[i]);
            }
        }
        (count, chars)
    };
    let owned_paragraphs: Vec<String> = paragraphs.iter().map(|p| p.to_string()).collect();
    let (dup_sent, dup_sent_chars) = quadratic_dups(&sentences);
    let (dup_par, dup_par_chars) = quadratic_dups(&owned_paragraphs);

    verdicts.push((
        "dup_sentence_ratio".into(),
        ratio(dup_sent, sentences.len()),
        !gt(dup_sent, sentences.len(), t.dup_sentence_ratio),
    ));
    verdicts.push((
        "dup_sentence_char_ratio".into(),
        ratio(dup_sent_chars, total_chars),
        !gt(dup_sent_chars, total_chars, t.dup_sentence_char_ratio),
    ));
    verdicts.push((
        "dup_paragraph_ratio".into(),
        ratio(dup_par, paragraphs.len()),
        !gt(dup_par, paragraphs.len(), t.dup_paragraph_ratio),
    ));
    verdicts.push((
        "dup_paragraph_char_ratio".into(),
        ratio(dup_par_chars, total_chars),
        !gt(dup_par_chars, total_chars, t.dup_paragraph_char_ratio),
    ));

    // n-gram rules
    let word_chars: Vec<usize> = words.iter().map(|w| chars_of(w)).collect();
    for (&n, &thr) in &t.top_ngram_char_ratio {
        let n = n as usize;
        let mut counts: BTreeMap<Vec<&str>, usize> = BTreeMap::new();
        if words.len() >= n {
            for i in 0..=(words.len() - n) {
                *counts.entry(words[i..i + n].to_vec()).or_insert(0) += 1;
            }
        }
        // most common, ties toward more characters
        let mut covered = 0usize;
        let mut best = (0usize, 0usize);
        for (gram, count) in &counts {
            let chars: usize = gram.iter().map(|w| chars_of(w)).sum();
            if (*count, chars) > best {
                best = (*count, chars);
                covered = count * chars;
            }
        }
        verdicts.push((
            format!("top_ngram_char_ratio_{n}"),
            ratio(covered, total_chars),
            !gt(covered, total_chars, thr),
        ));
    }
    for (&n, &thr) in &t.dup_ngram_char_ratio {
        let n = n as usize;
        let mut counts: BTreeMap<Vec<&str>, usize> = BTreeMap::new();
        if words.len() >= n {
            for i in 0..=(words.len() - n) {
                *counts.entry(words[i..i + n].to_vec()).or_insert(0) += 1;
            }
        }
        let mut marked = vec![false; words.len()];
        if words.len() >= n {
            for i in 0..=(words.len() - n) {
                if counts[&words[i..i + n].to_vec()] >= 2 {
                    for m in marked.iter_mut().take(i + n).skip(i) {
                        *m = true;
                    }
                }
            }
        }
        let covered: usize =
            marked.iter().zip(&word_chars).filter(|(m, _)| **m).map(|(_, c)| *c).sum();
        verdicts.push((
            format!("dup_ngram_char_ratio_{n}"),
            ratio(covered, total_chars),
            !gt(covered, total_chars, thr),
        ));
    }

    // document-level rules
    let wc = words.len();
    let (wc_min, wc_max) = t.word_count_range;
    verdicts.push((
        "word_count_range".into(),
        wc as f64,
        wc >= wc_min as usize && wc <= wc_max as usize,
    ));

    let total_word_chars: usize = word_chars.iter().sum();
    let mean_ok = wc > 0
        && !lt(total_word_chars, wc, t.mean_word_len_range.0)
        && !gt(total_word_chars, wc, t.mean_word_len_range.1);
    verdicts.push(("mean_word_len_range".into(), ratio(total_word_chars, wc), mean_ok));

    let hashes = text.chars().filter(|&c| c == '#').count();
    let mut ellipses = 0;
    let chars: Vec<char> = text.chars().collect();
    let mut k = 0;
    while k < chars.len() {
        if chars[k] == '…' {
            ellipses += 1;
            k += 1;
        } else if k + 2 < chars.len() && chars[k] == '.' && chars[k + 1] == '.' && chars[k + 2] == '.'
        {
            ellipses += 1;
            k += 3;
        } else {
            k += 1;
        }
    }
    verdicts.push((
        "symbol_word_ratio".into(),
        ratio(hashes + ellipses, wc),
        !gt(hashes + ellipses, wc, t.symbol_word_ratio),
    ));

    let bullet_starts = sentences
        .iter()
        .filter(|s| s.chars().next().map(|c| t.bullet_chars.contains(&c)).unwrap_or(false))
        .count();
    verdicts.push((
        "bullet_start_ratio".into(),
        ratio(bullet_starts, sentences.len()),
        !gt(bullet_starts, sentences.len(), t.bullet_start_ratio),
    ));

    let ellipsis_ends = sentences
        .iter()
        .filter(|s| s.ends_with("...") || s.ends_with('…'))
        .count();
    verdicts.push((
        "ellipsis_end_ratio".into(),
        ratio(ellipsis_ends, sentences.len()),
        !gt(ellipsis_ends, sentences.len(), t.ellipsis_end_ratio),
    ));

    let non_alpha = words.iter().filter(|w| !w.chars().any(|c| c.is_alphabetic())).count();
    verdicts.push((
        "non_alpha_word_ratio".into(),
        ratio(non_alpha, wc),
        !gt(non_alpha, wc, t.non_alpha_word_ratio),
    ));

    let mut found = vec![false; t.stop_words.len()];
    for w in &words {
        let bare: String = w.trim_matches(|c: char| !c.is_alphabetic()).to_lowercase();
        for (i, sw) in t.stop_words.iter().enumerate() {
            if *sw == bare {
                found[i] = true;
            }
        }
    }
    let distinct = found.iter().filter(|f| **f).count();
    verdicts.push((
        "min_stop_words".into(),
        distinct as f64,
        distinct >= t.min_stop_words as usize,
    ));

    // sentence-level removals
    let mut removed: Vec<(usize, String)> = Vec::new();
    let mut removed_words = 0usize;
    for (idx, s) in sentences.iter().enumerate() {
        if let Some(rule) = sentence_rule_naive(s, t) {
            removed.push((idx, rule.to_string()));
            removed_words += s.split_whitespace().count();
        }
    }
    verdicts.push((
        "removed_word_fraction".into(),
        ratio(removed_words, wc),
        !gt(removed_words, wc, t.max_removed_word_fraction),
    ));

    let discard = verdicts.iter().any(|(_, _, passed)| !passed);
    OracleReport { verdicts, discard, removed }
}

fn sentence_rule_naive(s: &str, t: &RuleThresholds) -> Option<&'static str> {
    let letters = s.chars().filter(|c| c.is_alphabetic()).count();
    let upper = s.chars().filter(|c| c.is_uppercase()).count();
    if gt(upper, letters, t.sentence_uppercase_ratio) {
        return Some("sentence_uppercase_ratio");
    }
    let has_digit = s.chars().any(|c| c.is_ascii_digit());
    if has_digit
        && s.chars().all(|c| {
            c.is_ascii_digit() || c.is_whitespace() || matches!(c, '.' | ',' | ':' | ';' | '%' | '-')
        })
    {
        return Some("sentence_numerical");
    }
    // counter ^\d+\s+[a-zA-Z]+$ without a regex engine
    if counter_shape(s) {
        return Some("sentence_counter");
    }
    if s.split_whitespace().count() == 1 {
        return Some("sentence_single_word");
    }
    let lower = s.to_lowercase();
    if lower.starts_with("sign-in") || lower.ends_with("read more...") || lower.contains("items in card")
    {
        return Some("sentence_boilerplate");
    }
    None
}

fn counter_shape(s: &str) -> bool {
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    let mut digits = 0;
    while i < chars.len() && chars[i].is_ascii_digit() {
        digits += 1;
        i += 1;
    }
    if digits == 0 {
        return false;
    }
    let mut spaces = 0;
    while i < chars.len() && chars[i].is_whitespace() {
        spaces += 1;
        i += 1;
    }
    if spaces == 0 {
        return false;
    }
    let mut letters = 0;
    while i < chars.len() && chars[i].is_ascii_alphabetic() {
        letters += 1;
        i += 1;
    }
    letters > 0 && i == chars.len()
}

// -- comparison ----------------------------------------------------------

fn sorted_verdicts(report: &FilterReport) -> Vec<(String, u64, bool)> {
    let mut v: Vec<(String, u64, bool)> = report
        .verdicts
        .iter()
        .map(|r| (r.rule_id.clone(), r.measured.to_bits(), r.passed))
        .collect();
    v.sort();
    v
}

fn sorted_oracle(report: &OracleReport) -> Vec<(String, u64, bool)> {
    let mut v: Vec<(String, u64, bool)> = report
        .verdicts
        .iter()
        .map(|(id, measured, passed)| (id.clone(), measured.to_bits(), *passed))
        .collect();
    v.sort();
    v
}

pub fn reports_match(actual: &FilterReport, expected: &OracleReport) -> bool {
    let discard = actual.decision == webcorpus::filters::Decision::Discard;
    sorted_verdicts(actual) == sorted_oracle(expected)
        && discard == expected.discard
        && actual.removed_sentences == expected.removed
}

pub fn diff_reports(actual: &FilterReport, expected: &OracleReport) -> String {
    let a = sorted_verdicts(actual);
    let e = sorted_oracle(expected);
    for (x, y) in a.iter().zip(&e) {
        if x != y {
            return format!(
                "first diverging verdict: impl ({}, {}, {}) vs oracle ({}, {}, {})",
                x.0,
                f64::from_bits(x.1),
                x.2,
                y.0,
                f64::from_bits(y.1),
                y.2
            );
        }
    }
    if a.len() != e.len() {
        return format!("verdict count {} vs {}", a.len(), e.len());
    }
    if actual.removed_sentences != expected.removed {
        return format!(
            "removed sentences differ: impl {:?} vs oracle {:?}",
            actual.removed_sentences, expected.removed
        );
    }
    "decision differs".into()
}

// -- other oracles --------------------------------------------------------

/// Position-scan substring counter (overlapping occurrences).
pub fn brute_force_substring_hits(text: &str, keywords: &[&str]) -> usize {
    let mut hits = 0;
    for kw in keywords {
        if kw.is_empty() {
            continue;
        }
        let mut start = 0;
        while start + kw.len() <= text.len() {
            if text.as_bytes()[start..].starts_with(kw.as_bytes()) {
                hits += 1;
            }
            start += 1;
        }
    }
    hits
}

/// Max relative error between the analytic batch logistic-loss gradient
/// and central finite differences, over all touched weights.
pub fn gradient_max_relative_error(examples: &[LabeledExample], cfg: &TrainConfig) -> f64 {
    use rand::Rng;
    use rand::SeedableRng;

    let feats: Vec<BTreeMap<u32, f64>> = examples
        .iter()
        .map(|e| features(&e.text, &cfg.ngram_orders, cfg.hash_seed, cfg.feature_dim))
        .collect();
    let ys: Vec<f64> = examples
        .iter()
        .map(|e| {
            if e.label == webcorpus::classifier::Label::Positive {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let mut weights: Vec<f64> =
        (0..cfg.feature_dim).map(|_| rng.random_range(-0.5..0.5)).collect();
    let bias = 0.05;

    let sigmoid = |z: f64| 1.0 / (1.0 + (-z).exp());
    let loss = |w: &[f64]| -> f64 {
        feats
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let z = bias + x.iter().map(|(j, v)| w[*j as usize] * v).sum::<f64>();
                logistic_loss(sigmoid(z), *y)
            })
            .sum()
    };

    let mut grad = vec![0.0; cfg.feature_dim];
    for (x, y) in feats.iter().zip(&ys) {
        let z = bias + x.iter().map(|(j, v)| weights[*j as usize] * v).sum::<f64>();
        let s = sigmoid(z);
        for (j, v) in x {
            grad[*j as usize] += (s - y) * v;
        }
    }

    let h = 1e-6;
    let mut max_rel: f64 = 0.0;
    for j in 0..cfg.feature_dim {
        if grad[j] == 0.0 {
            continue;
        }
        let orig = weights[j];
        weights[j] = orig + h;
        let up = loss(&weights);
        weights[j] = orig - h;
        let down = loss(&weights);
        weights[j] = orig;
        let numeric = (up - down) / (2.0 * h);
        let rel = (grad[j] - numeric).abs() / grad[j].abs().max(numeric.abs());
        max_rel = max_rel.max(rel);
    }
    max_rel
}
