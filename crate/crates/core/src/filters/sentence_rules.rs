//! Sentence-level removal rules.
//!
//! Offending sentences are removed from the document; if the removals
//! delete more than `max_removed_word_fraction` of the words, the whole
//! document is discarded (the caller reads that from the fraction verdict).

use std::sync::LazyLock;

use regex::Regex;

use super::{split_sentences, RuleThresholds, RuleVerdict};
use crate::record::Document;
use crate::textutil;

static COUNTER_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\d+\s+[a-zA-Z]+$").expect("static regex"));

/// Characters allowed in a "numerical only" sentence besides digits.
const NUMERIC_PUNCT: &[char] = &['.', ',', ':', ';', '%', '-'];

fn removal_rule(sentence: &str, thresholds: &RuleThresholds) -> Option<&'static str> {
    // uppercase-letter fraction
    let letters = sentence.chars().filter(|c| c.is_alphabetic()).count() as u64;
    let uppercase = sentence.chars().filter(|c| c.is_uppercase()).count() as u64;
    if textutil::ratio_gt(uppercase, letters, thresholds.sentence_uppercase_ratio) {
        return Some("sentence_uppercase_ratio");
    }

    // only numerical characters (requires at least one digit)
    let has_digit = sentence.chars().any(|c| c.is_ascii_digit());
    let numeric_only = has_digit
        && sentence
            .chars()
            .all(|c| c.is_ascii_digit() || c.is_whitespace() || NUMERIC_PUNCT.contains(&c));
    if numeric_only {
        return Some("sentence_numerical");
    }

    // counter like "3 likes"
    if COUNTER_RE.is_match(sentence) {
        return Some("sentence_counter");
    }

    // exactly one word
    if textutil::token_count(sentence) == 1 {
        return Some("sentence_single_word");
    }

    // boilerplate patterns: anchored sign-in / read more...$, plus the
    // "items in card" substring; all case-insensitive
    let lower = sentence.to_lowercase();
    if lower.starts_with("sign-in")
        || lower.ends_with("read more...")
        || lower.contains("items in card")
    {
        return Some("sentence_boilerplate");
    }

    None
}

/// Result of sentence filtering one document.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceFilterOutcome {
    /// The document with offending sentences removed (text rebuilt;
    /// surviving sentences keep their order, paragraphs whose sentences all
    /// vanished are dropped).
    pub document: Document,
    /// `(original_sentence_index, rule_id)` per removal.
    pub removed: Vec<(usize, String)>,
    /// Verdict on the removed-word fraction; failing it means the whole
    /// document should be discarded.
    pub fraction_verdict: RuleVerdict,
}

pub fn sentence_filter(doc: &Document, thresholds: &RuleThresholds) -> SentenceFilterOutcome {
    let total_words = doc.word_count() as u64;
    let mut removed = Vec::new();
    let mut removed_words = 0u64;
    let mut new_paragraphs: Vec<String> = Vec::new();
    let mut sentence_index = 0usize;

    for paragraph in doc.paragraphs() {
        let mut sentences = Vec::new();
        split_sentences(paragraph, &mut sentences);
        if sentences.is_empty() {
            // no sentence content (blank line): preserve verbatim
            new_paragraphs.push(paragraph.to_string());
            continue;
        }
        let mut kept: Vec<String> = Vec::with_capacity(sentences.len());
        for sentence in sentences {
            match removal_rule(&sentence, thresholds) {
                Some(rule_id) => {
                    removed.push((sentence_index, rule_id.to_string()));
                    removed_words += textutil::token_count(&sentence) as u64;
                }
                None => kept.push(sentence),
            }
            sentence_index += 1;
        }
        if !kept.is_empty() {
            new_paragraphs.push(kept.join(" "));
        }
    }

    let fraction_verdict = RuleVerdict::ratio_capped(
        "removed_word_fraction",
        removed_words,
        total_words,
        thresholds.max_removed_word_fraction,
    );

    let mut document = doc.clone();
    if !removed.is_empty() {
        document.text = new_paragraphs.join("\n");
    }

    SentenceFilterOutcome { document, removed, fraction_verdict }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::DomainTag;

    fn doc(text: &str) -> Document {
        Document::new("d#1", "u", "s", text, DomainTag::Web)
    }

    fn rules_of(outcome: &SentenceFilterOutcome) -> Vec<&str> {
        outcome.removed.iter().map(|(_, r)| r.as_str()).collect()
    }

    #[test]
    fn counter_sentence_removed() {
        let t = RuleThresholds::default();
        let out = sentence_filter(&doc("A good long sentence stays here. 3 likes"), &t);
        assert_eq!(rules_of(&out), vec!["sentence_counter"]);
        assert_eq!(out.document.text, "A good long sentence stays here.");
    }

    #[test]
    fn all_caps_sentence_removed() {
        let t = RuleThresholds::default();
        let out = sentence_filter(&doc("HELLO WORLD NOW. lower case text continues on."), &t);
        assert_eq!(rules_of(&out), vec!["sentence_uppercase_ratio"]);
    }

    #[test]
    fn numerical_sentence_removed() {
        let t = RuleThresholds::default();
        let out = sentence_filter(&doc("Results follow below. 12,345.67%"), &t);
        assert_eq!(rules_of(&out), vec!["sentence_numerical"]);
        // pure punctuation is not "numerical"
        let out = sentence_filter(&doc("What follows now. - and that is all there is."), &t);
        assert!(rules_of(&out).is_empty());
    }

    #[test]
    fn single_word_and_boilerplate_removed() {
        let t = RuleThresholds::default();
        let text = "Welcome. Sign-in to your account here. Please read more... \
                    You have two items in card right now. All the rest stays.";
        let out = sentence_filter(&doc(text), &t);
        let rules = rules_of(&out);
        assert_eq!(
            rules,
            vec![
                "sentence_single_word",
                "sentence_boilerplate",
                "sentence_boilerplate",
                "sentence_boilerplate"
            ]
        );
    }

    #[test]
    fn heavy_removal_fails_fraction() {
        let t = RuleThresholds::default();
        // 100 words total; a removed 6-word all-caps sentence -> 0.06 > 0.05
        let filler: Vec<String> = (0..94).map(|i| format!("word{i}")).collect();
        let text = format!("{} . SIX CAPS WORDS IN ROW HERE.", filler.join(" "));
        let d = doc(&text);
        assert_eq!(d.word_count(), 101); // 94 words + lone '.' + 6 caps words
        let out = sentence_filter(&d, &t);
        // the lone "." merges into the first sentence; removed = 6 caps words
        assert!(!out.fraction_verdict.passed, "{:?}", out.fraction_verdict);
    }

    #[test]
    fn surviving_sentences_keep_order() {
        let t = RuleThresholds::default();
        let text = "First stays put. 3 likes\nSecond stays put. THIRD SHOUTING GONE. Fourth stays.";
        let out = sentence_filter(&doc(text), &t);
        assert_eq!(out.document.text, "First stays put.\nSecond stays put. Fourth stays.");
        assert_eq!(out.removed.len(), 2);
        assert_eq!(out.removed[0].0, 1);
        assert_eq!(out.removed[1].0, 3);
    }
}
