//! Question/answer mining: open-QA keyword grammars and multiple-choice
//! question extraction with canonical re-rendering.

use std::sync::LazyLock;

use aho_corasick::AhoCorasick;
use regex::Regex;

use crate::classifier::NgramModel;
use crate::record::{Document, DomainTag};

/// The published keyword grammars.
#[derive(Debug, Clone)]
pub struct QaKeywordSets {
    /// Bare interrogatives are matched as whole words; colon-suffixed
    /// keywords and the q&a forms as literal substrings.
    pub question_keywords: Vec<String>,
    pub answer_keywords: Vec<String>,
    /// Keywords that confirm a choice list's answer line.
    pub mcq_answer_keywords: Vec<String>,
}

impl Default for QaKeywordSets {
    fn default() -> Self {
        QaKeywordSets {
            question_keywords: [
                "what", "where", "why", "when", "who", "whose", "how", "q&a", "q & a", "q:",
                "que:", "question:", "quiz:", "exam:", "examination:", "probe:", "request:",
                "challenge:", "test:", "query:", "survey:",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            answer_keywords: [
                "q&a", "q & a", "a:", "ans:", "answer:", "solution:", "reply:", "response:",
                "result:", "outcome:", "explanation:", "conclusion:", "finding:", "assertion:",
                "statement:", "clarification:",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
            mcq_answer_keywords: [
                "answer:", "solution:", "reply:", "response:", "ans:", "a:", "r:",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        }
    }
}

static INTERROGATIVE_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)\b(?:what|where|why|when|who|whose|how)\b").expect("static regex")
});

static QUESTION_SUBSTRINGS: LazyLock<AhoCorasick> = LazyLock::new(|| {
    AhoCorasick::builder()
        .ascii_case_insensitive(true)
        .build([
            "q&a", "q & a", "q:", "que:", "question:", "quiz:", "exam:", "examination:",
            "probe:", "request:", "challenge:", "test:", "query:", "survey:",
        ])
        .expect("static automaton")
});

static ANSWER_SUBSTRINGS: LazyLock<AhoCorasick> = LazyLock::new(|| {
    AhoCorasick::builder()
        .ascii_case_insensitive(true)
        .build([
            "q&a", "q & a", "a:", "ans:", "answer:", "solution:", "reply:", "response:",
            "result:", "outcome:", "explanation:", "conclusion:", "finding:", "assertion:",
            "statement:", "clarification:",
        ])
        .expect("static automaton")
});

/// True iff the text contains at least one question keyword and one answer
/// keyword.
pub fn openqa_rule_filter(text: &str) -> bool {
    let has_question = INTERROGATIVE_RE.is_match(text) || QUESTION_SUBSTRINGS.is_match(text);
    if !has_question {
        return false;
    }
    ANSWER_SUBSTRINGS.is_match(text)
}

/// Open-QA extraction: the rule filter plus an optional classifier at
/// threshold 0.5. Kept documents pass through with their full interleaved
/// context unchanged.
pub fn openqa_extract(doc: &Document, model: Option<&NgramModel>) -> Option<Document> {
    if !openqa_rule_filter(&doc.text) {
        return None;
    }
    if let Some(m) = model {
        if m.score(&doc.text) <= 0.5 {
            return None;
        }
    }
    let mut out = doc.clone();
    out.domain_tag = DomainTag::OpenQa;
    out.push_stage("open_qa");
    Some(out)
}

/// Serial-number alphabet of a choice list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SerialFormat {
    /// a, b, c, ...
    Alpha,
    /// 1, 2, 3, ...
    Numeric,
    /// i, ii, iii, ...
    Roman,
}

pub const DELIMITERS: &[char] = &['.', '-', ')', '>', ']'];

/// One parsed option line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceEntry {
    pub serial: String,
    pub delimiter: char,
    pub body: String,
}

/// A run of consecutive option lines sharing one serial format, starting
/// at the format's first element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceList {
    pub start_line: usize,
    pub entries: Vec<ChoiceEntry>,
    pub serial_format: SerialFormat,
}

fn roman_value(token: &str) -> Option<u32> {
    if token.is_empty() || token.len() > 8 {
        return None;
    }
    let digit = |c: char| match c.to_ascii_lowercase() {
        'i' => Some(1u32),
        'v' => Some(5),
        'x' => Some(10),
        'l' => Some(50),
        'c' => Some(100),
        'd' => Some(500),
        'm' => Some(1000),
        _ => None,
    };
    let values: Vec<u32> = token.chars().map(digit).collect::<Option<_>>()?;
    let mut total = 0i64;
    for (i, &v) in values.iter().enumerate() {
        if values[i + 1..].iter().any(|&next| next > v) {
            total -= v as i64;
        } else {
            total += v as i64;
        }
    }
    (total > 0).then_some(total as u32)
}

/// All `(format, ordinal)` readings of a serial token.
fn serial_readings(token: &str) -> Vec<(SerialFormat, u32)> {
    let mut out = Vec::new();
    if token.len() == 1 {
        let c = token.chars().next().expect("len 1");
        if c.is_ascii_alphabetic() {
            out.push((SerialFormat::Alpha, (c.to_ascii_lowercase() as u32) - ('a' as u32) + 1));
        }
    }
    if !token.is_empty() && token.len() <= 3 && token.chars().all(|c| c.is_ascii_digit()) {
        if let Ok(v) = token.parse::<u32>() {
            if v >= 1 {
                out.push((SerialFormat::Numeric, v));
            }
        }
    }
    if let Some(v) = roman_value(token) {
        out.push((SerialFormat::Roman, v));
    }
    out
}

/// A parsed option line together with every serial reading it admits.
type ParsedChoiceLine = (ChoiceEntry, Vec<(SerialFormat, u32)>);

/// Parse `<serial><delimiter><body>` from one line. The space delimiter is
/// accepted only when the serial is followed by exactly one space and the
/// body starts with a non-digit (so prose like "1 2 3" is not consumed).
fn parse_choice_line(line: &str) -> Option<ParsedChoiceLine> {
    let trimmed = line.trim_start();
    let token_end = trimmed
        .char_indices()
        .find(|(_, c)| !c.is_ascii_alphanumeric())
        .map(|(i, _)| i)?;
    if token_end == 0 {
        return None;
    }
    let token = &trimmed[..token_end];
    let readings = serial_readings(token);
    if readings.is_empty() {
        return None;
    }
    let rest = &trimmed[token_end..];
    let mut chars = rest.chars();
    let delim = chars.next()?;
    if DELIMITERS.contains(&delim) {
        let body = chars.as_str().trim_start();
        if body.is_empty() {
            return None;
        }
        return Some((
            ChoiceEntry { serial: token.to_string(), delimiter: delim, body: body.to_string() },
            readings,
        ));
    }
    if delim == ' ' {
        let body = chars.as_str();
        if body.is_empty()
            || body.starts_with(' ')
            || body.starts_with(|c: char| c.is_ascii_digit())
        {
            return None;
        }
        return Some((
            ChoiceEntry { serial: token.to_string(), delimiter: ' ', body: body.to_string() },
            readings,
        ));
    }
    None
}

/// Scan the text for choice lists: runs of at least two consecutive lines
/// whose serials advance one format's sequence from its first element
/// (a/1/i). Mixed-format runs split; the alpha-vs-roman ambiguity of a
/// continuation like "i" after "h" is resolved by the successor line.
pub fn detect_choice_lists(text: &str) -> Vec<ChoiceList> {
    let lines: Vec<&str> = text.lines().collect();
    let parsed: Vec<Option<ParsedChoiceLine>> =
        lines.iter().map(|l| parse_choice_line(l)).collect();

    let mut lists = Vec::new();
    let mut i = 0usize;
    while i < lines.len() {
        match try_run(&parsed, i) {
            Some((format, len)) if len >= 2 => {
                let entries = parsed[i..i + len]
                    .iter()
                    .map(|p| p.as_ref().expect("run entries parsed").0.clone())
                    .collect();
                lists.push(ChoiceList { start_line: i, entries, serial_format: format });
                i += len;
            }
            _ => i += 1,
        }
    }
    lists
}

/// Longest run starting at `start` over all formats readable there with
/// ordinal 1.
fn try_run(parsed: &[Option<ParsedChoiceLine>], start: usize) -> Option<(SerialFormat, usize)> {
    let (_, readings) = parsed[start].as_ref()?;
    let mut best: Option<(SerialFormat, usize)> = None;
    for &(format, ordinal) in readings {
        if ordinal != 1 {
            continue; // lists start at a / 1 / i
        }
        let mut len = 1usize;
        loop {
            let next_idx = start + len;
            let expected = 1 + len as u32;
            let Some(Some((_, next_readings))) = parsed.get(next_idx) else { break };
            let continues = next_readings.iter().any(|&(f, o)| f == format && o == expected);
            if !continues {
                break;
            }
            // ambiguity: the next line could also *start* a list in another
            // format (roman "i" during an alpha run a..h); the successor
            // line decides
            let starts_other = next_readings.iter().any(|&(f, o)| f != format && o == 1);
            if starts_other {
                let after = parsed.get(next_idx + 1).and_then(|p| p.as_ref());
                let continues_ours = after
                    .is_some_and(|(_, r)| r.iter().any(|&(f, o)| f == format && o == expected + 1));
                let continues_other =
                    after.is_some_and(|(_, r)| r.iter().any(|&(f, o)| f != format && o == 2));
                if continues_other && !continues_ours {
                    break; // yield: the next line opens a new list
                }
            }
            len += 1;
        }
        if best.is_none_or(|(_, blen)| len > blen) {
            best = Some((format, len));
        }
    }
    best
}

/// One extracted multiple-choice item.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McqItem {
    pub question: String,
    /// Choice bodies in order.
    pub choices: Vec<String>,
    /// Raw answer text with the keyword prefix stripped and trimmed.
    pub answer: String,
    /// Verbatim remainder after `explanation:` (leading space preserved).
    pub explanation: Option<String>,
    pub source_doc_id: String,
    pub serial_format: SerialFormat,
}

/// Strip a leading MCQ answer keyword (longest match first,
/// case-insensitive). Returns the remainder.
fn strip_answer_keyword<'a>(line: &'a str, sets: &QaKeywordSets) -> Option<&'a str> {
    let mut keywords: Vec<&String> = sets.mcq_answer_keywords.iter().collect();
    keywords.sort_by_key(|k| std::cmp::Reverse(k.len()));
    let lower = line.to_lowercase();
    for kw in keywords {
        if lower.starts_with(kw.as_str()) {
            return Some(&line[kw.len()..]);
        }
    }
    None
}

fn strip_explanation_keyword(line: &str) -> Option<&str> {
    const KW: &str = "explanation:";
    line.to_lowercase().starts_with(KW).then(|| &line[KW.len()..])
}

/// Resolve an answer token against the choice list: `Some(Ok(idx))` for a
/// serial-like token that references choice `idx`, `Some(Err(()))` for a
/// dangling serial-like token, `None` for free text.
fn answer_choice_index(
    answer: &str,
    format: SerialFormat,
    n_choices: usize,
) -> Option<std::result::Result<usize, ()>> {
    let token = answer.trim().trim_end_matches(['.', ')']);
    if token.is_empty() || token.contains(char::is_whitespace) {
        return None;
    }
    let readings = serial_readings(token);
    if readings.is_empty() {
        return None;
    }
    // prefer the list's own format, then alpha letters, then anything
    let pick = readings
        .iter()
        .find(|(f, _)| *f == format)
        .or_else(|| readings.iter().find(|(f, _)| *f == SerialFormat::Alpha))
        .or_else(|| readings.first());
    let (_, ordinal) = pick.expect("nonempty readings");
    let idx = *ordinal as usize;
    if idx >= 1 && idx <= n_choices {
        Some(Ok(idx - 1))
    } else {
        Some(Err(()))
    }
}

/// Does the page qualify for MCQ mining at all: at least one choice-list
/// candidate and at least one MCQ answer keyword anywhere.
pub fn mcq_page_filter(text: &str, sets: &QaKeywordSets) -> bool {
    if detect_choice_lists(text).is_empty() {
        return false;
    }
    let lower = text.to_lowercase();
    sets.mcq_answer_keywords.iter().any(|k| lower.contains(k.as_str()))
}

/// Extract the items of one page. A candidate list becomes an item only
/// when an answer line confirms it: either the line after the list starts
/// with an answer keyword, or (answer-before-stem layout) the line above
/// the stem does. Items missing stem, choices or answer are dropped, as
/// are single-serial answers that reference no existing choice.
pub fn extract_mcq(text: &str, doc_id: &str, sets: &QaKeywordSets) -> Vec<McqItem> {
    let lines: Vec<&str> = text.lines().collect();
    let mut items = Vec::new();
    for list in detect_choice_lists(text) {
        if list.entries.len() < 2 {
            continue;
        }
        let after_idx = list.start_line + list.entries.len();
        let Some(stem_idx) = list.start_line.checked_sub(1) else { continue };
        let stem = lines[stem_idx].trim_end();
        if stem.is_empty() {
            continue;
        }

        let after_line = lines.get(after_idx).copied().unwrap_or("");
        let (answer_raw, explanation_idx) = match strip_answer_keyword(after_line, sets) {
            Some(rest) => (Some(rest), after_idx + 1),
            None => {
                // answer-before-stem fallback: one line above the stem
                match stem_idx
                    .checked_sub(1)
                    .and_then(|i| lines.get(i))
                    .and_then(|l| strip_answer_keyword(l, sets))
                {
                    Some(rest) => (Some(rest), after_idx),
                    None => (None, after_idx),
                }
            }
        };
        let Some(answer_raw) = answer_raw else { continue };
        let answer = answer_raw.trim().to_string();
        if answer.is_empty() {
            continue;
        }

        if matches!(
            answer_choice_index(&answer, list.serial_format, list.entries.len()),
            Some(Err(()))
        ) {
            continue; // dangling reference like "Answer: E" on a 4-choice list
        }

        let explanation = lines
            .get(explanation_idx)
            .and_then(|l| strip_explanation_keyword(l))
            .map(str::to_string);

        items.push(McqItem {
            question: stem.to_string(),
            choices: list.entries.iter().map(|e| e.body.clone()).collect(),
            answer,
            explanation,
            source_doc_id: doc_id.to_string(),
            serial_format: list.serial_format,
        });
    }
    items
}

/// Render an item in the canonical layout:
///
/// ```text
/// <question, leading serial stripped>
/// A. <choice>
/// B. <choice>
/// Answer:<letter or free text>
/// Explanation:<text, when present>
/// ```
///
/// Serial-like answers are re-lettered against the canonical A, B, C...
/// serials (original serial 2 becomes B).
pub fn format_mcq(item: &McqItem) -> crate::error::Result<String> {
    if item.choices.len() < 2 || item.answer.is_empty() || item.question.is_empty() {
        return Err(crate::error::Error::InvalidInput(
            "mcq item missing stem, choices or answer".into(),
        ));
    }
    if item.choices.len() > 26 {
        return Err(crate::error::Error::InvalidInput("more than 26 choices".into()));
    }
    let mut out = String::new();
    // strip any leading serial+delimiter from the question
    let question = match parse_choice_line(item.question.trim_start()) {
        Some((entry, _)) if entry.delimiter != ' ' => entry.body,
        _ => item.question.clone(),
    };
    out.push_str(&question);
    out.push('\n');
    for (i, body) in item.choices.iter().enumerate() {
        out.push(char::from(b'A' + i as u8));
        out.push_str(". ");
        out.push_str(body);
        out.push('\n');
    }
    out.push_str("Answer:");
    match answer_choice_index(&item.answer, item.serial_format, item.choices.len()) {
        Some(Ok(idx)) => out.push(char::from(b'A' + idx as u8)),
        Some(Err(())) => {
            return Err(crate::error::Error::InvalidInput(format!(
                "answer {:?} references no choice",
                item.answer
            )))
        }
        None => out.push_str(&item.answer),
    }
    if let Some(explanation) = &item.explanation {
        out.push('\n');
        out.push_str("Explanation:");
        out.push_str(explanation);
    }
    Ok(out)
}

/// Build the MCQ document for one open-QA page: every extracted item in
/// canonical form, one blank line between items. `None` when the page
/// fails the MCQ filter or yields no items.
pub fn mcq_document(doc: &Document, sets: &QaKeywordSets) -> Option<Document> {
    if !mcq_page_filter(&doc.text, sets) {
        return None;
    }
    let items = extract_mcq(&doc.text, &doc.doc_id, sets);
    let blocks: Vec<String> = items.iter().filter_map(|i| format_mcq(i).ok()).collect();
    if blocks.is_empty() {
        return None;
    }
    let mut out = doc.clone();
    out.text = blocks.join("\n\n");
    out.domain_tag = DomainTag::Mcq;
    out.push_stage("mcq_extract");
    Some(out)
}
