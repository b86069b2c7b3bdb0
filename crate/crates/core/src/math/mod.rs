//! Math-page mining.
//!
//! Two paths: the HTML path localizes tagged formulas (LaTeX script tags,
//! MathML, annotations), validates them and inlines each formula exactly
//! once into the page text; the ASCII path takes main-content text, gates
//! it on math keyword hits and hands the survivors to a classifier.

mod latex;

pub use latex::{validate as validate_latex_source, LatexError};

use aho_corasick::AhoCorasick;

use crate::classifier::NgramModel;
use crate::dom::{self, DomNode, DomTree, RenderOptions, RenderOverride};
use crate::error::{Error, Result};
use crate::extraction::{extract_main_content, MainContentConfig};
use crate::record::{Document, DomainTag, RawRecord};
use crate::textutil;

/// The shipped LaTeX keyword inventory (one keyword per line), composed
/// from standard command families.
pub const LATEX_SYMBOLS_DATA: &str = include_str!("../../data/latex_symbols.txt");

/// Keyword sets driving both math paths.
#[derive(Debug)]
pub struct MathKeywordSets {
    /// Raw-byte keywords that mark a page as possibly math-bearing.
    pub html_prefilter: Vec<String>,
    /// LaTeX command keywords for the ASCII gate (>3000 entries).
    pub ascii_latex_symbols: Vec<String>,
    /// Non-LaTeX math keywords for the ASCII gate.
    pub ascii_plain_symbols: Vec<String>,
    /// Minimum total keyword hits for the ASCII gate.
    pub ascii_min_hits: usize,
    prefilter_automaton: AhoCorasick,
    ascii_automaton: AhoCorasick,
}

impl Default for MathKeywordSets {
    fn default() -> Self {
        let html_prefilter: Vec<String> = [
            "<math",
            "<annotation",
            "=\"math",
            "athjax",
            "math-container",
            "class=\"tex\"",
            "tex.cgi",
            "latex.php",
            "katex.min.css",
            "\\frac",
            "codecogs",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        let ascii_latex_symbols: Vec<String> =
            LATEX_SYMBOLS_DATA.lines().filter(|l| !l.is_empty()).map(String::from).collect();
        let ascii_plain_symbols: Vec<String> = [
            "sqrt", "sum", "log", "+", "*", "$", "=", "^", "±", "×", "÷", "≤", "≥", "≠",
            "≈", "∞", "∫", "∑", "∏", "√", "π", "θ", "∂", "Δ",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        MathKeywordSets::new(html_prefilter, ascii_latex_symbols, ascii_plain_symbols, 5)
    }
}

impl MathKeywordSets {
    pub fn new(
        html_prefilter: Vec<String>,
        ascii_latex_symbols: Vec<String>,
        ascii_plain_symbols: Vec<String>,
        ascii_min_hits: usize,
    ) -> Self {
        let prefilter_automaton = AhoCorasick::builder()
            .ascii_case_insensitive(true)
            .build(&html_prefilter)
            .expect("prefilter keywords build");
        let all: Vec<&String> =
            ascii_latex_symbols.iter().chain(ascii_plain_symbols.iter()).collect();
        let ascii_automaton = AhoCorasick::new(all).expect("ascii keywords build");
        MathKeywordSets {
            html_prefilter,
            ascii_latex_symbols,
            ascii_plain_symbols,
            ascii_min_hits,
            prefilter_automaton,
            ascii_automaton,
        }
    }

    /// Total keyword occurrences in `text` (overlapping matches counted).
    pub fn ascii_keyword_hits(&self, text: &str) -> usize {
        self.ascii_automaton.find_overlapping_iter(text).count()
    }
}

/// Raw-byte prefilter: does the payload mention any math keyword?
pub fn html_math_prefilter(record: &RawRecord, sets: &MathKeywordSets) -> bool {
    sets.prefilter_automaton.is_match(&record.payload)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormulaKind {
    Latex,
    MathMl,
    Ascii,
}

/// One localized formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaSpan {
    pub node_id: u32,
    pub kind: FormulaKind,
    pub source_text: String,
    /// `None` until validated. LaTeX spans are checked by the grammar
    /// walker, MathML spans by subtree well-formedness; ASCII spans are
    /// validity-exempt.
    pub valid: Option<bool>,
}

fn class_tokens(node: &DomNode) -> Vec<String> {
    node.attr("class")
        .map(|c| c.split_whitespace().map(str::to_lowercase).collect())
        .unwrap_or_default()
}

fn find_tex_annotation(node: &DomNode) -> Option<&DomNode> {
    let mut found = None;
    node.walk(&mut |n| {
        if found.is_none()
            && n.tag == "annotation"
            && n.attr("encoding")
                .is_some_and(|e| e.trim().eq_ignore_ascii_case("application/x-tex"))
        {
            found = Some(n);
        }
    });
    found
}

/// Locate every formula in the tree, one span per formula: MathML `<math>`
/// elements (preferring an embedded LaTeX annotation over the MathML
/// markup), `<script type="math/...">` carriers and
/// `<span class="math-formula">`. Nested duplicate representations
/// collapse into a single span.
pub fn locate_formulas(tree: &DomTree) -> Vec<FormulaSpan> {
    let mut spans = Vec::new();
    visit(&tree.root, &mut spans);
    spans
}

fn visit(node: &DomNode, spans: &mut Vec<FormulaSpan>) {
    if node.is_text() {
        return;
    }
    match node.tag.as_str() {
        "math" => {
            // a LaTeX annotation inside MathML is the same formula twice:
            // keep the LaTeX, anchored at the <math> element
            if let Some(annotation) = find_tex_annotation(node) {
                spans.push(FormulaSpan {
                    node_id: node.node_id,
                    kind: FormulaKind::Latex,
                    source_text: annotation.raw_text().trim().to_string(),
                    valid: None,
                });
            } else {
                spans.push(FormulaSpan {
                    node_id: node.node_id,
                    kind: FormulaKind::MathMl,
                    source_text: dom::serialize_node(node),
                    valid: Some(!node.subtree_repaired()),
                });
            }
            return; // no descent: children are this formula's internals
        }
        "script" => {
            let script_type = node
                .attr("type")
                .map(|t| t.trim().to_ascii_lowercase())
                .unwrap_or_default();
            if script_type.starts_with("math/tex") || script_type.starts_with("math/latex") {
                spans.push(FormulaSpan {
                    node_id: node.node_id,
                    kind: FormulaKind::Latex,
                    source_text: node.raw_text().trim().to_string(),
                    valid: None,
                });
                return;
            }
            if script_type.starts_with("math/asciimath") {
                spans.push(FormulaSpan {
                    node_id: node.node_id,
                    kind: FormulaKind::Ascii,
                    source_text: node.raw_text().trim().to_string(),
                    valid: Some(true),
                });
                return;
            }
            if script_type.starts_with("math/mml") {
                let source = node.raw_text().trim().to_string();
                let reparsed = dom::parse_html(source.as_bytes(), "");
                let well_formed = !reparsed.root.subtree_repaired();
                spans.push(FormulaSpan {
                    node_id: node.node_id,
                    kind: FormulaKind::MathMl,
                    source_text: source,
                    valid: Some(well_formed),
                });
                return;
            }
        }
        "span" if class_tokens(node).iter().any(|c| c == "math-formula") => {
            spans.push(FormulaSpan {
                node_id: node.node_id,
                kind: FormulaKind::Latex,
                source_text: node.raw_text().trim().to_string(),
                valid: None,
            });
            return;
        }
        "annotation"
            if node
                .attr("encoding")
                .is_some_and(|e| e.trim().eq_ignore_ascii_case("application/x-tex")) =>
        {
            spans.push(FormulaSpan {
                node_id: node.node_id,
                kind: FormulaKind::Latex,
                source_text: node.raw_text().trim().to_string(),
                valid: None,
            });
            return;
        }
        _ => {}
    }
    for child in &node.children {
        visit(child, spans);
    }
}

/// Run the grammar walker over a LaTeX span.
pub fn validate_latex(mut span: FormulaSpan) -> FormulaSpan {
    if span.kind == FormulaKind::Latex {
        span.valid = Some(latex::validate(&span.source_text).is_ok());
    }
    span
}

/// ASCII gate: at least `ascii_min_hits` keyword occurrences.
pub fn ascii_keyword_gate(text: &str, sets: &MathKeywordSets) -> bool {
    sets.ascii_keyword_hits(text) >= sets.ascii_min_hits
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MathPath {
    Html,
    Ascii,
}

/// Add Skip overrides for sibling elements that merely repeat an adjacent
/// formula (rendered previews, alt-text carriers).
fn suppress_adjacent_duplicates(
    node: &DomNode,
    spans: &[FormulaSpan],
    opts: &mut RenderOptions,
) {
    let span_of = |id: u32| spans.iter().find(|s| s.node_id == id);
    let elements: Vec<&DomNode> = node
        .children
        .iter()
        .filter(|c| c.is_element() || !c.text.trim().is_empty())
        .collect();
    for (i, child) in elements.iter().enumerate() {
        if !child.is_element() || span_of(child.node_id).is_some() {
            continue;
        }
        let child_text = textutil::normalize(&child.raw_text(), false);
        if child_text.is_empty() {
            continue;
        }
        let neighbors = [i.checked_sub(1), i.checked_add(1)];
        for n in neighbors.into_iter().flatten() {
            let Some(other) = elements.get(n) else { continue };
            if let Some(span) = span_of(other.node_id) {
                if textutil::normalize(&span.source_text, false) == child_text {
                    opts.overrides.insert(child.node_id, RenderOverride::Skip);
                }
            }
        }
    }
    for child in &node.children {
        suppress_adjacent_duplicates(child, spans, opts);
    }
}

/// Per-record math extraction.
///
/// HTML path: localize formulas, validate every LaTeX span (one invalid
/// formula rejects the page), then render the full page text with each
/// formula inlined verbatim at its position, exactly once. ASCII path:
/// main-content text, keyword gate, then the classifier at threshold 0.5
/// (the model is mandatory there).
pub fn extract_math_document(
    record: &RawRecord,
    path: MathPath,
    model: Option<&NgramModel>,
    sets: &MathKeywordSets,
) -> Result<Option<Document>> {
    match path {
        MathPath::Html => {
            let tree = dom::parse_html(&record.payload, &record.target_url);
            let tree = dom::strip_hidden(&tree);
            let spans: Vec<FormulaSpan> =
                locate_formulas(&tree).into_iter().map(validate_latex).collect();
            if spans.is_empty() {
                return Ok(None);
            }
            if spans.iter().any(|s| s.valid == Some(false)) {
                return Ok(None);
            }
            let mut opts = RenderOptions::default();
            for span in &spans {
                opts.overrides
                    .insert(span.node_id, RenderOverride::Replace(span.source_text.clone()));
            }
            suppress_adjacent_duplicates(&tree.root, &spans, &mut opts);
            let text = dom::render_text(&tree, &opts);
            if text.is_empty() {
                return Ok(None);
            }
            let mut doc = Document::from_record(record, text, DomainTag::Math);
            doc.push_stage("math_html_extract");
            Ok(Some(doc))
        }
        MathPath::Ascii => {
            let model = model.ok_or_else(|| {
                Error::Config("ascii math path requires a classifier model".into())
            })?;
            let tree = dom::parse_html(&record.payload, &record.target_url);
            let tree = dom::strip_hidden(&tree);
            let Some(text) = extract_main_content(&tree, &MainContentConfig::default()) else {
                return Ok(None);
            };
            if !ascii_keyword_gate(&text, sets) {
                return Ok(None);
            }
            if model.score(&text) <= 0.5 {
                return Ok(None);
            }
            let mut doc = Document::from_record(record, text, DomainTag::Math);
            doc.push_stage("math_ascii_extract");
            Ok(Some(doc))
        }
    }
}
