//! Code-page mining: prefilter, snippet root detection, re-tagging into
//! `<code-encode>` blocks, line-number removal, block merging and the final
//! interleaved text+code document.

use std::sync::LazyLock;

use aho_corasick::AhoCorasick;
use regex::Regex;

use crate::classifier::NgramModel;
use crate::dom::{self, DomNode, DomTree, RenderOptions, RenderOverride};
use crate::record::{Document, DomainTag, RawRecord};

/// Marker lines wrapping each code block in the output text.
pub const CODE_OPEN_MARKER: &str = "<code-encode>";
pub const CODE_CLOSE_MARKER: &str = "</code-encode>";

/// Multi-language keyword list for the `pl_keywords` regex class (60
/// words). Matched on word boundaries.
pub const PL_KEYWORDS: [&str; 60] = [
    "def", "return", "import", "class", "public", "void", "fn", "let", "const", "lambda",
    "elif", "if", "else", "for", "while", "switch", "case", "break", "continue", "static",
    "final", "try", "catch", "except", "finally", "throw", "throws", "new", "delete", "this",
    "self", "super", "function", "var", "typedef", "struct", "enum", "union", "template",
    "namespace", "using", "package", "interface", "implements", "extends", "abstract",
    "synchronized", "volatile", "extern", "sizeof", "nullptr", "println", "printf", "cout",
    "malloc", "async", "await", "yield", "require", "module",
];

/// Which of the four pattern classes matched a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchedClass {
    PlKeywords,
    CodeIndicators,
    FunctionCalls,
    VariableAssignments,
}

/// Configuration for the code pipeline: prefilter keywords, URL blocklist
/// and the four compiled pattern classes.
#[derive(Debug)]
pub struct CodeDocConfig {
    pub prefilter_keywords: Vec<String>,
    pub url_blocklist_substrings: Vec<String>,
    pl_keywords: Regex,
    code_indicators: Regex,
    function_calls: Regex,
    variable_assignments: Regex,
    /// Minimum run of leading integers before they count as line numbers.
    pub min_line_number_run: usize,
}

impl Default for CodeDocConfig {
    fn default() -> Self {
        let kw = PL_KEYWORDS.join("|");
        CodeDocConfig {
            prefilter_keywords: vec!["<code".into(), "<pre".into()],
            url_blocklist_substrings: vec!["blame.php".into(), "diff.php".into()],
            pl_keywords: Regex::new(&format!(r"\b(?:{kw})\b")).expect("static regex"),
            // statement-terminating semicolons, brace-only lines, include /
            // php / shebang markers
            code_indicators: Regex::new(r"(?m)(?:;\s*$)|(?:^\s*[{}]\s*$)|(?:#include\s*[<\x22])|(?:<\?php)|(?:^#!/)")
                .expect("static regex"),
            // identifier immediately followed by a parenthesized argument list
            function_calls: Regex::new(r"\b[A-Za-z_][A-Za-z0-9_]*\([^()\n]*\)").expect("static regex"),
            // line-anchored identifier = expression (not ==)
            variable_assignments: Regex::new(r"(?m)^\s*[A-Za-z_][A-Za-z0-9_.\[\]]*\s*=\s*[^=\s].*$")
                .expect("static regex"),
            min_line_number_run: 3,
        }
    }
}

impl CodeDocConfig {
    /// First matching pattern class for a candidate text, in documented
    /// precedence order.
    pub fn classify(&self, text: &str) -> Option<MatchedClass> {
        if self.pl_keywords.is_match(text) {
            Some(MatchedClass::PlKeywords)
        } else if self.code_indicators.is_match(text) {
            Some(MatchedClass::CodeIndicators)
        } else if self.function_calls.is_match(text) {
            Some(MatchedClass::FunctionCalls)
        } else if self.variable_assignments.is_match(text) {
            Some(MatchedClass::VariableAssignments)
        } else {
            None
        }
    }
}

static PREFILTER: LazyLock<AhoCorasick> = LazyLock::new(|| {
    AhoCorasick::builder()
        .ascii_case_insensitive(true)
        .build(["<code", "<pre"])
        .expect("static automaton")
});

/// Fast raw-byte gate: the payload mentions `<code` or `<pre` and the URL
/// is not a diff/blame view.
pub fn code_prefilter(record: &RawRecord, cfg: &CodeDocConfig) -> bool {
    let url = record.target_url.to_ascii_lowercase();
    if cfg.url_blocklist_substrings.iter().any(|b| url.contains(b.as_str())) {
        return false;
    }
    PREFILTER.is_match(&record.payload)
}

/// A detected code snippet root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeCandidate {
    pub root_node_id: u32,
    pub text: String,
    pub matched_class: MatchedClass,
}

/// Raw text of a candidate root, preserving line structure: `<pre>` text
/// verbatim, `<tbody>` rows and `<br>` as line breaks.
fn candidate_text(node: &DomNode) -> String {
    fn walk(node: &DomNode, out: &mut String) {
        if node.is_text() {
            out.push_str(&node.text);
            return;
        }
        match node.tag.as_str() {
            "script" | "style" => {}
            "br" => out.push('\n'),
            "tr" | "li" | "p" | "div" | "code" => {
                if !out.is_empty() && !out.ends_with('\n') {
                    out.push('\n');
                }
                for c in &node.children {
                    walk(c, out);
                }
                if !out.is_empty() && !out.ends_with('\n') {
                    out.push('\n');
                }
            }
            _ => {
                for c in &node.children {
                    walk(c, out);
                }
            }
        }
    }
    let mut out = String::new();
    walk(node, &mut out);
    // outer newlines are framing, not content
    out.trim_matches('\n').to_string()
}

/// Find snippet roots: every `<code>` element, lifted to its parent when
/// the parent is `<pre>` or `<tbody>`, accepted when its text matches at
/// least one pattern class. Duplicate roots collapse to one candidate.
pub fn detect_code_roots(tree: &DomTree, cfg: &CodeDocConfig) -> Vec<CodeCandidate> {
    let mut candidates: Vec<CodeCandidate> = Vec::new();
    let mut seen_roots = std::collections::HashSet::new();

    fn visit(
        node: &DomNode,
        cfg: &CodeDocConfig,
        seen: &mut std::collections::HashSet<u32>,
        out: &mut Vec<CodeCandidate>,
    ) {
        for child in &node.children {
            if child.tag == "code" {
                let root = if matches!(node.tag.as_str(), "pre" | "tbody") { node } else { child };
                if seen.insert(root.node_id) {
                    let text = candidate_text(root);
                    if let Some(class) = cfg.classify(&text) {
                        out.push(CodeCandidate {
                            root_node_id: root.node_id,
                            text,
                            matched_class: class,
                        });
                    }
                }
            }
            visit(child, cfg, seen, out);
        }
    }
    visit(&tree.root, cfg, &mut seen_roots, &mut candidates);
    candidates
}

/// Strip leading line numbers from a block when its lines carry a strictly
/// increasing integer run (step 1) of at least `min_run` numbers, either on
/// every line or alternating with code lines (a rendered line-number
/// gutter). Tokens that are not pure integers at line start are never
/// touched.
pub fn strip_line_numbers(text: &str, min_run: usize) -> String {
    let lines: Vec<&str> = text.split('\n').collect();

    fn leading_int(line: &str) -> Option<(u64, usize)> {
        let trimmed = line.trim_start();
        let token = trimmed.split_whitespace().next()?;
        if token.is_empty() || !token.chars().all(|c| c.is_ascii_digit()) || token.len() > 12 {
            return None;
        }
        Some((token.parse().ok()?, line.len() - trimmed.len() + token.len()))
    }

    fn int_only(line: &str) -> Option<u64> {
        let t = line.trim();
        (!t.is_empty() && t.chars().all(|c| c.is_ascii_digit()) && t.len() <= 12)
            .then(|| t.parse().ok())
            .flatten()
    }

    fn consecutive(nums: &[u64]) -> bool {
        nums.windows(2).all(|w| w[1] == w[0] + 1)
    }

    // every-line form: all nonblank lines start with n, n+1, ...
    let nonblank: Vec<usize> =
        (0..lines.len()).filter(|&i| !lines[i].trim().is_empty()).collect();
    let leading: Vec<Option<(u64, usize)>> =
        nonblank.iter().map(|&i| leading_int(lines[i])).collect();
    if nonblank.len() >= min_run && leading.iter().all(Option::is_some) {
        let nums: Vec<u64> = leading.iter().map(|x| x.expect("checked").0).collect();
        if consecutive(&nums) {
            let mut out: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
            for (&slot, entry) in nonblank.iter().zip(&leading) {
                let (_, cut) = entry.expect("checked");
                let rest = &lines[slot][cut..];
                out[slot] = rest.strip_prefix(' ').unwrap_or(rest).to_string();
            }
            return out.join("\n");
        }
    }

    // alternating form: number-only lines at every second position
    for offset in 0..2usize {
        let number_slots: Vec<usize> =
            (offset..lines.len()).step_by(2).collect();
        if number_slots.len() < min_run {
            continue;
        }
        let nums: Vec<Option<u64>> = number_slots.iter().map(|&i| int_only(lines[i])).collect();
        if !nums.iter().all(Option::is_some) {
            continue;
        }
        let nums: Vec<u64> = nums.into_iter().map(|n| n.expect("checked")).collect();
        if !consecutive(&nums) {
            continue;
        }
        // the in-between lines must not be bare numbers themselves
        let code_slots_numeric = (0..lines.len())
            .filter(|i| !number_slots.contains(i))
            .any(|i| int_only(lines[i]).is_some());
        if code_slots_numeric {
            continue;
        }
        let kept: Vec<&str> = (0..lines.len())
            .filter(|i| !number_slots.contains(i))
            .map(|i| lines[i])
            .collect();
        return kept.join("\n");
    }

    text.to_string()
}

/// Re-tag accepted roots as `code-encode`, clean their text (line numbers)
/// and merge adjacent blocks separated only by whitespace. Idempotent.
pub fn retag_and_clean(tree: &DomTree, candidates: &[CodeCandidate], cfg: &CodeDocConfig) -> DomTree {
    let mut tree = tree.clone();
    for c in candidates {
        retag_node(&mut tree.root, c, cfg);
    }
    merge_adjacent(&mut tree.root);
    tree
}

fn retag_node(node: &mut DomNode, candidate: &CodeCandidate, cfg: &CodeDocConfig) {
    if node.node_id == candidate.root_node_id {
        node.tag = "code-encode".to_string();
        let cleaned = strip_line_numbers(&candidate.text, cfg.min_line_number_run);
        node.children = vec![DomNode {
            // reuse the root id space: text child gets a derived id that
            // cannot collide with parser-assigned ones (they are < 2^31)
            node_id: candidate.root_node_id | (1 << 31),
            tag: String::new(),
            attributes: Vec::new(),
            children: Vec::new(),
            text: cleaned,
            repaired: false,
        }];
        return;
    }
    for child in &mut node.children {
        retag_node(child, candidate, cfg);
    }
}

fn merge_adjacent(node: &mut DomNode) {
    let mut i = 0;
    while i < node.children.len() {
        if node.children[i].tag == "code-encode" {
            // find the next non-whitespace sibling
            let mut j = i + 1;
            while j < node.children.len()
                && node.children[j].is_text()
                && node.children[j].text.trim().is_empty()
            {
                j += 1;
            }
            if j < node.children.len() && node.children[j].tag == "code-encode" {
                let tail = node.children[j].raw_text();
                let head = &mut node.children[i];
                if let Some(text_child) = head.children.first_mut() {
                    text_child.text.push('\n');
                    text_child.text.push_str(&tail);
                }
                node.children.drain(i + 1..=j);
                continue; // the merged block may merge again
            }
        }
        merge_adjacent(&mut node.children[i]);
        i += 1;
    }
}

/// Optional language metadata emitted after each opening marker.
pub struct LangTagger<'a> {
    pub model: &'a NgramModel,
    pub lang_name: String,
}

/// Full per-record code pipeline: parse, strip hidden elements, detect and
/// clean snippet roots, then render the page with `<code-encode>` marker
/// lines around each block. `None` when the page carries no accepted
/// snippet.
pub fn extract_code_document(
    record: &RawRecord,
    cfg: &CodeDocConfig,
    lang: Option<&LangTagger<'_>>,
) -> Option<Document> {
    let tree = dom::parse_html(&record.payload, &record.target_url);
    let tree = dom::strip_hidden(&tree);
    let candidates = detect_code_roots(&tree, cfg);
    if candidates.is_empty() {
        return None;
    }
    let tree = retag_and_clean(&tree, &candidates, cfg);

    let mut opts = RenderOptions::default();
    let mut mark = |node: &DomNode| {
        if node.tag == "code-encode" {
            let open = match lang {
                Some(tagger) => {
                    let prob = tagger.model.score(&node.raw_text());
                    format!("{CODE_OPEN_MARKER}\n<metadata lang={} prob={prob:.2} />", tagger.lang_name)
                }
                None => CODE_OPEN_MARKER.to_string(),
            };
            opts.overrides.insert(
                node.node_id,
                RenderOverride::MarkedBlock { open, close: CODE_CLOSE_MARKER.to_string() },
            );
        }
    };
    tree.root.walk(&mut mark);

    let text = dom::render_text(&tree, &opts);
    if text.is_empty() {
        return None;
    }
    let mut doc = Document::from_record(record, text, DomainTag::Code);
    doc.push_stage("code_extract");
    Some(doc)
}
