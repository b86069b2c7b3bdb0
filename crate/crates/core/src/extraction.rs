//! Main-content extraction: corpus-scope paragraph deduplication for WET
//! text and density-based main-content selection for WARC HTML.

use std::collections::{HashMap, HashSet};

use crate::dom::{self, DomNode, DomTree};
use crate::hashing;
use crate::record::Document;
use crate::textutil;

/// How widely paragraph deduplication shares its seen-hash table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DedupScope {
    Shard,
    Snapshot,
    Global,
}

/// Hash a paragraph for deduplication: lowercase, collapse whitespace,
/// digits removed, then a stable 64-bit hash.
pub fn paragraph_hash(paragraph: &str) -> u64 {
    hashing::hash64(textutil::normalize(paragraph, true).as_bytes())
}

/// Remove every paragraph occurrence whose normalized hash was already
/// seen at an earlier position within the same scope unit; the first
/// occurrence is kept. Documents whose paragraph list empties out are
/// dropped; all other ordering is preserved.
///
/// Documents must arrive in corpus-position order (the pipeline feeds them
/// sorted by `(snapshot_id, doc_id)`), which makes "earlier position" well
/// defined and the pass deterministic.
pub fn paragraph_dedup(docs: Vec<Document>, scope: DedupScope) -> Vec<Document> {
    let mut seen: HashMap<String, HashSet<u64>> = HashMap::new();
    let mut out = Vec::with_capacity(docs.len());
    for mut doc in docs {
        let unit = match scope {
            DedupScope::Global => String::new(),
            DedupScope::Snapshot => doc.snapshot_id.clone(),
            DedupScope::Shard => {
                // positional doc ids are "<shard>#<offset>"
                let shard = doc.doc_id.rsplit_once('#').map(|(s, _)| s).unwrap_or(&doc.doc_id);
                format!("{}\u{1f}{shard}", doc.snapshot_id)
            }
        };
        let unit_seen = seen.entry(unit).or_default();
        let mut kept: Vec<&str> = Vec::new();
        let mut removed_any = false;
        for paragraph in doc.text.split('\n') {
            if unit_seen.insert(paragraph_hash(paragraph)) {
                kept.push(paragraph);
            } else {
                removed_any = true;
            }
        }
        if kept.is_empty() {
            continue;
        }
        if removed_any {
            doc.text = kept.join("\n");
        }
        doc.push_stage("paragraph_dedup");
        out.push(doc);
    }
    out
}

/// Tuning for [`extract_main_content`]. The defaults are documented
/// heuristics, not published constants.
#[derive(Debug, Clone)]
pub struct MainContentConfig {
    /// Candidates below this many text characters are ignored.
    pub min_text_chars: usize,
    /// Candidates whose link density exceeds this are dropped.
    pub max_link_density: f64,
    /// Block tags eligible as main-content roots.
    pub candidate_tags: Vec<String>,
}

impl Default for MainContentConfig {
    fn default() -> Self {
        MainContentConfig {
            min_text_chars: 100,
            max_link_density: 0.5,
            candidate_tags: [
                "html", "body", "main", "article", "section", "div", "td", "table", "p",
                "blockquote", "pre",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SubtreeMetrics {
    /// Characters in visible text nodes (script/style excluded).
    text_chars: u64,
    /// Approximate size of the subtree's markup (tag and attribute
    /// characters plus text); only relative magnitudes matter for the
    /// density ranking.
    markup_chars: u64,
    /// Visible text characters under anchor elements.
    link_chars: u64,
}

fn metrics(node: &DomNode, inside_link: bool, out: &mut HashMap<u32, SubtreeMetrics>) -> SubtreeMetrics {
    if node.is_text() {
        let chars = textutil::char_count(&node.text) as u64;
        return SubtreeMetrics {
            text_chars: chars,
            markup_chars: chars,
            link_chars: if inside_link { chars } else { 0 },
        };
    }
    if matches!(node.tag.as_str(), "script" | "style") {
        let markup = textutil::char_count(&dom::serialize_node(node)) as u64;
        let m = SubtreeMetrics { text_chars: 0, markup_chars: markup, link_chars: 0 };
        out.insert(node.node_id, m);
        return m;
    }
    let inside_link = inside_link || node.tag == "a";
    let mut total = SubtreeMetrics {
        text_chars: 0,
        // rough cost of the element's own tags
        markup_chars: (2 * node.tag.len()
            + 5
            + node.attributes.iter().map(|(k, v)| k.len() + v.len() + 4).sum::<usize>())
            as u64,
        link_chars: 0,
    };
    for child in &node.children {
        let m = metrics(child, inside_link, out);
        total.text_chars += m.text_chars;
        total.markup_chars += m.markup_chars;
        total.link_chars += m.link_chars;
    }
    out.insert(node.node_id, total);
    total
}

/// Pick the best-scoring content block: candidates are block elements with
/// at least `min_text_chars` of text and link density at most
/// `max_link_density`, scored by `text_chars * text_density * (1 -
/// link_density)` (ties resolved toward document order). Returns the
/// rendered text of the winning subtree, or `None` when nothing qualifies.
pub fn extract_main_content(tree: &DomTree, cfg: &MainContentConfig) -> Option<String> {
    let mut table = HashMap::new();
    metrics(&tree.root, false, &mut table);

    let mut best: Option<(f64, u32)> = None;
    let mut order = 0u32;
    let mut consider = |node: &DomNode| {
        order += 1;
        if !cfg.candidate_tags.contains(&node.tag) {
            return None::<()>;
        }
        let m = table.get(&node.node_id)?;
        if (m.text_chars as usize) < cfg.min_text_chars {
            return None;
        }
        if textutil::ratio_gt(m.link_chars, m.text_chars, cfg.max_link_density) {
            return None;
        }
        let text_density = m.text_chars as f64 / m.markup_chars.max(1) as f64;
        let link_density = textutil::ratio_f64(m.link_chars, m.text_chars);
        let score = m.text_chars as f64 * text_density * (1.0 - link_density);
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, node.node_id));
        }
        None
    };
    tree.root.walk(&mut |n| {
        consider(n);
    });

    let (_, winner) = best?;
    let node = tree.find(winner).expect("winner id exists");
    let sub = DomTree { root: node.clone(), source_url: tree.source_url.clone() };
    let text = dom::visible_text(&sub);
    (!text.is_empty()).then_some(text)
}

/// Full visible text of the page (no main-content selection); the
/// extraction used by the code and math pipelines, which need sidebars and
/// snippets that density-based selection would drop. Run
/// [`dom::strip_hidden`] first.
pub fn html_to_fulltext(tree: &DomTree) -> String {
    dom::visible_text(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_html;
    use crate::record::DomainTag;

    fn doc(id: &str, snapshot: &str, text: &str) -> Document {
        Document::new(id, "u", snapshot, text, DomainTag::Web)
    }

    #[test]
    fn first_occurrence_kept_within_shard() {
        let docs = vec![
            doc("s1#000000000001", "2023-40", "P\nQ"),
            doc("s1#000000000002", "2023-40", "P\nR"),
        ];
        let out = paragraph_dedup(docs, DedupScope::Shard);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].text, "P\nQ");
        assert_eq!(out[1].text, "R");
    }

    #[test]
    fn snapshot_scope_crosses_shards() {
        let docs = vec![
            doc("s1#000000000001", "2023-40", "P\nQ"),
            doc("s2#000000000001", "2023-40", "P\nR"),
        ];
        // shard scope: different shards, nothing shared
        let out = paragraph_dedup(docs.clone(), DedupScope::Shard);
        assert_eq!(out[1].text, "P\nR");
        // snapshot scope: the repeated P goes
        let out = paragraph_dedup(docs, DedupScope::Snapshot);
        assert_eq!(out[1].text, "R");
    }

    #[test]
    fn unique_paragraphs_pass_through() {
        let docs = vec![doc("s1#1", "s", "alpha\nbeta"), doc("s1#2", "s", "gamma\ndelta")];
        let out = paragraph_dedup(docs.clone(), DedupScope::Global);
        assert_eq!(out[0].text, docs[0].text);
        assert_eq!(out[1].text, docs[1].text);
    }

    #[test]
    fn emptied_documents_dropped() {
        let docs = vec![doc("s1#1", "s", "same line"), doc("s1#2", "s", "same line")];
        let out = paragraph_dedup(docs, DedupScope::Shard);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn near_boilerplate_with_digits_collides() {
        let docs = vec![doc("s1#1", "s", "3 comments"), doc("s1#2", "s", "4 comments")];
        let out = paragraph_dedup(docs, DedupScope::Shard);
        assert_eq!(out.len(), 1, "digit-normalized paragraphs should collide");
    }

    #[test]
    fn article_beats_nav_menu() {
        let nav: String = (0..20)
            .map(|i| format!("<li><a href=\"/{i}\">SENTINEL{i}</a></li>"))
            .collect();
        let article = "Water is the main requirement for a tree to grow and the text \
                       of this article continues for quite a while explaining the full \
                       watering schedule with plenty of detail about roots and soil and \
                       seasonal care so that the block easily clears the length bar.";
        let html = format!(
            "<html><body><ul>{nav}</ul><div class=\"post\">{article}</div></body></html>"
        );
        let tree = parse_html(html.as_bytes(), "u");
        let text = extract_main_content(&tree, &MainContentConfig::default()).unwrap();
        assert!(text.contains("watering schedule"));
        assert!(!text.contains("SENTINEL"));
    }

    #[test]
    fn link_farm_yields_none() {
        let links: String = (0..30)
            .map(|i| format!("<p><a href=\"/{i}\">link text number {i} with some words</a></p>"))
            .collect();
        let html = format!("<html><body>{links}</body></html>");
        let tree = parse_html(html.as_bytes(), "u");
        assert_eq!(extract_main_content(&tree, &MainContentConfig::default()), None);
    }

    #[test]
    fn single_long_paragraph_selected() {
        let p = "word ".repeat(50);
        let html = format!("<p>{p}</p>");
        let tree = parse_html(html.as_bytes(), "u");
        let text = extract_main_content(&tree, &MainContentConfig::default()).unwrap();
        assert_eq!(text, p.trim());
    }

    #[test]
    fn fulltext_keeps_sidebar_and_code() {
        let html = "<body><div class=\"sidebar\">related links sidebar</div>\
                    <p>prose context</p><pre><code>let x = compute();</code></pre></body>";
        let tree = parse_html(html.as_bytes(), "u");
        let full = html_to_fulltext(&tree);
        assert!(full.contains("related links sidebar"));
        assert!(full.contains("let x = compute();"));
    }

    #[test]
    fn main_only_page_matches_fulltext_up_to_whitespace() {
        let body = "one single article body with no boilerplate around it and \
                    enough characters to clear the minimum threshold comfortably \
                    so the density pick has exactly one real candidate";
        let html = format!("<html><body><article>{body}</article></html>");
        let tree = parse_html(html.as_bytes(), "u");
        let main = extract_main_content(&tree, &MainContentConfig::default()).unwrap();
        let full = html_to_fulltext(&tree);
        let squash = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ");
        assert_eq!(squash(&main), squash(&full));
    }

    #[test]
    fn main_content_is_subset_of_fulltext() {
        let html = "<body><div>sidebar links here</div><article>the long main article \
                    body with enough characters to pass the minimum threshold for \
                    the extraction of content from this little test page of ours \
                    and then some more words to be safe about the char floor</article></body>";
        let tree = parse_html(html.as_bytes(), "u");
        let full = html_to_fulltext(&tree);
        let main = extract_main_content(&tree, &MainContentConfig::default()).unwrap();
        for line in main.lines() {
            assert!(full.contains(line), "line {line:?} not in full text");
        }
        assert!(full.contains("sidebar links here"));
    }
}
