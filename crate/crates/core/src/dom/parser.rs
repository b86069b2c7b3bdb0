//! Tolerant HTML tokenizer and tree builder.

use super::{DomNode, DomTree};

/// Elements that never have children.
const VOID_TAGS: &[&str] = &[
    "area", "base", "br", "col", "embed", "hr", "img", "input", "link", "meta", "param",
    "source", "track", "wbr",
];

/// Elements whose raw text runs to the matching close tag.
const RAW_TEXT_TAGS: &[&str] = &["script", "style", "textarea", "title"];

/// Opening one of these closes an open `<p>` first.
const P_CLOSERS: &[&str] = &[
    "address", "article", "aside", "blockquote", "div", "dl", "fieldset", "figure", "footer",
    "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "li", "main", "nav", "ol", "p",
    "pre", "section", "table", "ul",
];

fn closes_sibling(open: &str, incoming: &str) -> bool {
    match open {
        "p" => P_CLOSERS.contains(&incoming),
        "li" => incoming == "li",
        "dt" | "dd" => incoming == "dt" || incoming == "dd",
        "tr" => incoming == "tr",
        "td" | "th" => matches!(incoming, "td" | "th" | "tr"),
        "thead" | "tbody" | "tfoot" => matches!(incoming, "thead" | "tbody" | "tfoot"),
        "option" => incoming == "option" || incoming == "optgroup",
        _ => false,
    }
}

struct Builder {
    /// Stack of open elements; index 0 is the synthetic `#document` root.
    stack: Vec<DomNode>,
    next_id: u32,
}

impl Builder {
    fn new() -> Self {
        Builder {
            stack: vec![DomNode {
                node_id: 0,
                tag: "#document".to_string(),
                attributes: Vec::new(),
                children: Vec::new(),
                text: String::new(),
                repaired: false,
            }],
            next_id: 1,
        }
    }

    fn id(&mut self) -> u32 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn append_text(&mut self, text: String) {
        if text.is_empty() {
            return;
        }
        let id = self.id();
        let parent = self.stack.last_mut().expect("root never popped");
        // merge with a preceding text node to keep trees small
        if let Some(last) = parent.children.last_mut() {
            if last.is_text() {
                last.text.push_str(&text);
                return;
            }
        }
        parent.children.push(DomNode {
            node_id: id,
            tag: String::new(),
            attributes: Vec::new(),
            children: Vec::new(),
            text,
            repaired: false,
        });
    }

    /// Pop the innermost open element into its parent's child list.
    fn pop(&mut self, repaired: bool) {
        debug_assert!(self.stack.len() > 1);
        let mut node = self.stack.pop().expect("checked above");
        node.repaired |= repaired;
        self.stack
            .last_mut()
            .expect("root never popped")
            .children
            .push(node);
    }

    fn open(&mut self, tag: String, attributes: Vec<(String, String)>, self_closing: bool) {
        // sibling auto-close (`<p>a<p>b`, `<li>..<li>..`); an explicit
        // HTML rule, not a repair
        while self.stack.len() > 1 {
            let open = &self.stack.last().expect("nonempty").tag;
            if closes_sibling(open, &tag) {
                self.pop(false);
            } else {
                break;
            }
        }
        let node = DomNode {
            node_id: self.id(),
            tag: tag.clone(),
            attributes,
            children: Vec::new(),
            text: String::new(),
            repaired: false,
        };
        if self_closing || VOID_TAGS.contains(&tag.as_str()) {
            self.stack
                .last_mut()
                .expect("root never popped")
                .children
                .push(node);
        } else {
            self.stack.push(node);
        }
    }

    fn close(&mut self, tag: &str) {
        let matching = self.stack.iter().rposition(|n| n.tag == tag);
        match matching {
            Some(0) | None => {
                // Stray close tag: ignore it, but remember the repair on the
                // element it appeared in.
                if let Some(top) = self.stack.last_mut() {
                    if top.node_id != 0 {
                        top.repaired = true;
                    }
                }
            }
            Some(idx) => {
                // Elements above the match were left unclosed.
                while self.stack.len() > idx + 1 {
                    self.pop(true);
                }
                self.pop(false);
            }
        }
    }

    fn finish(mut self) -> DomNode {
        while self.stack.len() > 1 {
            // Unclosed at EOF. Top-level html/body being unclosed is the
            // normal case for fragments, deeper tags count as repairs.
            let benign = matches!(self.stack.last().expect("nonempty").tag.as_str(), "html" | "body" | "p");
            self.pop(!benign);
        }
        self.stack.pop().expect("root")
    }
}

/// Parse HTML bytes into a tree. Never fails and never panics: invalid
/// UTF-8 is replaced, unclosed tags are auto-closed, unknown tags are kept
/// as elements. An empty payload yields a tree whose root has no children.
pub fn parse_html(payload: &[u8], url: &str) -> DomTree {
    let text = String::from_utf8_lossy(payload);
    let chars: Vec<char> = text.chars().collect();
    let mut b = Builder::new();
    let mut i = 0usize;
    let n = chars.len();
    let mut text_buf = String::new();

    macro_rules! flush_text {
        () => {
            if !text_buf.is_empty() {
                let t = std::mem::take(&mut text_buf);
                b.append_text(decode_entities(&t));
            }
        };
    }

    while i < n {
        let c = chars[i];
        if c != '<' {
            text_buf.push(c);
            i += 1;
            continue;
        }
        // '<' - decide what it introduces
        let next = chars.get(i + 1).copied().unwrap_or('\0');
        if next == '!' {
            flush_text!();
            if chars[i + 1..].starts_with(&['!', '-', '-']) {
                // comment
                i = skip_until(&chars, i + 4, &['-', '-', '>']);
            } else {
                // doctype / CDATA-ish: skip to '>'
                i = skip_until(&chars, i + 2, &['>']);
            }
            continue;
        }
        if next == '?' {
            flush_text!();
            i = skip_until(&chars, i + 2, &['>']);
            continue;
        }
        if next == '/' {
            let (tag, after) = read_tag_name(&chars, i + 2);
            if tag.is_empty() {
                text_buf.push('<');
                i += 1;
                continue;
            }
            flush_text!();
            i = skip_until(&chars, after, &['>']);
            b.close(&tag);
            continue;
        }
        if !next.is_ascii_alphabetic() {
            // literal '<' in text
            text_buf.push('<');
            i += 1;
            continue;
        }

        let (tag, after) = read_tag_name(&chars, i + 1);
        flush_text!();
        let (attributes, self_closing, after_gt) = read_attributes(&chars, after);
        i = after_gt;
        let is_raw = RAW_TEXT_TAGS.contains(&tag.as_str());
        b.open(tag.clone(), attributes, self_closing && !is_raw);
        if is_raw && !self_closing {
            // raw text until the matching close tag (case-insensitive)
            let close = format!("</{tag}");
            let lower: String = chars[i..].iter().collect::<String>().to_lowercase();
            let rel = lower.find(&close);
            let (raw_end, resume) = match rel {
                Some(pos) => {
                    // pos is a byte offset in `lower`; convert to char count
                    let upto = lower[..pos].chars().count();
                    (i + upto, i + upto)
                }
                None => (n, n),
            };
            let raw: String = chars[i..raw_end].iter().collect();
            if !raw.is_empty() {
                b.append_text(raw);
            }
            i = resume;
            if i < n {
                // consume the close tag
                let (ctag, after) = read_tag_name(&chars, i + 2);
                i = skip_until(&chars, after, &['>']);
                b.close(&ctag);
            } else {
                b.close(&tag);
            }
        }
    }
    flush_text!();

    DomTree { root: b.finish(), source_url: url.to_string() }
}

fn skip_until(chars: &[char], mut i: usize, pattern: &[char]) -> usize {
    let n = chars.len();
    while i < n {
        if chars[i..].starts_with(pattern) {
            return i + pattern.len();
        }
        i += 1;
    }
    n
}

fn read_tag_name(chars: &[char], mut i: usize) -> (String, usize) {
    let mut name = String::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == ':' {
            name.extend(c.to_lowercase());
            i += 1;
        } else {
            break;
        }
    }
    (name, i)
}

/// Parse attributes up to and including the closing '>'.
/// Returns (attributes, self_closing, index after '>').
fn read_attributes(chars: &[char], mut i: usize) -> (Vec<(String, String)>, bool, usize) {
    let n = chars.len();
    let mut attrs = Vec::new();
    let mut self_closing = false;
    loop {
        while i < n && chars[i].is_whitespace() {
            i += 1;
        }
        if i >= n {
            return (attrs, self_closing, n);
        }
        match chars[i] {
            '>' => return (attrs, self_closing, i + 1),
            '/' => {
                self_closing = true;
                i += 1;
            }
            _ => {
                // attribute name
                let start = i;
                while i < n && !chars[i].is_whitespace() && !matches!(chars[i], '=' | '>' | '/') {
                    i += 1;
                }
                let name: String = chars[start..i].iter().flat_map(|c| c.to_lowercase()).collect();
                while i < n && chars[i].is_whitespace() {
                    i += 1;
                }
                let mut value = String::new();
                if i < n && chars[i] == '=' {
                    i += 1;
                    while i < n && chars[i].is_whitespace() {
                        i += 1;
                    }
                    if i < n && (chars[i] == '"' || chars[i] == '\'') {
                        let quote = chars[i];
                        i += 1;
                        let vstart = i;
                        while i < n && chars[i] != quote {
                            i += 1;
                        }
                        value = chars[vstart..i].iter().collect();
                        if i < n {
                            i += 1; // closing quote
                        }
                    } else {
                        let vstart = i;
                        while i < n && !chars[i].is_whitespace() && chars[i] != '>' {
                            i += 1;
                        }
                        value = chars[vstart..i].iter().collect();
                    }
                }
                if !name.is_empty() {
                    attrs.push((name, decode_entities(&value)));
                }
            }
        }
    }
}

/// Decode the common named entities plus numeric character references.
pub fn decode_entities(s: &str) -> String {
    if !s.contains('&') {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len());
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] != '&' {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        // collect up to ';' within a short window
        let mut j = i + 1;
        let mut name = String::new();
        while j < chars.len() && j - i <= 10 && chars[j] != ';' {
            if !(chars[j].is_ascii_alphanumeric() || chars[j] == '#') {
                break;
            }
            name.push(chars[j]);
            j += 1;
        }
        if j < chars.len() && chars[j] == ';' && !name.is_empty() {
            let decoded = match name.as_str() {
                "amp" => Some('&'),
                "lt" => Some('<'),
                "gt" => Some('>'),
                "quot" => Some('"'),
                "apos" => Some('\''),
                "nbsp" => Some(' '),
                "mdash" => Some('—'),
                "ndash" => Some('–'),
                "hellip" => Some('…'),
                "copy" => Some('©'),
                n if n.starts_with('#') => {
                    let num = &n[1..];
                    let code = if let Some(hex) = num.strip_prefix('x').or_else(|| num.strip_prefix('X')) {
                        u32::from_str_radix(hex, 16).ok()
                    } else {
                        num.parse().ok()
                    };
                    code.and_then(char::from_u32)
                }
                _ => None,
            };
            if let Some(c) = decoded {
                out.push(c);
                i = j + 1;
                continue;
            }
        }
        out.push('&');
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn only_element_child(tree: &DomTree) -> &DomNode {
        let els: Vec<&DomNode> =
            tree.root.children.iter().filter(|c| c.is_element()).collect();
        assert_eq!(els.len(), 1, "expected one element child: {:?}", tree.root);
        els[0]
    }

    #[test]
    fn parses_simple_paragraph() {
        let tree = parse_html(b"<p>hi</p>", "u");
        let p = only_element_child(&tree);
        assert_eq!(p.tag, "p");
        assert_eq!(p.children.len(), 1);
        assert_eq!(p.children[0].text, "hi");
    }

    #[test]
    fn auto_closes_sibling_paragraphs() {
        let tree = parse_html(b"<div><p>a<p>b</div>", "u");
        let div = only_element_child(&tree);
        let ps: Vec<&DomNode> = div.children.iter().filter(|c| c.tag == "p").collect();
        assert_eq!(ps.len(), 2, "tree: {div:?}");
        assert_eq!(ps[0].raw_text(), "a");
        assert_eq!(ps[1].raw_text(), "b");
        // sibling auto-close is not a repair
        assert!(!ps[0].repaired);
    }

    #[test]
    fn empty_payload_gives_empty_root() {
        let tree = parse_html(b"", "u");
        assert_eq!(tree.root.tag, "#document");
        assert!(tree.root.children.is_empty());
    }

    #[test]
    fn script_content_preserved_as_text_child() {
        let tree = parse_html(
            b"<p>before</p><script type=\"math/tex\">x < y \\frac{a}{b}</script>",
            "u",
        );
        let script = tree
            .root
            .children
            .iter()
            .find(|c| c.tag == "script")
            .expect("script element");
        assert_eq!(script.children.len(), 1);
        assert_eq!(script.children[0].text, "x < y \\frac{a}{b}");
        assert_eq!(script.attr("type"), Some("math/tex"));
    }

    #[test]
    fn mismatched_close_marks_repair() {
        let tree = parse_html(b"<div><mrow>x</div>", "u");
        let div = only_element_child(&tree);
        let mrow = div.children.iter().find(|c| c.tag == "mrow").unwrap();
        assert!(mrow.repaired);
        assert!(div.subtree_repaired());
    }

    #[test]
    fn well_formed_subtree_not_repaired() {
        let tree = parse_html(b"<math><mrow><mi>x</mi></mrow></math>", "u");
        let math = only_element_child(&tree);
        assert!(!math.subtree_repaired());
    }

    #[test]
    fn entities_and_numeric_refs_decode() {
        let tree = parse_html(b"<p>a &amp; b &#60; c &#x263A;</p>", "u");
        assert_eq!(only_element_child(&tree).raw_text(), "a & b < c \u{263A}");
    }

    #[test]
    fn attributes_parse_with_all_quote_styles() {
        let tree = parse_html(br#"<a href="x" class='y z' data-n=3 hidden>t</a>"#, "u");
        let a = only_element_child(&tree);
        assert_eq!(a.attr("href"), Some("x"));
        assert_eq!(a.attr("class"), Some("y z"));
        assert_eq!(a.attr("data-n"), Some("3"));
        assert_eq!(a.attr("hidden"), Some(""));
    }

    #[test]
    fn stray_lt_is_literal_text() {
        let tree = parse_html(b"<p>3 < 5 and a<b? yes</p>", "u");
        let p = only_element_child(&tree);
        // "<b" opens an element mid-text (tolerant parsing), but "< 5" stays
        assert!(p.raw_text().contains("3 < 5"));
    }

    #[test]
    fn node_ids_unique() {
        let tree = parse_html(b"<div><p>a</p><p>b<i>c</i></p></div>", "u");
        let mut ids = Vec::new();
        tree.root.walk(&mut |n| ids.push(n.node_id));
        let mut dedup = ids.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(ids.len(), dedup.len());
    }

    #[test]
    fn tbody_without_table_is_kept() {
        // the pipeline relies on <tbody> staying in place even without <table>
        let tree = parse_html(b"<tbody><code>a</code><code>b</code></tbody>", "u");
        let tbody = only_element_child(&tree);
        assert_eq!(tbody.tag, "tbody");
        assert_eq!(tbody.children.iter().filter(|c| c.tag == "code").count(), 2);
    }
}
