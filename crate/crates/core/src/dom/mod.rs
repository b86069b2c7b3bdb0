//! Error-tolerant HTML DOM: parsing, hidden-element removal, text rendering.
//!
//! The parser is deliberately small and predictable rather than a full HTML5
//! tree builder: unclosed tags are auto-closed, unknown tags are kept,
//! nothing is re-parented, and `<script>`/`<style>` bodies are preserved as
//! text children (math localization reads `<script type="math/tex">`
//! contents). Trees are immutable after parsing and cheap to share across
//! threads.

mod parser;
mod render;

pub use parser::parse_html;
pub use render::{
    render_text, serialize_node, visible_text, RenderOptions, RenderOverride, BLOCK_TAGS,
};

/// One DOM node: either an element (`tag` nonempty) or a text node
/// (`text` nonempty). Attribute names are lowercased; insertion order is
/// preserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomNode {
    pub node_id: u32,
    pub tag: String,
    pub attributes: Vec<(String, String)>,
    pub children: Vec<DomNode>,
    pub text: String,
    /// Set when the parser had to repair framing here: the element was
    /// implicitly closed by a mismatched close tag or end-of-input, or a
    /// stray close tag was ignored inside it. Used as the XML
    /// well-formedness signal for MathML subtrees.
    pub repaired: bool,
}

impl DomNode {
    pub fn is_element(&self) -> bool {
        !self.tag.is_empty()
    }

    pub fn is_text(&self) -> bool {
        self.tag.is_empty()
    }

    /// First value of attribute `name` (case-insensitive name match).
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// Depth-first pre-order walk over this subtree.
    pub fn walk<'a>(&'a self, visit: &mut dyn FnMut(&'a DomNode)) {
        visit(self);
        for child in &self.children {
            child.walk(visit);
        }
    }

    /// Concatenated text of all descendant text nodes, raw (no block
    /// handling, no whitespace collapsing).
    pub fn raw_text(&self) -> String {
        let mut out = String::new();
        self.walk(&mut |n| {
            if n.is_text() {
                out.push_str(&n.text);
            }
        });
        out
    }

    /// True if any node in the subtree was repaired during parsing.
    pub fn subtree_repaired(&self) -> bool {
        let mut repaired = false;
        self.walk(&mut |n| repaired |= n.repaired);
        repaired
    }
}

/// A parsed page. `node_id`s are unique within the tree and stable across
/// [`strip_hidden`] (surviving nodes keep their ids).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomTree {
    pub root: DomNode,
    pub source_url: String,
}

impl DomTree {
    pub fn find(&self, node_id: u32) -> Option<&DomNode> {
        let mut found = None;
        self.root.walk(&mut |n| {
            if n.node_id == node_id {
                found = Some(n);
            }
        });
        found
    }
}

/// True when the element is hidden from rendering via inline attributes:
/// `aria-hidden="true"`, or a `style` containing `display:none` or
/// `visibility:hidden` (whitespace-insensitive, case-insensitive).
///
/// Only inline attributes are inspected; visibility set through external
/// CSS or scripts is out of scope.
pub fn is_hidden_element(node: &DomNode) -> bool {
    if !node.is_element() {
        return false;
    }
    if let Some(v) = node.attr("aria-hidden") {
        if v.trim().eq_ignore_ascii_case("true") {
            return true;
        }
    }
    if let Some(style) = node.attr("style") {
        let compact: String = style
            .chars()
            .filter(|c| !c.is_whitespace())
            .flat_map(char::to_lowercase)
            .collect();
        if compact.contains("display:none") || compact.contains("visibility:hidden") {
            return true;
        }
    }
    false
}

/// Remove every hidden element (with its whole subtree). Idempotent; node
/// ids and document order of the survivors are unchanged.
pub fn strip_hidden(tree: &DomTree) -> DomTree {
    fn keep(node: &DomNode) -> Option<DomNode> {
        if is_hidden_element(node) {
            return None;
        }
        let mut copy = node.clone();
        copy.children = node.children.iter().filter_map(keep).collect();
        Some(copy)
    }
    DomTree {
        root: keep(&tree.root).unwrap_or_else(|| DomNode {
            node_id: tree.root.node_id,
            tag: tree.root.tag.clone(),
            attributes: Vec::new(),
            children: Vec::new(),
            text: String::new(),
            repaired: false,
        }),
        source_url: tree.source_url.clone(),
    }
}
