//! Plain-text rendering of DOM trees (WET-style conversion).

use std::collections::HashMap;

use super::{DomNode, DomTree};

/// Elements that introduce line boundaries in the rendered text. This set is
/// fixed; it is the deterministic stand-in for an external WARC-to-WET
/// converter.
pub const BLOCK_TAGS: &[&str] = &[
    "p", "div", "li", "br", "pre", "h1", "h2", "h3", "h4", "h5", "h6", "tr", "table",
];

/// Per-node rendering overrides, keyed by `node_id`.
#[derive(Debug, Clone)]
pub enum RenderOverride {
    /// Emit this text instead of rendering the subtree (formula inlining).
    Replace(String),
    /// Emit nothing for this subtree (duplicate formula representations).
    Skip,
    /// Render the subtree verbatim between marker lines (code blocks).
    MarkedBlock { open: String, close: String },
}

#[derive(Debug, Clone, Default)]
pub struct RenderOptions {
    pub overrides: HashMap<u32, RenderOverride>,
}

/// Depth-first visible text: text nodes concatenated, block elements
/// introducing newline boundaries, whitespace collapsed outside `<pre>`,
/// consecutive blank lines collapsed to one, `<script>`/`<style>` text
/// excluded. Hidden-element removal is the caller's responsibility
/// (run [`super::strip_hidden`] first).
pub fn visible_text(tree: &DomTree) -> String {
    render_text(tree, &RenderOptions::default())
}

/// [`visible_text`] with per-node overrides.
pub fn render_text(tree: &DomTree, opts: &RenderOptions) -> String {
    let mut r = Renderer {
        opts,
        lines: Vec::new(),
        current: String::new(),
        current_verbatim: false,
        pending_space: false,
        pre_depth: 0,
    };
    r.element_children(&tree.root);
    r.finish()
}

struct Renderer<'a> {
    opts: &'a RenderOptions,
    lines: Vec<(String, bool)>,
    current: String,
    current_verbatim: bool,
    pending_space: bool,
    pre_depth: usize,
}

impl Renderer<'_> {
    fn flush(&mut self) {
        if self.current.is_empty() {
            self.pending_space = false;
            self.current_verbatim = false;
            return;
        }
        let mut line = std::mem::take(&mut self.current);
        if !self.current_verbatim {
            line.truncate(line.trim_end().len());
        }
        self.lines.push((line, self.current_verbatim));
        self.current_verbatim = false;
        self.pending_space = false;
    }

    fn blank_line(&mut self) {
        self.flush();
        self.lines.push((String::new(), false));
    }

    fn text(&mut self, text: &str) {
        if self.pre_depth > 0 {
            self.current_verbatim = true;
            let mut first = true;
            for segment in text.split('\n') {
                if !first {
                    let line = std::mem::take(&mut self.current);
                    self.lines.push((line, true));
                    self.current_verbatim = true;
                }
                self.current.push_str(segment);
                first = false;
            }
            return;
        }
        for ch in text.chars() {
            if ch.is_whitespace() {
                if !self.current.is_empty() {
                    self.pending_space = true;
                }
            } else {
                if self.pending_space {
                    self.current.push(' ');
                    self.pending_space = false;
                }
                self.current.push(ch);
            }
        }
    }

    fn node(&mut self, node: &DomNode) {
        if let Some(ov) = self.opts.overrides.get(&node.node_id) {
            match ov {
                RenderOverride::Skip => return,
                RenderOverride::Replace(s) => {
                    if self.pending_space && !self.current.is_empty() {
                        self.current.push(' ');
                        self.pending_space = false;
                    }
                    // replacement text is emitted verbatim; newlines split lines
                    let mut first = true;
                    for segment in s.split('\n') {
                        if !first {
                            self.flush();
                        }
                        self.current.push_str(segment);
                        first = false;
                    }
                    return;
                }
                RenderOverride::MarkedBlock { open, close } => {
                    self.flush();
                    for line in open.split('\n') {
                        self.lines.push((line.to_string(), true));
                    }
                    self.pre_depth += 1;
                    self.element_children(node);
                    self.flush();
                    self.pre_depth -= 1;
                    for line in close.split('\n') {
                        self.lines.push((line.to_string(), true));
                    }
                    return;
                }
            }
        }

        if node.is_text() {
            self.text(&node.text);
            return;
        }
        match node.tag.as_str() {
            "script" | "style" => {}
            "br" => {
                if self.current.is_empty() {
                    self.blank_line();
                } else {
                    self.flush();
                }
            }
            "pre" => {
                self.flush();
                self.pre_depth += 1;
                self.element_children(node);
                self.flush();
                self.pre_depth -= 1;
            }
            tag if BLOCK_TAGS.contains(&tag) => {
                self.flush();
                self.element_children(node);
                self.flush();
            }
            _ => self.element_children(node),
        }
    }

    fn element_children(&mut self, node: &DomNode) {
        for child in &node.children {
            self.node(child);
        }
    }

    fn finish(mut self) -> String {
        self.flush();
        // collapse runs of blank non-verbatim lines, drop leading blanks
        let mut out: Vec<(String, bool)> = Vec::with_capacity(self.lines.len());
        for (line, verbatim) in self.lines {
            let blank = line.is_empty() && !verbatim;
            if blank {
                match out.last() {
                    None => continue,
                    Some((prev, prev_verb)) if prev.is_empty() && !prev_verb => continue,
                    _ => {}
                }
            }
            out.push((line, verbatim));
        }
        while matches!(out.last(), Some((line, _)) if line.is_empty()) {
            out.pop();
        }
        let mut s = String::new();
        for (i, (line, _)) in out.iter().enumerate() {
            if i > 0 {
                s.push('\n');
            }
            s.push_str(line);
        }
        s
    }
}

/// Canonical markup serialization of a subtree; used for markup-density
/// scoring and as the source text of MathML formulas.
pub fn serialize_node(node: &DomNode) -> String {
    let mut out = String::new();
    write_node(node, &mut out);
    out
}

fn write_node(node: &DomNode, out: &mut String) {
    if node.is_text() {
        for ch in node.text.chars() {
            match ch {
                '&' => out.push_str("&amp;"),
                '<' => out.push_str("&lt;"),
                '>' => out.push_str("&gt;"),
                c => out.push(c),
            }
        }
        return;
    }
    if node.tag == "#document" {
        for child in &node.children {
            write_node(child, out);
        }
        return;
    }
    out.push('<');
    out.push_str(&node.tag);
    for (k, v) in &node.attributes {
        out.push(' ');
        out.push_str(k);
        out.push_str("=\"");
        for ch in v.chars() {
            match ch {
                '&' => out.push_str("&amp;"),
                '"' => out.push_str("&quot;"),
                c => out.push(c),
            }
        }
        out.push('"');
    }
    if node.children.is_empty() {
        out.push_str("/>");
        return;
    }
    out.push('>');
    for child in &node.children {
        write_node(child, out);
    }
    out.push_str("</");
    out.push_str(&node.tag);
    out.push('>');
}
