//! Text segmentation into paragraphs, sentences and words.

/// Segmentation of one document text.
///
/// Paragraphs are the newline-split blocks (joining them with `\n`
/// reconstructs the text exactly, empties included). Sentences partition
/// each paragraph on `.`, `!` or `?` followed by whitespace or the end of
/// the paragraph; a paragraph without terminal punctuation is one sentence.
/// Words are whitespace-separated tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TextSegmentation {
    pub words: Vec<String>,
    pub sentences: Vec<String>,
    pub paragraphs: Vec<String>,
}

pub fn segment(text: &str) -> TextSegmentation {
    if text.is_empty() {
        return TextSegmentation::default();
    }
    let paragraphs: Vec<String> = text.split('\n').map(String::from).collect();
    let mut sentences = Vec::new();
    for p in &paragraphs {
        split_sentences(p, &mut sentences);
    }
    let words = text.split_whitespace().map(String::from).collect();
    TextSegmentation { words, sentences, paragraphs }
}

/// Append the sentences of one paragraph. Sentences are trimmed;
/// whitespace-only fragments are dropped.
pub fn split_sentences(paragraph: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = paragraph.chars().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    let mut push = |s: &[char]| {
        let sent: String = s.iter().collect();
        let sent = sent.trim();
        if !sent.is_empty() {
            out.push(sent.to_string());
        }
    };
    while i < chars.len() {
        if matches!(chars[i], '.' | '!' | '?') {
            let at_boundary = match chars.get(i + 1) {
                None => true,
                Some(next) => next.is_whitespace(),
            };
            if at_boundary {
                push(&chars[start..=i]);
                i += 1;
                while i < chars.len() && chars[i].is_whitespace() {
                    i += 1;
                }
                start = i;
                continue;
            }
        }
        i += 1;
    }
    if start < chars.len() {
        push(&chars[start..]);
    }
}
