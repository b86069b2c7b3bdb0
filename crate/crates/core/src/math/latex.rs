//! Structural LaTeX validation.
//!
//! A recursive-descent tokenizer that checks the things a grammar walker
//! can decide without rendering: balanced braces, matched
//! `\left`/`\right` pairs with legal delimiters, matched
//! `\begin{e}`/`\end{e}` environments, well-formed control sequences and
//! balanced `$` toggles. Unknown command names are skippable by design;
//! structure, not vocabulary, decides validity.

/// Why a formula failed validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LatexError {
    UnbalancedBrace { at: usize },
    DanglingBackslash { at: usize },
    BadLeftRightDelimiter { at: usize },
    UnmatchedRight { at: usize },
    UnclosedLeft { count: usize },
    EnvironmentMismatch { expected: Option<String>, found: String, at: usize },
    UnclosedEnvironment { name: String },
    MissingEnvironmentName { at: usize },
    UnbalancedMathToggle,
}

impl std::fmt::Display for LatexError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LatexError::UnbalancedBrace { at } => write!(f, "unbalanced brace at {at}"),
            LatexError::DanglingBackslash { at } => write!(f, "dangling backslash at {at}"),
            LatexError::BadLeftRightDelimiter { at } => {
                write!(f, "\\left/\\right without a delimiter at {at}")
            }
            LatexError::UnmatchedRight { at } => write!(f, "\\right without \\left at {at}"),
            LatexError::UnclosedLeft { count } => write!(f, "{count} unclosed \\left"),
            LatexError::EnvironmentMismatch { expected, found, at } => write!(
                f,
                "environment mismatch at {at}: expected {}, found {found}",
                expected.as_deref().unwrap_or("none")
            ),
            LatexError::UnclosedEnvironment { name } => write!(f, "unclosed environment {name}"),
            LatexError::MissingEnvironmentName { at } => {
                write!(f, "\\begin/\\end without {{name}} at {at}")
            }
            LatexError::UnbalancedMathToggle => write!(f, "unbalanced $"),
        }
    }
}

const DELIM_CHARS: &[char] = &['(', ')', '[', ']', '.', '/', '|', '<', '>'];
const DELIM_COMMANDS: &[&str] = &[
    "{", "}", "|", "langle", "rangle", "lceil", "rceil", "lfloor", "rfloor", "vert",
    "Vert", "lvert", "rvert", "lVert", "rVert", "backslash", "lgroup", "rgroup",
    "lmoustache", "rmoustache", "arrowvert", "Arrowvert", "bracevert", "uparrow",
    "downarrow", "updownarrow", "Uparrow", "Downarrow", "Updownarrow",
];

struct Scanner {
    chars: Vec<char>,
    pos: usize,
}

impl Scanner {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_whitespace(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    /// Read the control sequence after a consumed backslash: a letter run
    /// or one non-letter character.
    fn control_sequence(&mut self) -> Option<String> {
        let first = self.peek()?;
        if first.is_alphabetic() {
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_alphabetic()) {
                self.pos += 1;
            }
            Some(self.chars[start..self.pos].iter().collect())
        } else {
            self.pos += 1;
            Some(first.to_string())
        }
    }

    /// Expect `{name}` (whitespace tolerated before it).
    fn env_name(&mut self) -> Option<String> {
        self.skip_whitespace();
        if self.peek() != Some('{') {
            return None;
        }
        self.pos += 1;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == '}' {
                let name: String = self.chars[start..self.pos].iter().collect();
                self.pos += 1;
                return (!name.is_empty()).then_some(name);
            }
            if c == '{' {
                return None;
            }
            self.pos += 1;
        }
        None
    }

    /// A delimiter token for `\left`/`\right`.
    fn delimiter(&mut self) -> bool {
        self.skip_whitespace();
        match self.peek() {
            None => false,
            Some('\\') => {
                self.pos += 1;
                match self.control_sequence() {
                    Some(cs) => DELIM_COMMANDS.contains(&cs.as_str()),
                    None => false,
                }
            }
            Some(c) if DELIM_CHARS.contains(&c) => {
                self.pos += 1;
                true
            }
            Some(c) if c.is_ascii_digit() || c.is_alphabetic() => false,
            Some(_) => false,
        }
    }
}

/// Check one formula. `Ok(())` means structurally valid.
pub fn validate(source: &str) -> Result<(), LatexError> {
    let mut s = Scanner { chars: source.chars().collect(), pos: 0 };
    let mut brace_depth: i64 = 0;
    let mut left_stack = 0usize;
    let mut env_stack: Vec<String> = Vec::new();
    let mut dollars = 0usize;

    while let Some(c) = s.next() {
        match c {
            '{' => brace_depth += 1,
            '}' => {
                brace_depth -= 1;
                if brace_depth < 0 {
                    return Err(LatexError::UnbalancedBrace { at: s.pos - 1 });
                }
            }
            '$' => dollars += 1,
            '%' => {
                // comment to end of line
                while s.peek().is_some_and(|c| c != '\n') {
                    s.pos += 1;
                }
            }
            '\\' => {
                let at = s.pos - 1;
                let Some(cs) = s.control_sequence() else {
                    return Err(LatexError::DanglingBackslash { at });
                };
                match cs.as_str() {
                    "left" => {
                        if !s.delimiter() {
                            return Err(LatexError::BadLeftRightDelimiter { at });
                        }
                        left_stack += 1;
                    }
                    "right" => {
                        if !s.delimiter() {
                            return Err(LatexError::BadLeftRightDelimiter { at });
                        }
                        if left_stack == 0 {
                            return Err(LatexError::UnmatchedRight { at });
                        }
                        left_stack -= 1;
                    }
                    "begin" => match s.env_name() {
                        Some(name) => env_stack.push(name),
                        None => return Err(LatexError::MissingEnvironmentName { at }),
                    },
                    "end" => match s.env_name() {
                        Some(name) => match env_stack.pop() {
                            Some(open) if open == name => {}
                            expected => {
                                return Err(LatexError::EnvironmentMismatch {
                                    expected,
                                    found: name,
                                    at,
                                })
                            }
                        },
                        None => return Err(LatexError::MissingEnvironmentName { at }),
                    },
                    // every other command name is known-or-skippable
                    _ => {}
                }
            }
            _ => {}
        }
    }

    if brace_depth != 0 {
        return Err(LatexError::UnbalancedBrace { at: s.chars.len() });
    }
    if left_stack != 0 {
        return Err(LatexError::UnclosedLeft { count: left_stack });
    }
    if let Some(name) = env_stack.pop() {
        return Err(LatexError::UnclosedEnvironment { name });
    }
    if !dollars.is_multiple_of(2) {
        return Err(LatexError::UnbalancedMathToggle);
    }
    Ok(())
}
