//! Tokenizer for unpreprocessed C.
//!
//! Comments, string literals, and character literals are consumed whole and
//! never surface as identifiers. A `#` that is the first non-blank character
//! of a line starts a directive token holding the logical line (continuations
//! joined, comments replaced by a space).

use super::ScanError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Number,
    Str,
    Char,
    Punct(char),
    /// Directive text after the `#`.
    Directive(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub line: usize,
}

impl Token {
    pub fn ident(&self) -> Option<&str> {
        match &self.kind {
            TokenKind::Ident(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_punct(&self, c: char) -> bool {
        self.kind == TokenKind::Punct(c)
    }

    pub fn is_directive(&self) -> bool {
        matches!(self.kind, TokenKind::Directive(_))
    }
}

struct Cursor<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    path: &'a str,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
        }
        Some(c)
    }

    /// Backslash-newline (optionally with `\r`).
    fn continuation_len(&self) -> Option<usize> {
        match (self.peek(), self.peek_at(1), self.peek_at(2)) {
            (Some('\\'), Some('\n'), _) => Some(2),
            (Some('\\'), Some('\r'), Some('\n')) => Some(3),
            _ => None,
        }
    }

    fn skip_block_comment(&mut self) -> Result<(), ScanError> {
        let start = self.line;
        self.pos += 2;
        loop {
            match self.peek() {
                None => return Err(self.lex_error(start, "unterminated comment")),
                Some('*') if self.peek_at(1) == Some('/') => {
                    self.pos += 2;
                    return Ok(());
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn skip_line_comment(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            if let Some(n) = self.continuation_len() {
                for _ in 0..n {
                    self.bump();
                }
                continue;
            }
            self.bump();
        }
    }

    /// Consumes a quoted literal whose opening quote is at the cursor.
    fn skip_quoted(&mut self, quote: char) -> Result<(), ScanError> {
        let start = self.line;
        let what = if quote == '"' { "string literal" } else { "character literal" };
        self.pos += 1;
        loop {
            match self.peek() {
                None | Some('\n') => return Err(self.lex_error(start, &format!("unterminated {what}"))),
                Some('\\') => {
                    if let Some(n) = self.continuation_len() {
                        for _ in 0..n {
                            self.bump();
                        }
                    } else {
                        self.pos += 1;
                        if self.peek().is_some_and(|c| c != '\n') {
                            self.pos += 1;
                        }
                    }
                }
                Some(c) if c == quote => {
                    self.pos += 1;
                    return Ok(());
                }
                _ => {
                    self.pos += 1;
                }
            }
        }
    }

    fn read_directive(&mut self) -> Result<String, ScanError> {
        let mut text = String::new();
        self.pos += 1; // '#'
        loop {
            match self.peek() {
                None | Some('\n') => break,
                Some('/') if self.peek_at(1) == Some('*') => {
                    self.skip_block_comment()?;
                    text.push(' ');
                }
                Some('/') if self.peek_at(1) == Some('/') => self.skip_line_comment(),
                Some('\\') if self.continuation_len().is_some() => {
                    for _ in 0..self.continuation_len().unwrap() {
                        self.bump();
                    }
                    text.push(' ');
                }
                Some(q @ ('"' | '\'')) => {
                    // Copied verbatim; unterminated quotes in directives (e.g.
                    // `#error don't`) are tolerated.
                    text.push(q);
                    self.pos += 1;
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        text.push(c);
                        self.pos += 1;
                        if c == q {
                            break;
                        }
                    }
                }
                Some('\r') => {
                    self.pos += 1;
                }
                Some(c) => {
                    text.push(c);
                    self.pos += 1;
                }
            }
        }
        Ok(text.trim().to_string())
    }

    fn lex_error(&self, line: usize, message: &str) -> ScanError {
        ScanError::Lex { path: self.path.to_string(), line, message: message.to_string() }
    }
}

/// Tokenize `content`; line numbers are 1-based.
pub fn tokenize(path: &str, content: &str) -> Result<Vec<Token>, ScanError> {
    let mut cur = Cursor { chars: content.chars().collect(), pos: 0, line: 1, path };
    let mut out = Vec::new();
    let mut line_start = true;
    while let Some(c) = cur.peek() {
        let line = cur.line;
        match c {
            '\n' => {
                cur.bump();
                line_start = true;
                continue;
            }
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '\\' if cur.continuation_len().is_some() => {
                for _ in 0..cur.continuation_len().unwrap() {
                    cur.bump();
                }
                continue;
            }
            '/' if cur.peek_at(1) == Some('*') => {
                cur.skip_block_comment()?;
                continue;
            }
            '/' if cur.peek_at(1) == Some('/') => {
                cur.skip_line_comment();
                continue;
            }
            '#' if line_start => {
                let text = cur.read_directive()?;
                out.push(Token { kind: TokenKind::Directive(text), line });
                continue;
            }
            '"' | '\'' => {
                cur.skip_quoted(c)?;
                let kind = if c == '"' { TokenKind::Str } else { TokenKind::Char };
                out.push(Token { kind, line });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(c) = cur.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        name.push(c);
                        cur.pos += 1;
                    } else {
                        break;
                    }
                }
                // encoding prefixes: L"..", u8"..", U'..'
                if matches!(name.as_str(), "L" | "u" | "U" | "u8") && matches!(cur.peek(), Some('"' | '\'')) {
                    let q = cur.peek().unwrap();
                    cur.skip_quoted(q)?;
                    let kind = if q == '"' { TokenKind::Str } else { TokenKind::Char };
                    out.push(Token { kind, line });
                } else {
                    out.push(Token { kind: TokenKind::Ident(name), line });
                }
            }
            c if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                cur.pos += 1;
                while let Some(c) = cur.peek() {
                    let exp_sign =
                        matches!(c, '+' | '-') && matches!(cur.chars.get(cur.pos - 1), Some('e' | 'E' | 'p' | 'P'));
                    if c.is_ascii_alphanumeric() || c == '_' || c == '.' || exp_sign {
                        cur.pos += 1;
                    } else {
                        break;
                    }
                }
                out.push(Token { kind: TokenKind::Number, line });
            }
            c => {
                cur.bump();
                out.push(Token { kind: TokenKind::Punct(c), line });
            }
        }
        line_start = false;
    }
    Ok(out)
}
