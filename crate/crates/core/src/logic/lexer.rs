//! Tokenizer shared by the clause, policy and route readers.

use std::fmt;

/// A location-bearing syntax error. Line and column are 1-based and point at
/// the first character of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl SyntaxError {
    pub fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        SyntaxError {
            line,
            column,
            message: message.into(),
        }
    }
}

/// Which line-comment marker the input uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommentStyle {
    /// `% ...` (clause files)
    Percent,
    /// `// ...` (policy and route files)
    DoubleSlash,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    /// Identifier starting with a lowercase letter.
    Ident(String),
    /// Identifier starting with an uppercase letter or underscore.
    Var(String),
    /// Single-quoted atom.
    Quoted(String),
    /// Double-quoted string.
    Str(String),
    Int(i64),
    Punct(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Quoted(s) => write!(f, "'{s}'"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Int(v) => write!(f, "`{v}`"),
            Tok::Punct(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
}

const PUNCT: &[&str] = &[":-", "\\+", "->", "(", ")", ",", ".", "{", "}", "[", "]", ":"];

struct Scanner<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
    _src: &'a str,
}

impl Scanner<'_> {
    fn peek(&self, ahead: usize) -> Option<char> {
        self.chars.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }
}

/// Splits `text` into tokens, always ending with [`Tok::Eof`].
pub fn tokenize(text: &str, comments: CommentStyle) -> Result<Vec<Token>, SyntaxError> {
    let mut s = Scanner {
        chars: text.chars().collect(),
        pos: 0,
        line: 1,
        column: 1,
        _src: text,
    };
    let mut out = Vec::new();
    loop {
        // whitespace and comments
        loop {
            match s.peek(0) {
                Some(c) if c.is_whitespace() => {
                    s.bump();
                }
                Some('%') if comments == CommentStyle::Percent => skip_line(&mut s),
                Some('/') if comments == CommentStyle::DoubleSlash && s.peek(1) == Some('/') => {
                    skip_line(&mut s)
                }
                _ => break,
            }
        }
        let (line, column) = (s.line, s.column);
        let Some(c) = s.peek(0) else {
            out.push(Token {
                tok: Tok::Eof,
                line,
                column,
            });
            return Ok(out);
        };
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut ident = String::new();
            while let Some(c) = s.peek(0) {
                if c.is_ascii_alphanumeric() || c == '_' {
                    ident.push(c);
                    s.bump();
                } else {
                    break;
                }
            }
            if c.is_ascii_lowercase() {
                Tok::Ident(ident)
            } else {
                Tok::Var(ident)
            }
        } else if c.is_ascii_digit() || (c == '-' && s.peek(1).is_some_and(|d| d.is_ascii_digit())) {
            let mut digits = String::new();
            if c == '-' {
                digits.push('-');
                s.bump();
            }
            while let Some(d) = s.peek(0).filter(char::is_ascii_digit) {
                digits.push(d);
                s.bump();
            }
            let value = digits
                .parse::<i64>()
                .map_err(|_| SyntaxError::new(line, column, "integer literal out of range"))?;
            Tok::Int(value)
        } else if c == '"' || c == '\'' {
            let body = read_quoted(&mut s, c, line, column)?;
            if c == '"' {
                Tok::Str(body)
            } else {
                Tok::Quoted(body)
            }
        } else if let Some(p) = PUNCT.iter().find(|p| s.starts_with(p)) {
            for _ in 0..p.chars().count() {
                s.bump();
            }
            Tok::Punct(p)
        } else {
            return Err(SyntaxError::new(
                line,
                column,
                format!("unexpected character {c:?}"),
            ));
        };
        out.push(Token { tok, line, column });
    }
}

fn skip_line(s: &mut Scanner<'_>) {
    while let Some(c) = s.bump() {
        if c == '\n' {
            break;
        }
    }
}

fn read_quoted(
    s: &mut Scanner<'_>,
    quote: char,
    line: usize,
    column: usize,
) -> Result<String, SyntaxError> {
    s.bump();
    let mut body = String::new();
    loop {
        match s.bump() {
            None => return Err(SyntaxError::new(line, column, "unterminated quoted text")),
            Some(c) if c == quote => return Ok(body),
            Some('\\') => match s.bump() {
                Some('n') => body.push('\n'),
                Some('t') => body.push('\t'),
                Some('r') => body.push('\r'),
                Some('\\') => body.push('\\'),
                Some(c) if c == quote => body.push(c),
                // unknown escapes are kept verbatim so regexes like `\d` read naturally
                Some(c) => {
                    body.push('\\');
                    body.push(c);
                }
                None => return Err(SyntaxError::new(line, column, "unterminated quoted text")),
            },
            Some(c) => body.push(c),
        }
    }
}

/// Cursor over a token vector with the helpers every reader needs.
pub struct TokenStream {
    tokens: Vec<Token>,
    pos: usize,
}

impl TokenStream {
    pub fn new(text: &str, comments: CommentStyle) -> Result<Self, SyntaxError> {
        Ok(TokenStream {
            tokens: tokenize(text, comments)?,
            pos: 0,
        })
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    pub fn peek_nth(&self, n: usize) -> &Token {
        let idx = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[idx]
    }

    pub fn next_token(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    pub fn at_eof(&self) -> bool {
        self.peek().tok == Tok::Eof
    }

    pub fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek().tok, Tok::Punct(q) if q == p)
    }

    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Ident(s) if s == kw)
    }

    pub fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.next_token();
            true
        } else {
            false
        }
    }

    pub fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.next_token();
            true
        } else {
            false
        }
    }

    pub fn expect_punct(&mut self, p: &str) -> Result<Token, SyntaxError> {
        if self.is_punct(p) {
            Ok(self.next_token())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    pub fn expect_keyword(&mut self, kw: &str) -> Result<Token, SyntaxError> {
        if self.is_keyword(kw) {
            Ok(self.next_token())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    pub fn expect_int(&mut self) -> Result<(i64, Token), SyntaxError> {
        match self.peek().tok {
            Tok::Int(v) => Ok((v, self.next_token())),
            _ => Err(self.unexpected("an integer")),
        }
    }

    pub fn expect_string(&mut self) -> Result<(String, Token), SyntaxError> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                Ok((s, self.next_token()))
            }
            _ => Err(self.unexpected("a string literal")),
        }
    }

    /// Error pointing at the current token.
    pub fn unexpected(&self, expected: &str) -> SyntaxError {
        let t = self.peek();
        SyntaxError::new(
            t.line,
            t.column,
            format!("expected {expected}, found {}", t.tok),
        )
    }

    pub fn error_here(&self, message: impl Into<String>) -> SyntaxError {
        let t = self.peek();
        SyntaxError::new(t.line, t.column, message)
    }
}
