use std::fmt;

use super::diagnostic::Diagnostic;

/// Position of a token or syntax node in the source text. Lines and columns
/// are 1-based; columns count characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub offset: usize,
    pub len: usize,
    pub line: usize,
    pub col: usize,
}

impl Span {
    /// Smallest span covering `self` and `other` (line/col taken from the
    /// earlier one).
    pub fn to(self, other: Span) -> Span {
        let (first, _) = if self.offset <= other.offset { (self, other) } else { (other, self) };
        let end = (self.offset + self.len).max(other.offset + other.len);
        Span {
            len: end - first.offset,
            ..first
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Str(String),
    /// Real literal; the lexeme is kept for integer checks.
    Number(f64),
    /// Imaginary literal such as `2i` or `0.5i`.
    Imag(f64),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Colon,
    Eq,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Eof,
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Str(s) => write!(f, "string \"{s}\""),
            TokenKind::Number(_) => write!(f, "number"),
            TokenKind::Imag(_) => write!(f, "imaginary number"),
            TokenKind::LBrace => write!(f, "`{{`"),
            TokenKind::RBrace => write!(f, "`}}`"),
            TokenKind::LBracket => write!(f, "`[`"),
            TokenKind::RBracket => write!(f, "`]`"),
            TokenKind::LParen => write!(f, "`(`"),
            TokenKind::RParen => write!(f, "`)`"),
            TokenKind::Comma => write!(f, "`,`"),
            TokenKind::Colon => write!(f, "`:`"),
            TokenKind::Eq => write!(f, "`=`"),
            TokenKind::Arrow => write!(f, "`->`"),
            TokenKind::Plus => write!(f, "`+`"),
            TokenKind::Minus => write!(f, "`-`"),
            TokenKind::Star => write!(f, "`*`"),
            TokenKind::Slash => write!(f, "`/`"),
            TokenKind::Eof => write!(f, "end of file"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
    pub lexeme: String,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.chars.clone();
        it.next();
        it.next().map(|(_, c)| c)
    }

    fn offset(&mut self) -> usize {
        self.chars.peek().map_or(self.src.len(), |&(i, _)| i)
    }

    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `src` into tokens. Lexical errors are reported and the offending
/// character skipped, so a token stream is always produced.
pub fn tokenize(src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        chars: src.char_indices().peekable(),
        src,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    loop {
        // Whitespace and `#` comments.
        while let Some(c) = cur.peek() {
            if c.is_whitespace() {
                cur.bump();
            } else if c == '#' {
                while let Some(c) = cur.peek() {
                    if c == '\n' {
                        break;
                    }
                    cur.bump();
                }
            } else {
                break;
            }
        }
        let start = cur.offset();
        let (line, col) = (cur.line, cur.col);
        let Some(c) = cur.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                span: Span {
                    offset: src.len(),
                    len: 0,
                    line,
                    col,
                },
                lexeme: String::new(),
            });
            break;
        };

        let kind = if is_ident_start(c) {
            while cur.peek().is_some_and(is_ident_continue) {
                cur.bump();
            }
            Some(TokenKind::Ident(src[start..cur.offset()].to_string()))
        } else if c.is_ascii_digit() || (c == '.' && cur.peek2().is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur, start, &mut diags, line, col)
        } else if c == '"' {
            lex_string(&mut cur, &mut diags, line, col, start)
        } else {
            cur.bump();
            match c {
                '{' => Some(TokenKind::LBrace),
                '}' => Some(TokenKind::RBrace),
                '[' => Some(TokenKind::LBracket),
                ']' => Some(TokenKind::RBracket),
                '(' => Some(TokenKind::LParen),
                ')' => Some(TokenKind::RParen),
                ',' => Some(TokenKind::Comma),
                ':' => Some(TokenKind::Colon),
                '=' => Some(TokenKind::Eq),
                '+' => Some(TokenKind::Plus),
                '*' => Some(TokenKind::Star),
                '/' => Some(TokenKind::Slash),
                '-' => {
                    if cur.peek() == Some('>') {
                        cur.bump();
                        Some(TokenKind::Arrow)
                    } else {
                        Some(TokenKind::Minus)
                    }
                }
                other => {
                    diags.push(Diagnostic::new(
                        Span {
                            offset: start,
                            len: other.len_utf8(),
                            line,
                            col,
                        },
                        format!("unexpected character `{other}`"),
                        other.to_string(),
                    ));
                    None
                }
            }
        };
        let end = cur.offset();
        if let Some(kind) = kind {
            tokens.push(Token {
                kind,
                span: Span {
                    offset: start,
                    len: end - start,
                    line,
                    col,
                },
                lexeme: src[start..end].to_string(),
            });
        }
    }
    (tokens, diags)
}

fn lex_number(
    cur: &mut Cursor<'_>,
    start: usize,
    diags: &mut Vec<Diagnostic>,
    line: usize,
    col: usize,
) -> Option<TokenKind> {
    while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
        cur.bump();
    }
    if cur.peek() == Some('.') {
        cur.bump();
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let next = cur.peek2();
        let signed_digit = matches!(next, Some('+' | '-')) && {
            let mut it = cur.chars.clone();
            it.next();
            it.next();
            it.next().is_some_and(|(_, c)| c.is_ascii_digit())
        };
        if next.is_some_and(|c| c.is_ascii_digit()) || signed_digit {
            cur.bump();
            if matches!(cur.peek(), Some('+' | '-')) {
                cur.bump();
            }
            while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
                cur.bump();
            }
        }
    }
    let text = &cur.src[start..cur.offset()];
    let value: f64 = match text.parse() {
        Ok(v) => v,
        Err(_) => {
            diags.push(Diagnostic::new(
                Span {
                    offset: start,
                    len: text.len(),
                    line,
                    col,
                },
                format!("malformed number `{text}`"),
                text.to_string(),
            ));
            return None;
        }
    };
    if cur.peek() == Some('i') && !cur.peek2().is_some_and(is_ident_continue) {
        cur.bump();
        Some(TokenKind::Imag(value))
    } else if cur.peek().is_some_and(is_ident_continue) {
        // `2x` and similar: consume the junk so it reports once.
        while cur.peek().is_some_and(is_ident_continue) {
            cur.bump();
        }
        let text = &cur.src[start..cur.offset()];
        diags.push(Diagnostic::new(
            Span {
                offset: start,
                len: text.len(),
                line,
                col,
            },
            format!("malformed number `{text}`"),
            text.to_string(),
        ));
        None
    } else {
        Some(TokenKind::Number(value))
    }
}

fn lex_string(
    cur: &mut Cursor<'_>,
    diags: &mut Vec<Diagnostic>,
    line: usize,
    col: usize,
    start: usize,
) -> Option<TokenKind> {
    cur.bump();
    let mut value = String::new();
    loop {
        match cur.peek() {
            None | Some('\n') => {
                let end = cur.offset();
                diags.push(Diagnostic::new(
                    Span {
                        offset: start,
                        len: end - start,
                        line,
                        col,
                    },
                    "unterminated string".to_string(),
                    cur.src[start..end].to_string(),
                ));
                return None;
            }
            Some('"') => {
                cur.bump();
                return Some(TokenKind::Str(value));
            }
            Some('\\') => {
                cur.bump();
                match cur.bump() {
                    Some(c @ ('"' | '\\')) => value.push(c),
                    Some(other) => {
                        value.push('\\');
                        value.push(other);
                    }
                    None => {}
                }
            }
            Some(c) => {
                cur.bump();
                value.push(c);
            }
        }
    }
}
