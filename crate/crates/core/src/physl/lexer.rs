use super::{SourceSpan, SyntaxError};

#[derive(Clone, Debug, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    True,
    False,
    Nil,
    LParen,
    RParen,
    Comma,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(name) => format!("identifier `{name}`"),
            TokenKind::Int(i) => format!("integer `{i}`"),
            TokenKind::Float(x) => format!("float `{x:?}`"),
            TokenKind::Str(_) => "string literal".to_string(),
            TokenKind::True => "`true`".to_string(),
            TokenKind::False => "`false`".to_string(),
            TokenKind::Nil => "`nil`".to_string(),
            TokenKind::LParen => "`(`".to_string(),
            TokenKind::RParen => "`)`".to_string(),
            TokenKind::Comma => "`,`".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, start: (usize, u32, u32)) -> SourceSpan {
        SourceSpan::new(start.1, start.2, start.0, self.pos - start.0)
    }

    fn mark(&self) -> (usize, u32, u32) {
        (self.pos, self.line, self.col)
    }
}

/// Tokenizes PhySL source text.
pub fn lex(source: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut cur = Cursor {
        src: source,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    while let Some(c) = cur.peek() {
        let start = cur.mark();
        let kind = match c {
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '/' if cur.peek_at(1) == Some('/') => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
                continue;
            }
            '(' => {
                cur.bump();
                TokenKind::LParen
            }
            ')' => {
                cur.bump();
                TokenKind::RParen
            }
            ',' => {
                cur.bump();
                TokenKind::Comma
            }
            '"' => lex_string(&mut cur, start)?,
            c if c.is_ascii_digit() => lex_number(&mut cur, start)?,
            '-' if cur.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => {
                lex_number(&mut cur, start)?
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while cur
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    cur.bump();
                }
                match &source[start.0..cur.pos] {
                    "true" => TokenKind::True,
                    "false" => TokenKind::False,
                    "nil" => TokenKind::Nil,
                    name => TokenKind::Ident(name.to_string()),
                }
            }
            other => {
                cur.bump();
                return Err(SyntaxError::Lex {
                    span: cur.span_from(start),
                    message: format!("unexpected character {other:?}"),
                });
            }
        };
        tokens.push(Token {
            kind,
            span: cur.span_from(start),
        });
    }
    Ok(tokens)
}

fn lex_string(cur: &mut Cursor<'_>, start: (usize, u32, u32)) -> Result<TokenKind, SyntaxError> {
    cur.bump();
    let mut text = String::new();
    loop {
        match cur.bump() {
            None => {
                return Err(SyntaxError::Lex {
                    span: cur.span_from(start),
                    message: "unterminated string literal".to_string(),
                })
            }
            Some('"') => return Ok(TokenKind::Str(text)),
            Some('\\') => {
                let escaped = match cur.bump() {
                    Some('"') => '"',
                    Some('\\') => '\\',
                    Some('n') => '\n',
                    Some('t') => '\t',
                    other => {
                        return Err(SyntaxError::Lex {
                            span: cur.span_from(start),
                            message: format!("invalid escape sequence {other:?}"),
                        })
                    }
                };
                text.push(escaped);
            }
            Some(c) => text.push(c),
        }
    }
}

fn lex_number(cur: &mut Cursor<'_>, start: (usize, u32, u32)) -> Result<TokenKind, SyntaxError> {
    if cur.peek() == Some('-') {
        cur.bump();
    }
    let digits = |cur: &mut Cursor<'_>| {
        while cur.peek().is_some_and(|c| c.is_ascii_digit()) {
            cur.bump();
        }
    };
    digits(cur);
    let mut is_float = false;
    if cur.peek() == Some('.') {
        is_float = true;
        cur.bump();
        digits(cur);
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let sign = matches!(cur.peek_at(1), Some('+' | '-'));
        let digit_at = if sign { 2 } else { 1 };
        if cur.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
            is_float = true;
            for _ in 0..digit_at {
                cur.bump();
            }
            digits(cur);
        }
    }
    let text = &cur.src[start.0..cur.pos];
    if is_float {
        text.parse::<f64>().map(TokenKind::Float).map_err(|_| SyntaxError::Lex {
            span: cur.span_from(start),
            message: format!("invalid float literal {text}"),
        })
    } else {
        text.parse::<i64>().map(TokenKind::Int).map_err(|_| SyntaxError::Lex {
            span: cur.span_from(start),
            message: format!("integer literal {text} out of range"),
        })
    }
}
