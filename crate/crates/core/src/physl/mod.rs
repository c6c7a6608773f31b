//! PhySL: the textual intermediate representation.
//!
//! ```text
//! program := expr
//! expr    := apply | identifier | literal
//! apply   := identifier '(' [expr (',' expr)*] ')'
//! ```
//!
//! Literals are integers, floats (a decimal point or exponent makes a float,
//! a leading `-` directly before a digit is part of the literal),
//! double-quoted strings with `\" \\ \n \t` escapes, `true`, `false` and
//! `nil`. `//` starts a comment that runs to the end of the line.

mod ast;
mod lexer;

use std::fmt::Write as _;

use thiserror::Error;

pub use ast::{Ast, SourceSpan};
pub use lexer::{lex, Token, TokenKind};

/// Maximum nesting depth accepted by the parser.
pub const MAX_NESTING: usize = 512;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SyntaxError {
    #[error("LexError at {span}: {message}")]
    Lex { span: SourceSpan, message: String },
    #[error("ParseError at {span}: expected {expected}, found {found}")]
    Parse {
        span: SourceSpan,
        expected: String,
        found: String,
    },
}

impl SyntaxError {
    pub fn span(&self) -> SourceSpan {
        match self {
            SyntaxError::Lex { span, .. } | SyntaxError::Parse { span, .. } => *span,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SyntaxError::Lex { .. } => "LexError",
            SyntaxError::Parse { .. } => "ParseError",
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    eof: SourceSpan,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn error(&self, expected: &str) -> SyntaxError {
        let (span, found) = match self.peek() {
            Some(tok) => (tok.span, tok.kind.describe()),
            None => (self.eof, "end of input".to_string()),
        };
        SyntaxError::Parse {
            span,
            expected: expected.to_string(),
            found,
        }
    }

    fn expect(&mut self, kind: &TokenKind, expected: &str) -> Result<SourceSpan, SyntaxError> {
        match self.peek() {
            Some(tok) if &tok.kind == kind => {
                self.pos += 1;
                Ok(self.tokens[self.pos - 1].span)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn expr(&mut self, depth: usize) -> Result<Ast, SyntaxError> {
        if depth > MAX_NESTING {
            return Err(self.error("shallower nesting"));
        }
        let Some(tok) = self.peek().cloned() else {
            return Err(self.error("expression"));
        };
        self.pos += 1;
        let span = tok.span;
        Ok(match tok.kind {
            TokenKind::Int(i) => Ast::LitInt(i, span),
            TokenKind::Float(x) => Ast::LitFloat(x, span),
            TokenKind::Str(s) => Ast::LitStr(s, span),
            TokenKind::True => Ast::LitBool(true, span),
            TokenKind::False => Ast::LitBool(false, span),
            TokenKind::Nil => Ast::LitNil(span),
            TokenKind::Ident(name) => {
                if self.peek().map(|t| &t.kind) != Some(&TokenKind::LParen) {
                    return Ok(Ast::Identifier(name, span));
                }
                self.pos += 1;
                let mut args = Vec::new();
                if self.peek().map(|t| &t.kind) != Some(&TokenKind::RParen) {
                    loop {
                        args.push(self.expr(depth + 1)?);
                        if self.peek().map(|t| &t.kind) == Some(&TokenKind::Comma) {
                            self.pos += 1;
                            continue;
                        }
                        break;
                    }
                }
                let close = self.expect(&TokenKind::RParen, "`,` or `)`")?;
                Ast::Apply {
                    head: name,
                    args,
                    span: span.to(close),
                }
            }
            TokenKind::LParen | TokenKind::RParen | TokenKind::Comma => {
                self.pos -= 1;
                return Err(self.error("expression"));
            }
        })
    }
}

/// Parses one PhySL expression; trailing input is an error.
pub fn parse(source: &str) -> Result<Ast, SyntaxError> {
    let tokens = lex(source)?;
    let (line, col) = source.chars().fold((1u32, 1u32), |(l, c), ch| {
        if ch == '\n' {
            (l + 1, 1)
        } else {
            (l, c + 1)
        }
    });
    let mut parser = Parser {
        tokens,
        pos: 0,
        eof: SourceSpan::new(line, col, source.len(), 0),
    };
    let root = parser.expr(0)?;
    if parser.peek().is_some() {
        return Err(parser.error("end of input"));
    }
    Ok(root)
}

/// Canonical single-line text of an Ast.
pub fn pretty(ast: &Ast) -> String {
    let mut out = String::new();
    write_ast(&mut out, ast);
    out
}

fn write_ast(out: &mut String, ast: &Ast) {
    match ast {
        Ast::Identifier(name, _) => out.push_str(name),
        Ast::LitInt(i, _) => {
            let _ = write!(out, "{i}");
        }
        Ast::LitFloat(x, _) => out.push_str(&crate::value::format_f64(*x)),
        Ast::LitStr(s, _) => {
            out.push('"');
            for c in s.chars() {
                match c {
                    '"' => out.push_str("\\\""),
                    '\\' => out.push_str("\\\\"),
                    '\n' => out.push_str("\\n"),
                    '\t' => out.push_str("\\t"),
                    c => out.push(c),
                }
            }
            out.push('"');
        }
        Ast::LitBool(b, _) => out.push_str(if *b { "true" } else { "false" }),
        Ast::LitNil(_) => out.push_str("nil"),
        Ast::Apply { head, args, .. } => {
            out.push_str(head);
            out.push('(');
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_ast(out, arg);
            }
            out.push(')');
        }
    }
}
