use std::fmt;

/// Source location of a node: 1-based line and column of its first token,
/// plus the byte offset and byte length of the whole construct.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct SourceSpan {
    pub line: u32,
    pub col: u32,
    pub offset: usize,
    pub byte_len: usize,
}

impl SourceSpan {
    pub fn new(line: u32, col: u32, offset: usize, byte_len: usize) -> Self {
        SourceSpan {
            line,
            col,
            offset,
            byte_len,
        }
    }

    /// Span from the start of `self` to the end of `end`.
    pub fn to(self, end: SourceSpan) -> SourceSpan {
        SourceSpan {
            byte_len: (end.offset + end.byte_len).saturating_sub(self.offset),
            ..self
        }
    }

    pub fn end(&self) -> usize {
        self.offset + self.byte_len
    }

    pub fn contains(&self, other: &SourceSpan) -> bool {
        self.offset <= other.offset && other.end() <= self.end()
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A PhySL expression.
#[derive(Clone, Debug, PartialEq)]
pub enum Ast {
    Identifier(String, SourceSpan),
    LitInt(i64, SourceSpan),
    LitFloat(f64, SourceSpan),
    LitStr(String, SourceSpan),
    LitBool(bool, SourceSpan),
    LitNil(SourceSpan),
    Apply {
        head: String,
        args: Vec<Ast>,
        span: SourceSpan,
    },
}

impl Ast {
    pub fn span(&self) -> SourceSpan {
        match self {
            Ast::Identifier(_, s)
            | Ast::LitInt(_, s)
            | Ast::LitFloat(_, s)
            | Ast::LitStr(_, s)
            | Ast::LitBool(_, s)
            | Ast::LitNil(s) => *s,
            Ast::Apply { span, .. } => *span,
        }
    }

    pub fn apply(head: impl Into<String>, args: Vec<Ast>, span: SourceSpan) -> Ast {
        Ast::Apply {
            head: head.into(),
            args,
            span,
        }
    }

    pub fn ident(name: impl Into<String>, span: SourceSpan) -> Ast {
        Ast::Identifier(name.into(), span)
    }

    /// `Some((head, args))` for applications.
    pub fn as_apply(&self) -> Option<(&str, &[Ast])> {
        match self {
            Ast::Apply { head, args, .. } => Some((head, args)),
            _ => None,
        }
    }

    pub fn as_ident(&self) -> Option<&str> {
        match self {
            Ast::Identifier(name, _) => Some(name),
            _ => None,
        }
    }

    /// Equality that ignores spans; floats compare by bit pattern.
    pub fn same_structure(&self, other: &Ast) -> bool {
        match (self, other) {
            (Ast::Identifier(a, _), Ast::Identifier(b, _)) => a == b,
            (Ast::LitInt(a, _), Ast::LitInt(b, _)) => a == b,
            (Ast::LitFloat(a, _), Ast::LitFloat(b, _)) => a.to_bits() == b.to_bits(),
            (Ast::LitStr(a, _), Ast::LitStr(b, _)) => a == b,
            (Ast::LitBool(a, _), Ast::LitBool(b, _)) => a == b,
            (Ast::LitNil(_), Ast::LitNil(_)) => true,
            (
                Ast::Apply {
                    head: h1, args: a1, ..
                },
                Ast::Apply {
                    head: h2, args: a2, ..
                },
            ) => h1 == h2 && a1.len() == a2.len() && a1.iter().zip(a2).all(|(x, y)| x.same_structure(y)),
            _ => false,
        }
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Ast::Apply { args, .. } => 1 + args.iter().map(Ast::size).sum::<usize>(),
            _ => 1,
        }
    }
}

impl fmt::Display for Ast {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::pretty(self))
    }
}
