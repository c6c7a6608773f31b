//! PyLite: a restricted Python-style surface language lowered to PhySL.
//!
//! A PyLite file is a sequence of top-level `def`s. Bodies may use
//! assignment, augmented assignment, row assignment `x[i] = v`, `while`,
//! `if/elif/else`, a terminal `return`, and expression statements. The `np.`
//! prefix is a fixed pseudo-namespace mapped onto primitives by
//! [`LOWERING_TABLE`].

mod lexer;
mod lower;
mod parser;

use thiserror::Error;

use crate::physl::{self, Ast, SourceSpan};

pub use lexer::{tokenize, PyToken, Tok};
pub use lower::{lower, lower_program, LOWERING_TABLE};
pub use parser::parse_pylite;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum FrontendError {
    #[error("ParseError at {span}: expected {expected}, found {found}")]
    Parse {
        span: SourceSpan,
        expected: String,
        found: String,
    },
    #[error("IndentationError at {span}: {message}")]
    Indentation { span: SourceSpan, message: String },
    #[error("UnsupportedSyntax at {span}: {construct}")]
    Unsupported { span: SourceSpan, construct: String },
    #[error("UnknownCall at {span}: {name}")]
    UnknownCall { span: SourceSpan, name: String },
    #[error("ReturnNotTerminal at {span}: return must be the final statement")]
    ReturnNotTerminal { span: SourceSpan },
    #[error("UnboundName at {span}: `{name}` is read before it is assigned")]
    UnboundName { span: SourceSpan, name: String },
}

impl FrontendError {
    pub fn span(&self) -> SourceSpan {
        match self {
            FrontendError::Parse { span, .. }
            | FrontendError::Indentation { span, .. }
            | FrontendError::Unsupported { span, .. }
            | FrontendError::UnknownCall { span, .. }
            | FrontendError::ReturnNotTerminal { span }
            | FrontendError::UnboundName { span, .. } => *span,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FrontendError::Parse { .. } => "ParseError",
            FrontendError::Indentation { .. } => "IndentationError",
            FrontendError::Unsupported { .. } => "UnsupportedSyntax",
            FrontendError::UnknownCall { .. } => "UnknownCall",
            FrontendError::ReturnNotTerminal { .. } => "ReturnNotTerminal",
            FrontendError::UnboundName { .. } => "UnboundName",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    MatMul,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    /// PhySL head the operator lowers to.
    pub fn head(self) -> &'static str {
        match self {
            BinOp::Add => "add",
            BinOp::Sub => "sub",
            BinOp::Mul => "mul",
            BinOp::Div => "div",
            BinOp::MatMul => "dot",
            BinOp::Lt => "lt",
            BinOp::Le => "le",
            BinOp::Gt => "gt",
            BinOp::Ge => "ge",
            BinOp::Eq => "eq",
            BinOp::Ne => "ne",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Name(String, SourceSpan),
    Int(i64, SourceSpan),
    Float(f64, SourceSpan),
    Str(String, SourceSpan),
    Bool(bool, SourceSpan),
    None(SourceSpan),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        span: SourceSpan,
    },
    Neg(Box<Expr>, SourceSpan),
    /// `callee` is a plain name (`fact`, `rand`) or an `np.` dotted path.
    Call {
        callee: String,
        args: Vec<Expr>,
        span: SourceSpan,
    },
    /// `x.T`
    Transpose(Box<Expr>, SourceSpan),
    /// `x.shape[k]`
    ShapeOf {
        target: Box<Expr>,
        axis: Box<Expr>,
        span: SourceSpan,
    },
    /// `x[i]`
    Index {
        target: Box<Expr>,
        index: Box<Expr>,
        span: SourceSpan,
    },
    List(Vec<Expr>, SourceSpan),
}

impl Expr {
    pub fn span(&self) -> SourceSpan {
        match self {
            Expr::Name(_, s)
            | Expr::Int(_, s)
            | Expr::Float(_, s)
            | Expr::Str(_, s)
            | Expr::Bool(_, s)
            | Expr::None(s)
            | Expr::Neg(_, s)
            | Expr::Transpose(_, s)
            | Expr::List(_, s) => *s,
            Expr::Binary { span, .. }
            | Expr::Call { span, .. }
            | Expr::ShapeOf { span, .. }
            | Expr::Index { span, .. } => *span,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AugOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl AugOp {
    pub fn head(self) -> &'static str {
        match self {
            AugOp::Add => "add",
            AugOp::Sub => "sub",
            AugOp::Mul => "mul",
            AugOp::Div => "div",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stmt {
    /// `first_binding` is true for the statement that introduces `name` in
    /// its scope.
    Assign {
        name: String,
        value: Expr,
        first_binding: bool,
        span: SourceSpan,
    },
    AssignRow {
        name: String,
        index: Expr,
        value: Expr,
        span: SourceSpan,
    },
    AugAssign {
        name: String,
        op: AugOp,
        value: Expr,
        span: SourceSpan,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
        span: SourceSpan,
    },
    If {
        arms: Vec<(Expr, Vec<Stmt>)>,
        else_body: Option<Vec<Stmt>>,
        span: SourceSpan,
    },
    Return(Expr, SourceSpan),
    Expr(Expr, SourceSpan),
}

impl Stmt {
    pub fn span(&self) -> SourceSpan {
        match self {
            Stmt::Assign { span, .. }
            | Stmt::AssignRow { span, .. }
            | Stmt::AugAssign { span, .. }
            | Stmt::While { span, .. }
            | Stmt::If { span, .. }
            | Stmt::Return(_, span)
            | Stmt::Expr(_, span) => *span,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuncDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub span: SourceSpan,
}

/// Parses, lowers and pretty-prints every function of a PyLite file as one
/// top-level PhySL `block(...)`, followed by a newline.
pub fn transpile(source: &str) -> Result<String, FrontendError> {
    let ast = transpile_ast(source)?;
    let mut text = physl::pretty(&ast);
    text.push('\n');
    Ok(text)
}

/// Like [`transpile`] but returns the PhySL Ast, keeping PyLite spans.
pub fn transpile_ast(source: &str) -> Result<Ast, FrontendError> {
    let funcs = parse_pylite(source)?;
    lower_program(&funcs)
}
