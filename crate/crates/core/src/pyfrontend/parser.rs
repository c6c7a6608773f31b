use std::collections::HashSet;

use super::lexer::{tokenize, PyToken, Tok};
use super::{AugOp, BinOp, Expr, FrontendError, FuncDef, Stmt};
use crate::physl::SourceSpan;

/// Python keywords outside the accepted subset, reported by name.
const UNSUPPORTED_KEYWORDS: &[&str] = &[
    "for", "in", "import", "from", "class", "lambda", "try", "except", "finally", "with", "yield",
    "break", "continue", "pass", "global", "nonlocal", "del", "and", "or", "not", "is", "assert",
    "raise", "async", "await", "as",
];

struct Parser {
    tokens: Vec<PyToken>,
    pos: usize,
}

type PResult<T> = Result<T, FrontendError>;

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Name(n) => format!("`{n}`"),
        Tok::Int(i) => format!("`{i}`"),
        Tok::Float(x) => format!("`{x:?}`"),
        Tok::Str(_) => "string literal".into(),
        Tok::Op(op) => format!("`{op}`"),
        Tok::Newline => "end of line".into(),
        Tok::Indent => "indent".into(),
        Tok::Dedent => "dedent".into(),
        Tok::Eof => "end of input".into(),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        self.tokens
            .get(self.pos + n)
            .map_or(&Tok::Eof, |t| &t.tok)
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn advance(&mut self) -> &PyToken {
        let tok = &self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn is_name(&self, name: &str) -> bool {
        matches!(self.peek(), Tok::Name(n) if n == name)
    }

    fn error(&self, expected: &str) -> FrontendError {
        let tok = &self.tokens[self.pos];
        if let Tok::Name(n) = &tok.tok {
            if UNSUPPORTED_KEYWORDS.contains(&n.as_str()) {
                return self.unsupported(n);
            }
        }
        if let Tok::Op(op @ ("**" | "//" | "%" | "**=" | "//=" | "%=" | "@=" | "{" | "&" | "|" | "^" | "~" | ";")) =
            &tok.tok
        {
            return self.unsupported(&format!("operator {op}"));
        }
        FrontendError::Parse {
            span: tok.span,
            expected: expected.to_string(),
            found: describe(&tok.tok),
        }
    }

    fn unsupported(&self, construct: &str) -> FrontendError {
        FrontendError::Unsupported {
            span: self.span(),
            construct: construct.to_string(),
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<SourceSpan> {
        if self.is_op(op) {
            Ok(self.advance().span)
        } else {
            Err(self.error(&format!("`{op}`")))
        }
    }

    fn expect_name(&mut self) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Name(n) if !is_keyword(&n) => {
                let span = self.advance().span;
                Ok((n, span))
            }
            _ => Err(self.error("a name")),
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.peek() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof | Tok::Dedent => Ok(()),
            _ => Err(self.error("end of line")),
        }
    }

    fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.advance();
        }
    }

    fn funcdef(&mut self) -> PResult<FuncDef> {
        let start = self.span();
        self.advance(); // def
        let (name, _) = self.expect_name()?;
        self.expect_op("(")?;
        let mut params = Vec::new();
        if !self.is_op(")") {
            loop {
                let (p, pspan) = self.expect_name()?;
                if self.is_op("=") {
                    return Err(self.unsupported("default arguments"));
                }
                if params.contains(&p) {
                    return Err(FrontendError::Parse {
                        span: pspan,
                        expected: "distinct parameter names".into(),
                        found: format!("duplicate `{p}`"),
                    });
                }
                params.push(p);
                if self.is_op(",") {
                    self.advance();
                    continue;
                }
                break;
            }
        }
        if self.is_op("*") || self.is_op("**") {
            return Err(self.unsupported("variadic parameters"));
        }
        self.expect_op(")")?;
        if self.is_op("->") {
            return Err(self.unsupported("return annotations"));
        }
        let body = self.block()?;
        Ok(FuncDef {
            name,
            params,
            span: start.to(self.prev_span()),
            body,
        })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_op(":")?;
        if *self.peek() != Tok::Newline {
            return Err(self.error("newline after `:`"));
        }
        self.advance();
        if *self.peek() != Tok::Indent {
            return Err(FrontendError::Indentation {
                span: self.span(),
                message: "expected an indented block".into(),
            });
        }
        self.advance();
        let mut body = Vec::new();
        loop {
            self.skip_newlines();
            match self.peek() {
                Tok::Dedent => {
                    self.advance();
                    break;
                }
                Tok::Eof => break,
                Tok::Indent => {
                    return Err(FrontendError::Indentation {
                        span: self.span(),
                        message: "unexpected indent".into(),
                    })
                }
                _ => body.push(self.stmt()?),
            }
        }
        Ok(body)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.span();
        if let Tok::Name(kw) = self.peek().clone() {
            match kw.as_str() {
                "def" => return Err(self.unsupported("nested def")),
                "while" => {
                    self.advance();
                    let cond = self.expr()?;
                    let body = self.block()?;
                    return Ok(Stmt::While {
                        cond,
                        body,
                        span: start.to(self.prev_span()),
                    });
                }
                "if" => return self.if_stmt(),
                "elif" | "else" => return Err(self.error("a statement")),
                "return" => {
                    self.advance();
                    if matches!(self.peek(), Tok::Newline | Tok::Eof | Tok::Dedent) {
                        return Err(self.error("a return value"));
                    }
                    let value = self.expr()?;
                    self.no_tuple()?;
                    self.expect_newline()?;
                    let span = start.to(value.span());
                    return Ok(Stmt::Return(value, span));
                }
                kw if UNSUPPORTED_KEYWORDS.contains(&kw) => return Err(self.unsupported(kw)),
                _ => {}
            }
        }
        let target = self.expr()?;
        self.no_tuple()?;
        let aug = match self.peek() {
            Tok::Op("+=") => Some(AugOp::Add),
            Tok::Op("-=") => Some(AugOp::Sub),
            Tok::Op("*=") => Some(AugOp::Mul),
            Tok::Op("/=") => Some(AugOp::Div),
            _ => None,
        };
        let stmt = if let Some(op) = aug {
            self.advance();
            let Expr::Name(name, _) = target else {
                return Err(FrontendError::Unsupported {
                    span: target.span(),
                    construct: "augmented assignment to a non-name target".into(),
                });
            };
            let value = self.expr()?;
            Stmt::AugAssign {
                name,
                op,
                span: start.to(value.span()),
                value,
            }
        } else if self.is_op("=") {
            self.advance();
            let value = self.expr()?;
            self.no_tuple()?;
            if self.is_op("=") {
                return Err(self.unsupported("chained assignment"));
            }
            let span = start.to(value.span());
            match target {
                Expr::Name(name, _) => Stmt::Assign {
                    name,
                    value,
                    first_binding: false,
                    span,
                },
                Expr::Index { target, index, .. } => match *target {
                    Expr::Name(name, _) => Stmt::AssignRow {
                        name,
                        index: *index,
                        value,
                        span,
                    },
                    other => {
                        return Err(FrontendError::Unsupported {
                            span: other.span(),
                            construct: "row assignment to a non-name target".into(),
                        })
                    }
                },
                other => {
                    return Err(FrontendError::Unsupported {
                        span: other.span(),
                        construct: "assignment target".into(),
                    })
                }
            }
        } else {
            Stmt::Expr(target.clone(), target.span())
        };
        self.expect_newline()?;
        Ok(stmt)
    }

    fn no_tuple(&self) -> PResult<()> {
        if self.is_op(",") {
            Err(self.unsupported("tuple"))
        } else {
            Ok(())
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.span();
        self.advance(); // if
        let mut arms = Vec::new();
        let cond = self.expr()?;
        arms.push((cond, self.block()?));
        let mut else_body = None;
        loop {
            self.skip_newlines();
            if self.is_name("elif") {
                self.advance();
                let cond = self.expr()?;
                arms.push((cond, self.block()?));
            } else if self.is_name("else") {
                self.advance();
                else_body = Some(self.block()?);
                break;
            } else {
                break;
            }
        }
        Ok(Stmt::If {
            arms,
            else_body,
            span: start.to(self.prev_span()),
        })
    }

    fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let Some(op) = self.comparison_op() else {
            return Ok(lhs);
        };
        self.advance();
        let rhs = self.additive()?;
        if self.comparison_op().is_some() {
            return Err(self.unsupported("chained comparison"));
        }
        let span = lhs.span().to(rhs.span());
        Ok(Expr::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
            span,
        })
    }

    fn comparison_op(&self) -> Option<BinOp> {
        match self.peek() {
            Tok::Op("<") => Some(BinOp::Lt),
            Tok::Op("<=") => Some(BinOp::Le),
            Tok::Op(">") => Some(BinOp::Gt),
            Tok::Op(">=") => Some(BinOp::Ge),
            Tok::Op("==") => Some(BinOp::Eq),
            Tok::Op("!=") => Some(BinOp::Ne),
            _ => None,
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Op("+") => BinOp::Add,
                Tok::Op("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            let span = lhs.span().to(rhs.span());
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                span,
            };
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op("*") => BinOp::Mul,
                Tok::Op("/") => BinOp::Div,
                Tok::Op("@") => BinOp::MatMul,
                Tok::Op(op @ ("%" | "//")) => {
                    return Err(self.unsupported(&format!("operator {op}")))
                }
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            let span = lhs.span().to(rhs.span());
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                span,
            };
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_op("-") {
            let start = self.advance().span;
            let operand = self.unary()?;
            let span = start.to(operand.span());
            return Ok(Expr::Neg(Box::new(operand), span));
        }
        if self.is_op("+") {
            return Err(self.unsupported("unary plus"));
        }
        let e = self.postfix()?;
        if self.is_op("**") {
            return Err(self.unsupported("operator **"));
        }
        Ok(e)
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            if self.is_op("(") {
                let callee = match &e {
                    Expr::Name(n, _) => n.clone(),
                    _ => return Err(self.unsupported("call of a computed expression")),
                };
                self.advance();
                let args = self.call_args()?;
                let span = e.span().to(self.prev_span());
                e = Expr::Call { callee, args, span };
            } else if self.is_op("[") {
                self.advance();
                let index = self.expr()?;
                if self.is_op(":") || self.is_op(",") {
                    return Err(self.unsupported("slicing"));
                }
                let close = self.expect_op("]")?;
                let span = e.span().to(close);
                e = Expr::Index {
                    target: Box::new(e),
                    index: Box::new(index),
                    span,
                };
            } else if self.is_op(".") {
                self.advance();
                let (attr, attr_span) = self.expect_name()?;
                e = match e {
                    Expr::Name(base, span) if base == "np" || base.starts_with("np.") => {
                        Expr::Name(format!("{base}.{attr}"), span.to(attr_span))
                    }
                    base if attr == "T" => {
                        let span = base.span().to(attr_span);
                        Expr::Transpose(Box::new(base), span)
                    }
                    base if attr == "shape" => {
                        self.expect_op("[")?;
                        let axis = self.expr()?;
                        let close = self.expect_op("]")?;
                        let span = base.span().to(close);
                        Expr::ShapeOf {
                            target: Box::new(base),
                            axis: Box::new(axis),
                            span,
                        }
                    }
                    _ => {
                        return Err(FrontendError::Unsupported {
                            span: attr_span,
                            construct: format!("attribute .{attr}"),
                        })
                    }
                };
            } else {
                break;
            }
        }
        if let Expr::Name(n, span) = &e {
            if n.starts_with("np.") || n == "np" {
                return Err(FrontendError::Unsupported {
                    span: *span,
                    construct: format!("namespace value {n}"),
                });
            }
        }
        Ok(e)
    }

    fn call_args(&mut self) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if !self.is_op(")") {
            loop {
                if matches!(self.peek(), Tok::Name(_)) && matches!(self.peek_at(1), Tok::Op("=")) {
                    return Err(self.unsupported("keyword arguments"));
                }
                if self.is_op("*") || self.is_op("**") {
                    return Err(self.unsupported("argument unpacking"));
                }
                args.push(self.expr()?);
                if self.is_op(",") {
                    self.advance();
                    if self.is_op(")") {
                        break;
                    }
                    continue;
                }
                break;
            }
        }
        self.expect_op(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.advance();
                Ok(Expr::Int(i, span))
            }
            Tok::Float(x) => {
                self.advance();
                Ok(Expr::Float(x, span))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Str(s, span))
            }
            Tok::Name(n) => match n.as_str() {
                "True" | "False" => {
                    self.advance();
                    Ok(Expr::Bool(n == "True", span))
                }
                "None" => {
                    self.advance();
                    Ok(Expr::None(span))
                }
                "if" => Err(self.unsupported("conditional expression")),
                kw if is_keyword(kw) => Err(self.error("an expression")),
                _ => {
                    self.advance();
                    Ok(Expr::Name(n, span))
                }
            },
            Tok::Op("(") => {
                self.advance();
                let inner = self.expr()?;
                if self.is_op(",") {
                    return Err(self.unsupported("tuple"));
                }
                self.expect_op(")")?;
                Ok(inner)
            }
            Tok::Op("[") => {
                self.advance();
                let mut items = Vec::new();
                if !self.is_op("]") {
                    loop {
                        items.push(self.expr()?);
                        if self.is_name("for") {
                            return Err(self.unsupported("list comprehension"));
                        }
                        if self.is_op(",") {
                            self.advance();
                            if self.is_op("]") {
                                break;
                            }
                            continue;
                        }
                        break;
                    }
                }
                let close = self.expect_op("]")?;
                Ok(Expr::List(items, span.to(close)))
            }
            _ => Err(self.error("an expression")),
        }
    }
}

fn is_keyword(name: &str) -> bool {
    UNSUPPORTED_KEYWORDS.contains(&name)
        || matches!(
            name,
            "def" | "while" | "if" | "elif" | "else" | "return" | "True" | "False" | "None"
        )
}

/// Parses a PyLite file into its function definitions and resolves
/// first bindings. At least one `def` is required.
pub fn parse_pylite(source: &str) -> Result<Vec<FuncDef>, FrontendError> {
    let mut p = Parser {
        tokens: tokenize(source)?,
        pos: 0,
    };
    let mut funcs = Vec::new();
    loop {
        p.skip_newlines();
        match p.peek() {
            Tok::Eof => break,
            Tok::Name(n) if n == "def" => funcs.push(p.funcdef()?),
            Tok::Indent => {
                return Err(FrontendError::Indentation {
                    span: p.span(),
                    message: "unexpected indent".into(),
                })
            }
            Tok::Name(n) if UNSUPPORTED_KEYWORDS.contains(&n.as_str()) => {
                return Err(p.unsupported(&n.clone()))
            }
            _ => return Err(p.unsupported("top-level statement outside a def")),
        }
    }
    if funcs.is_empty() {
        return Err(FrontendError::Parse {
            span: p.span(),
            expected: "at least one `def`".into(),
            found: "end of input".into(),
        });
    }
    let mut seen = HashSet::new();
    for f in &mut funcs {
        if !seen.insert(f.name.clone()) {
            return Err(FrontendError::Parse {
                span: f.span,
                expected: "distinct function names".into(),
                found: format!("second definition of `{}`", f.name),
            });
        }
        resolve_bindings(f)?;
    }
    Ok(funcs)
}

/// Marks first bindings and rejects reads of names that are not bound in an
/// enclosing scope. Each block (function body, loop body, `if` arm) opens a
/// scope; a name first assigned inside a block is local to it.
fn resolve_bindings(f: &mut FuncDef) -> Result<(), FrontendError> {
    let mut scopes = vec![f.params.iter().cloned().collect::<HashSet<_>>()];
    bind_block(&mut f.body, &mut scopes)
}

fn visible(scopes: &[HashSet<String>], name: &str) -> bool {
    scopes.iter().any(|s| s.contains(name))
}

fn require(scopes: &[HashSet<String>], name: &str, span: SourceSpan) -> PResult<()> {
    if visible(scopes, name) {
        Ok(())
    } else {
        Err(FrontendError::UnboundName {
            span,
            name: name.to_string(),
        })
    }
}

fn check_reads(e: &Expr, scopes: &[HashSet<String>]) -> PResult<()> {
    match e {
        Expr::Name(n, span) => require(scopes, n, *span),
        Expr::Int(..) | Expr::Float(..) | Expr::Str(..) | Expr::Bool(..) | Expr::None(_) => Ok(()),
        Expr::Binary { lhs, rhs, .. } => {
            check_reads(lhs, scopes)?;
            check_reads(rhs, scopes)
        }
        Expr::Neg(inner, _) | Expr::Transpose(inner, _) => check_reads(inner, scopes),
        Expr::Call { args, .. } | Expr::List(args, _) => {
            args.iter().try_for_each(|a| check_reads(a, scopes))
        }
        Expr::ShapeOf { target, axis, .. } => {
            check_reads(target, scopes)?;
            check_reads(axis, scopes)
        }
        Expr::Index { target, index, .. } => {
            check_reads(target, scopes)?;
            check_reads(index, scopes)
        }
    }
}

fn bind_block(stmts: &mut [Stmt], scopes: &mut Vec<HashSet<String>>) -> PResult<()> {
    for stmt in stmts {
        match stmt {
            Stmt::Assign {
                name,
                value,
                first_binding,
                ..
            } => {
                check_reads(value, scopes)?;
                *first_binding = !visible(scopes, name);
                if *first_binding {
                    scopes.last_mut().unwrap().insert(name.clone());
                }
            }
            Stmt::AssignRow {
                name,
                index,
                value,
                span,
            } => {
                require(scopes, name, *span)?;
                check_reads(index, scopes)?;
                check_reads(value, scopes)?;
            }
            Stmt::AugAssign {
                name, value, span, ..
            } => {
                require(scopes, name, *span)?;
                check_reads(value, scopes)?;
            }
            Stmt::While { cond, body, .. } => {
                check_reads(cond, scopes)?;
                scopes.push(HashSet::new());
                bind_block(body, scopes)?;
                scopes.pop();
            }
            Stmt::If {
                arms, else_body, ..
            } => {
                for (cond, body) in arms.iter_mut() {
                    check_reads(cond, scopes)?;
                    scopes.push(HashSet::new());
                    bind_block(body, scopes)?;
                    scopes.pop();
                }
                if let Some(body) = else_body {
                    scopes.push(HashSet::new());
                    bind_block(body, scopes)?;
                    scopes.pop();
                }
            }
            Stmt::Return(e, _) | Stmt::Expr(e, _) => check_reads(e, scopes)?,
        }
    }
    Ok(())
}
