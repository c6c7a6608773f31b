use super::{Expr, FrontendError, FuncDef, Stmt};
use crate::physl::{Ast, SourceSpan};

/// Surface calls and their PhySL heads. Calls to functions defined in the
/// same file keep their name; anything else is an [`FrontendError::UnknownCall`].
pub const LOWERING_TABLE: &[(&str, &str)] = &[
    ("np.dot", "dot"),
    ("np.transpose", "transpose"),
    ("np.exp", "exp"),
    ("np.log", "log"),
    ("np.linalg.solve", "solve"),
    ("np.identity", "identity"),
    ("np.zeros", "zeros"),
    ("np.diag", "diag"),
    ("np.sum", "sum"),
    ("rand", "random"),
];

const SIDE_EFFECT_HEADS: &[&str] = &["define", "store", "store_row"];

struct Lowerer<'a> {
    functions: &'a [&'a str],
}

/// Lowers every function and wraps them in one top-level `block`.
pub fn lower_program(funcs: &[FuncDef]) -> Result<Ast, FrontendError> {
    let names: Vec<&str> = funcs.iter().map(|f| f.name.as_str()).collect();
    let defines = funcs
        .iter()
        .map(|f| lower(f, &names))
        .collect::<Result<Vec<_>, _>>()?;
    let span = funcs[0].span.to(funcs[funcs.len() - 1].span);
    Ok(Ast::apply("block", defines, span))
}

/// Lowers one function to `define(name, p1, ..., pn, body)`. `functions`
/// lists the user functions callable from the body.
pub fn lower(func: &FuncDef, functions: &[&str]) -> Result<Ast, FrontendError> {
    let lw = Lowerer { functions };
    let mut args: Vec<Ast> = vec![Ast::ident(&func.name, func.span)];
    args.extend(func.params.iter().map(|p| Ast::ident(p, func.span)));
    args.push(lw.collapsible_block(&func.body, true)?);
    Ok(Ast::apply("define", args, func.span))
}

fn block_span(stmts: &[Stmt]) -> SourceSpan {
    stmts[0].span().to(stmts[stmts.len() - 1].span())
}

fn contains_return(stmts: &[Stmt]) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Return(..) => true,
        Stmt::While { body, .. } => contains_return(body),
        Stmt::If {
            arms, else_body, ..
        } => {
            arms.iter().any(|(_, b)| contains_return(b))
                || else_body.as_deref().is_some_and(contains_return)
        }
        _ => false,
    })
}

/// True when the statement list always ends in a `return`.
fn ends_in_return(stmts: &[Stmt]) -> bool {
    match stmts.last() {
        Some(Stmt::Return(..)) => true,
        Some(Stmt::If {
            arms,
            else_body: Some(else_body),
            ..
        }) => arms.iter().all(|(_, b)| ends_in_return(b)) && ends_in_return(else_body),
        _ => false,
    }
}

impl Lowerer<'_> {
    /// Lowers a body; a single side-effect-free statement stands alone,
    /// anything else becomes `block(...)`.
    fn collapsible_block(&self, stmts: &[Stmt], tail: bool) -> Result<Ast, FrontendError> {
        let mut items = self.statements(stmts, tail)?;
        if items.len() == 1 {
            let is_effect = items[0]
                .as_apply()
                .is_some_and(|(head, _)| SIDE_EFFECT_HEADS.contains(&head));
            if !is_effect {
                return Ok(items.pop().unwrap());
            }
        }
        Ok(Ast::apply("block", items, block_span(stmts)))
    }

    fn statements(&self, stmts: &[Stmt], tail: bool) -> Result<Vec<Ast>, FrontendError> {
        let n = stmts.len();
        stmts
            .iter()
            .enumerate()
            .map(|(i, s)| self.statement(s, tail && i + 1 == n))
            .collect()
    }

    fn statement(&self, stmt: &Stmt, tail: bool) -> Result<Ast, FrontendError> {
        Ok(match stmt {
            Stmt::Assign {
                name,
                value,
                first_binding,
                span,
            } => {
                let head = if *first_binding { "define" } else { "store" };
                Ast::apply(head, vec![Ast::ident(name, *span), self.expr(value)?], *span)
            }
            Stmt::AssignRow {
                name,
                index,
                value,
                span,
            } => Ast::apply(
                "store_row",
                vec![Ast::ident(name, *span), self.expr(index)?, self.expr(value)?],
                *span,
            ),
            Stmt::AugAssign {
                name,
                op,
                value,
                span,
            } => {
                let updated = Ast::apply(
                    op.head(),
                    vec![Ast::ident(name, *span), self.expr(value)?],
                    *span,
                );
                Ast::apply("store", vec![Ast::ident(name, *span), updated], *span)
            }
            Stmt::While { cond, body, span } => {
                if contains_return(body) {
                    return Err(FrontendError::ReturnNotTerminal {
                        span: first_return_span(body).unwrap_or(*span),
                    });
                }
                let body_ast = Ast::apply("block", self.statements(body, false)?, block_span(body));
                Ast::apply("while", vec![self.expr(cond)?, body_ast], *span)
            }
            Stmt::If {
                arms,
                else_body,
                span,
            } => {
                if contains_return(std::slice::from_ref(stmt))
                    && !(tail && ends_in_return(std::slice::from_ref(stmt)))
                {
                    return Err(FrontendError::ReturnNotTerminal { span: *span });
                }
                let mut lowered = match else_body {
                    Some(body) => Some(self.collapsible_block(body, tail)?),
                    None => None,
                };
                for (i, (cond, body)) in arms.iter().enumerate().rev() {
                    let arm_span = if i == 0 { *span } else { cond.span().to(*span) };
                    let mut args = vec![self.expr(cond)?, self.collapsible_block(body, tail)?];
                    args.extend(lowered.take());
                    lowered = Some(Ast::apply("if", args, arm_span));
                }
                lowered.unwrap()
            }
            Stmt::Return(e, span) => {
                if !tail {
                    return Err(FrontendError::ReturnNotTerminal { span: *span });
                }
                self.expr(e)?
            }
            Stmt::Expr(e, _) => self.expr(e)?,
        })
    }

    fn expr(&self, e: &Expr) -> Result<Ast, FrontendError> {
        Ok(match e {
            Expr::Name(n, span) => Ast::ident(n, *span),
            Expr::Int(i, span) => Ast::LitInt(*i, *span),
            Expr::Float(x, span) => Ast::LitFloat(*x, *span),
            Expr::Str(s, span) => Ast::LitStr(s.clone(), *span),
            Expr::Bool(b, span) => Ast::LitBool(*b, *span),
            Expr::None(span) => Ast::LitNil(*span),
            Expr::Binary { op, lhs, rhs, span } => {
                Ast::apply(op.head(), vec![self.expr(lhs)?, self.expr(rhs)?], *span)
            }
            Expr::Neg(inner, span) => Ast::apply("neg", vec![self.expr(inner)?], *span),
            Expr::Call { callee, args, span } => {
                let head = LOWERING_TABLE
                    .iter()
                    .find(|(surface, _)| surface == callee)
                    .map(|(_, head)| *head)
                    .or_else(|| {
                        self.functions
                            .iter()
                            .find(|f| **f == callee)
                            .map(|f| &**f)
                    })
                    .ok_or_else(|| FrontendError::UnknownCall {
                        span: *span,
                        name: callee.clone(),
                    })?;
                if head == "transpose" && args.len() == 1 {
                    return Ok(Ast::apply("transpose", vec![self.expr(&args[0])?], *span));
                }
                let args = args.iter().map(|a| self.expr(a)).collect::<Result<_, _>>()?;
                Ast::apply(head, args, *span)
            }
            Expr::Transpose(inner, span) => Ast::apply("transpose", vec![self.expr(inner)?], *span),
            Expr::ShapeOf { target, axis, span } => {
                Ast::apply("shape", vec![self.expr(target)?, self.expr(axis)?], *span)
            }
            Expr::Index {
                target,
                index,
                span,
            } => Ast::apply("slice_row", vec![self.expr(target)?, self.expr(index)?], *span),
            Expr::List(items, span) => Ast::apply(
                "list",
                items.iter().map(|i| self.expr(i)).collect::<Result<_, _>>()?,
                *span,
            ),
        })
    }
}

fn first_return_span(stmts: &[Stmt]) -> Option<SourceSpan> {
    stmts.iter().find_map(|s| match s {
        Stmt::Return(_, span) => Some(*span),
        Stmt::While { body, .. } => first_return_span(body),
        Stmt::If {
            arms, else_body, ..
        } => arms
            .iter()
            .find_map(|(_, b)| first_return_span(b))
            .or_else(|| else_body.as_deref().and_then(first_return_span)),
        _ => None,
    })
}
