//! Compilation of PhySL into execution trees.
//!
//! A program is either a `block` of top-level `define`s (one kernel per
//! define), a single `define`, or any other expression, which becomes the
//! zero-parameter kernel `__main`. A root `block` that mixes kernel
//! definitions (defines with parameters) and other statements hoists the
//! kernels and compiles the remaining statements as `__main`.
//!
//! Variables resolve lexically to flat frame slots: parameters take slots
//! `0..param_count`, every local `define` takes a fresh slot, and a name is
//! visible from its definition to the end of the enclosing block.

mod cache;
mod dump;
mod fold;

use std::collections::HashMap;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::perf::{CounterCell, CounterSet};
use crate::physl::{self, Ast, SourceSpan};
use crate::primitives::{Arity, Prim};
use crate::value::Datum;

pub use cache::{CacheStats, KernelCache};
pub use dump::{dump_program, dump_tree, DumpFormat};
pub use fold::{fold_constants, fold_program};

/// Name of the kernel compiled from a bare expression.
pub const MAIN_KERNEL: &str = "__main";

/// Control and binding forms; these are not pure primitives.
pub const SPECIAL_FORMS: &[&str] = &["block", "if", "while", "define", "store", "store_row"];

pub type Slot = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KernelId(pub u64);

static NEXT_KERNEL_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_kernel_id() -> KernelId {
    KernelId(NEXT_KERNEL_ID.fetch_add(1, Ordering::Relaxed))
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Const(Datum),
    Var(Slot),
    /// Call of the program's kernel at `index`.
    Call {
        index: usize,
        name: Arc<str>,
    },
    Block,
    If,
    While,
    Define(Slot),
    Store(Slot),
    StoreRow(Slot),
    Prim(Prim),
}

impl NodeKind {
    /// Pure kinds evaluate all children concurrently and then apply;
    /// the rest sequence their children explicitly.
    pub fn is_pure(&self) -> bool {
        match self {
            NodeKind::Const(_) | NodeKind::Var(_) | NodeKind::Call { .. } | NodeKind::Prim(_) => {
                true
            }
            NodeKind::Block
            | NodeKind::If
            | NodeKind::While
            | NodeKind::Define(_)
            | NodeKind::Store(_)
            | NodeKind::StoreRow(_) => false,
        }
    }

    pub fn is_side_effect(&self) -> bool {
        matches!(
            self,
            NodeKind::Define(_) | NodeKind::Store(_) | NodeKind::StoreRow(_)
        )
    }

    /// Short kind name, used for trace event names.
    pub fn name(&self) -> &str {
        match self {
            NodeKind::Const(_) => "const",
            NodeKind::Var(_) => "var",
            NodeKind::Call { .. } => "call",
            NodeKind::Block => "block",
            NodeKind::If => "if",
            NodeKind::While => "while",
            NodeKind::Define(_) => "define",
            NodeKind::Store(_) => "store",
            NodeKind::StoreRow(_) => "store_row",
            NodeKind::Prim(p) => p.name(),
        }
    }

    /// Kind with its payload, e.g. `const(1)`, `var(x)`, `call(fact)`.
    pub fn label(&self, kernel: &CompiledKernel) -> String {
        let slot = |s: &Slot| kernel.slot_names.get(*s).map_or("?", String::as_str).to_string();
        match self {
            NodeKind::Const(d) => format!("const({})", physl::pretty(&datum_literal(d))),
            NodeKind::Var(s) => format!("var({})", slot(s)),
            NodeKind::Call { name, .. } => format!("call({name})"),
            NodeKind::Define(s) => format!("define({})", slot(s)),
            NodeKind::Store(s) => format!("store({})", slot(s)),
            NodeKind::StoreRow(s) => format!("store_row({})", slot(s)),
            other => other.name().to_string(),
        }
    }
}

fn datum_literal(d: &Datum) -> Ast {
    let span = SourceSpan::default();
    match d {
        Datum::Nil => Ast::LitNil(span),
        Datum::Bool(b) => Ast::LitBool(*b, span),
        Datum::Int(i) => Ast::LitInt(*i, span),
        Datum::Float(x) => Ast::LitFloat(*x, span),
        Datum::Str(s) => Ast::LitStr(s.to_string(), span),
        other => Ast::ident(other.type_name(), span),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExecNode {
    /// Program-wide pre-order id.
    pub id: u32,
    pub kind: NodeKind,
    /// Indices of the children within the kernel's node list.
    pub children: Vec<usize>,
    pub span: SourceSpan,
}

/// An execution tree with its frame layout. Nodes are stored in pre-order;
/// the root is node 0.
#[derive(Debug)]
pub struct CompiledKernel {
    pub id: KernelId,
    pub name: String,
    pub params: Vec<String>,
    pub frame_size: usize,
    pub slot_names: Vec<String>,
    pub source_hash: u64,
    pub span: SourceSpan,
    nodes: Vec<ExecNode>,
    counters: Vec<CounterCell>,
}

impl CompiledKernel {
    fn new(
        name: String,
        params: Vec<String>,
        slot_names: Vec<String>,
        nodes: Vec<ExecNode>,
        source_hash: u64,
        span: SourceSpan,
    ) -> Self {
        let counters = nodes.iter().map(|_| CounterCell::default()).collect();
        CompiledKernel {
            id: fresh_kernel_id(),
            name,
            params,
            frame_size: slot_names.len(),
            slot_names,
            source_hash,
            span,
            nodes,
            counters,
        }
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn nodes(&self) -> &[ExecNode] {
        &self.nodes
    }

    pub fn node(&self, local: usize) -> &ExecNode {
        &self.nodes[local]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn counter_cell(&self, local: usize) -> &CounterCell {
        &self.counters[local]
    }

    pub fn counters(&self, local: usize) -> CounterSet {
        self.counters[local].snapshot()
    }

    pub fn reset_counters(&self) {
        self.counters.iter().for_each(CounterCell::reset);
    }

    /// Local index of the node with program-wide id `id`.
    pub fn local_of(&self, id: u32) -> Option<usize> {
        let base = self.nodes.first()?.id;
        let local = id.checked_sub(base)? as usize;
        (local < self.nodes.len()).then_some(local)
    }

    /// Structural equality ignoring ids and counters.
    pub fn same_structure(&self, other: &CompiledKernel) -> bool {
        self.name == other.name
            && self.params == other.params
            && self.frame_size == other.frame_size
            && self.nodes.len() == other.nodes.len()
            && self.nodes.iter().zip(&other.nodes).all(|(a, b)| {
                a.children == b.children
                    && match (&a.kind, &b.kind) {
                        (NodeKind::Const(x), NodeKind::Const(y)) => x.bitwise_eq(y),
                        (x, y) => x == y,
                    }
            })
    }
}

/// The kernels compiled from one PhySL program.
#[derive(Debug)]
pub struct Program {
    kernels: Vec<Arc<CompiledKernel>>,
    by_name: HashMap<String, usize>,
    pub source_hash: u64,
}

impl Program {
    fn new(kernels: Vec<CompiledKernel>, source_hash: u64) -> Self {
        let by_name = kernels
            .iter()
            .enumerate()
            .map(|(i, k)| (k.name.clone(), i))
            .collect();
        Program {
            kernels: kernels.into_iter().map(Arc::new).collect(),
            by_name,
            source_hash,
        }
    }

    pub fn kernels(&self) -> &[Arc<CompiledKernel>] {
        &self.kernels
    }

    pub fn kernel(&self, name: &str) -> Option<&Arc<CompiledKernel>> {
        self.by_name.get(name).map(|&i| &self.kernels[i])
    }

    pub fn kernel_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn entry_names(&self) -> impl Iterator<Item = &str> {
        self.kernels.iter().map(|k| k.name.as_str())
    }

    pub fn node_count(&self) -> usize {
        self.kernels.iter().map(|k| k.node_count()).sum()
    }

    pub fn reset_counters(&self) {
        self.kernels.iter().for_each(|k| k.reset_counters());
    }

    /// Per-node eval counts in program node order.
    pub fn count_table(&self) -> Vec<(u32, u64)> {
        self.kernels
            .iter()
            .flat_map(|k| {
                k.nodes()
                    .iter()
                    .enumerate()
                    .map(move |(i, n)| (n.id, k.counters(i).count))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CompileOptions {
    /// Run the constant folder after compilation.
    pub fold_constants: bool,
    /// Enable diagnostic primitives such as `sleep_ms`.
    pub test_primitives: bool,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum CompileError {
    #[error("UnknownIdentifier at {span}: `{name}`")]
    UnknownIdentifier { name: String, span: SourceSpan },
    #[error("ArityError at {span}: `{kind}` expects {expected} argument(s), got {got}")]
    Arity {
        kind: String,
        expected: String,
        got: usize,
        span: SourceSpan,
    },
    #[error("SideEffectPosition at {span}: `{form}` is only allowed as a statement of a sequenced block")]
    SideEffectPosition { form: String, span: SourceSpan },
    #[error("MalformedForm at {span}: {message}")]
    Malformed { message: String, span: SourceSpan },
    #[error("ReservedName at {span}: `{name}` names a primitive or special form")]
    ReservedName { name: String, span: SourceSpan },
    #[error("DuplicateKernel at {span}: `{name}` is defined twice")]
    DuplicateKernel { name: String, span: SourceSpan },
}

impl CompileError {
    pub fn span(&self) -> SourceSpan {
        match self {
            CompileError::UnknownIdentifier { span, .. }
            | CompileError::Arity { span, .. }
            | CompileError::SideEffectPosition { span, .. }
            | CompileError::Malformed { span, .. }
            | CompileError::ReservedName { span, .. }
            | CompileError::DuplicateKernel { span, .. } => *span,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            CompileError::UnknownIdentifier { .. } => "UnknownIdentifier",
            CompileError::Arity { .. } => "ArityError",
            CompileError::SideEffectPosition { .. } => "SideEffectPosition",
            CompileError::Malformed { .. } => "MalformedForm",
            CompileError::ReservedName { .. } => "ReservedName",
            CompileError::DuplicateKernel { .. } => "DuplicateKernel",
        }
    }
}

/// Hash identifying a program's source (canonical text plus options).
pub fn source_hash(ast: &Ast, options: &CompileOptions) -> u64 {
    let mut h = DefaultHasher::new();
    physl::pretty(ast).hash(&mut h);
    options.hash(&mut h);
    h.finish()
}

struct KernelDecl<'a> {
    name: String,
    params: Vec<String>,
    body: Body<'a>,
    span: SourceSpan,
}

enum Body<'a> {
    Expr(&'a Ast),
    /// Statements of a mixed root block compiled as `__main`.
    Statements(&'a [&'a Ast], SourceSpan),
}

fn is_kernel_define(ast: &Ast) -> bool {
    matches!(ast.as_apply(), Some(("define", args)) if args.len() >= 3)
}

fn kernel_decl(ast: &Ast) -> Result<KernelDecl<'_>, CompileError> {
    let (_, args) = ast.as_apply().expect("define form");
    let span = ast.span();
    if args.len() < 2 {
        return Err(CompileError::Arity {
            kind: "define".into(),
            expected: "at least 2".into(),
            got: args.len(),
            span,
        });
    }
    let ident = |a: &Ast| {
        a.as_ident().map(str::to_string).ok_or_else(|| CompileError::Malformed {
            message: format!("expected an identifier, found `{}`", physl::pretty(a)),
            span: a.span(),
        })
    };
    let name = ident(&args[0])?;
    let params = args[1..args.len() - 1]
        .iter()
        .map(ident)
        .collect::<Result<Vec<_>, _>>()?;
    for (i, p) in params.iter().enumerate() {
        if params[..i].contains(p) {
            return Err(CompileError::Malformed {
                message: format!("duplicate parameter `{p}`"),
                span: args[i + 1].span(),
            });
        }
    }
    Ok(KernelDecl {
        name,
        params,
        body: Body::Expr(&args[args.len() - 1]),
        span,
    })
}

/// Compiles a PhySL program.
pub fn compile(ast: &Ast, options: &CompileOptions) -> Result<Program, CompileError> {
    let hash = source_hash(ast, options);
    let mut main_stmts: Vec<&Ast> = Vec::new();
    let mut decls = Vec::new();
    match ast.as_apply() {
        Some(("define", _)) => decls.push(kernel_decl(ast)?),
        Some(("block", stmts)) if !stmts.is_empty() && stmts.iter().all(|s| matches!(s.as_apply(), Some(("define", _)))) => {
            for s in stmts {
                decls.push(kernel_decl(s)?);
            }
        }
        Some(("block", stmts)) if stmts.iter().any(is_kernel_define) => {
            for s in stmts {
                if is_kernel_define(s) {
                    decls.push(kernel_decl(s)?);
                } else {
                    main_stmts.push(s);
                }
            }
        }
        _ => decls.push(KernelDecl {
            name: MAIN_KERNEL.to_string(),
            params: vec![],
            body: Body::Expr(ast),
            span: ast.span(),
        }),
    }
    if !main_stmts.is_empty() {
        let span = main_stmts[0].span().to(main_stmts[main_stmts.len() - 1].span());
        decls.push(KernelDecl {
            name: MAIN_KERNEL.to_string(),
            params: vec![],
            body: Body::Statements(&main_stmts, span),
            span,
        });
    }

    let mut sigs: HashMap<String, (usize, usize)> = HashMap::new();
    for (i, d) in decls.iter().enumerate() {
        if SPECIAL_FORMS.contains(&d.name.as_str())
            || Prim::from_name(&d.name).is_some()
            || (d.name == MAIN_KERNEL && !matches!(d.body, Body::Statements(..)) && decls.len() > 1)
        {
            return Err(CompileError::ReservedName {
                name: d.name.clone(),
                span: d.span,
            });
        }
        if sigs.insert(d.name.clone(), (i, d.params.len())).is_some() {
            return Err(CompileError::DuplicateKernel {
                name: d.name.clone(),
                span: d.span,
            });
        }
    }

    let mut kernels = Vec::with_capacity(decls.len());
    let mut next_id = 0u32;
    for d in &decls {
        let mut b = KernelBuilder {
            sigs: &sigs,
            options,
            scopes: vec![d.params.iter().enumerate().map(|(i, p)| (p.clone(), i)).collect()],
            slot_names: d.params.clone(),
            nodes: Vec::new(),
        };
        let root_ctx = Ctx {
            effectful: true,
            statement: false,
        };
        match &d.body {
            Body::Expr(body) => {
                b.node(body, root_ctx)?;
            }
            Body::Statements(stmts, span) => {
                b.block(stmts, *span, root_ctx)?;
            }
        }
        for (i, n) in b.nodes.iter_mut().enumerate() {
            n.id = next_id + i as u32;
        }
        next_id += b.nodes.len() as u32;
        let mut kernel = CompiledKernel::new(
            d.name.clone(),
            d.params.clone(),
            b.slot_names,
            b.nodes,
            hash,
            d.span,
        );
        if options.fold_constants {
            kernel = fold::fold_constants(&kernel);
        }
        kernels.push(kernel);
    }
    if options.fold_constants {
        renumber(&mut kernels);
    }
    Ok(Program::new(kernels, hash))
}

fn renumber(kernels: &mut [CompiledKernel]) {
    let mut next = 0u32;
    for k in kernels {
        for n in &mut k.nodes {
            n.id = next;
            next += 1;
        }
    }
}

#[derive(Clone, Copy)]
struct Ctx {
    /// Side effects are allowed (no concurrently evaluating sibling can
    /// observe them).
    effectful: bool,
    /// Direct child of a `block`.
    statement: bool,
}

impl Ctx {
    fn expr(self) -> Ctx {
        Ctx {
            statement: false,
            ..self
        }
    }

    fn pure() -> Ctx {
        Ctx {
            effectful: false,
            statement: false,
        }
    }
}

struct KernelBuilder<'a> {
    sigs: &'a HashMap<String, (usize, usize)>,
    options: &'a CompileOptions,
    scopes: Vec<Vec<(String, Slot)>>,
    slot_names: Vec<String>,
    nodes: Vec<ExecNode>,
}

impl KernelBuilder<'_> {
    fn push(&mut self, kind: NodeKind, span: SourceSpan) -> usize {
        self.nodes.push(ExecNode {
            id: 0,
            kind,
            children: Vec::new(),
            span,
        });
        self.nodes.len() - 1
    }

    fn resolve(&self, name: &str) -> Option<Slot> {
        self.scopes
            .iter()
            .rev()
            .find_map(|scope| scope.iter().rev().find(|(n, _)| n == name).map(|(_, s)| *s))
    }

    fn resolve_target(&self, ast: &Ast, form: &str) -> Result<Slot, CompileError> {
        let name = ast.as_ident().ok_or_else(|| CompileError::Malformed {
            message: format!("`{form}` target must be an identifier"),
            span: ast.span(),
        })?;
        self.resolve(name).ok_or_else(|| CompileError::UnknownIdentifier {
            name: name.to_string(),
            span: ast.span(),
        })
    }

    fn arity(kind: &str, arity: Arity, got: usize, span: SourceSpan) -> Result<(), CompileError> {
        if arity.accepts(got) {
            Ok(())
        } else {
            Err(CompileError::Arity {
                kind: kind.to_string(),
                expected: arity.to_string(),
                got,
                span,
            })
        }
    }

    fn block(&mut self, stmts: &[&Ast], span: SourceSpan, ctx: Ctx) -> Result<usize, CompileError> {
        Self::arity("block", Arity::AtLeast(1), stmts.len(), span)?;
        let id = self.push(NodeKind::Block, span);
        self.scopes.push(Vec::new());
        let stmt_ctx = Ctx {
            statement: true,
            ..ctx
        };
        let mut children = Vec::with_capacity(stmts.len());
        for s in stmts {
            children.push(self.node(s, stmt_ctx)?);
        }
        self.scopes.pop();
        self.nodes[id].children = children;
        Ok(id)
    }

    fn side_effect_allowed(&self, form: &str, span: SourceSpan, ctx: Ctx) -> Result<(), CompileError> {
        if ctx.effectful && ctx.statement {
            Ok(())
        } else {
            Err(CompileError::SideEffectPosition {
                form: form.to_string(),
                span,
            })
        }
    }

    fn node(&mut self, ast: &Ast, ctx: Ctx) -> Result<usize, CompileError> {
        let span = ast.span();
        let (head, args) = match ast {
            Ast::Identifier(name, _) => {
                let slot = self.resolve(name).ok_or_else(|| CompileError::UnknownIdentifier {
                    name: name.clone(),
                    span,
                })?;
                return Ok(self.push(NodeKind::Var(slot), span));
            }
            Ast::LitInt(i, _) => return Ok(self.push(NodeKind::Const(Datum::Int(*i)), span)),
            Ast::LitFloat(x, _) => return Ok(self.push(NodeKind::Const(Datum::Float(*x)), span)),
            Ast::LitStr(s, _) => return Ok(self.push(NodeKind::Const(Datum::str(s)), span)),
            Ast::LitBool(b, _) => return Ok(self.push(NodeKind::Const(Datum::Bool(*b)), span)),
            Ast::LitNil(_) => return Ok(self.push(NodeKind::Const(Datum::Nil), span)),
            Ast::Apply { head, args, .. } => (head.as_str(), args.as_slice()),
        };
        match head {
            "block" => {
                let stmts: Vec<&Ast> = args.iter().collect();
                self.block(&stmts, span, ctx)
            }
            "if" | "while" => {
                let (kind, arity) = if head == "if" {
                    (NodeKind::If, Arity::Range(2, 3))
                } else {
                    (NodeKind::While, Arity::Exactly(2))
                };
                Self::arity(head, arity, args.len(), span)?;
                let id = self.push(kind, span);
                let children = args
                    .iter()
                    .map(|a| self.node(a, ctx.expr()))
                    .collect::<Result<Vec<_>, _>>()?;
                self.nodes[id].children = children;
                Ok(id)
            }
            "define" => {
                self.side_effect_allowed(head, span, ctx)?;
                if args.len() > 2 {
                    return Err(CompileError::Malformed {
                        message: "function definitions are only allowed at the top level".into(),
                        span,
                    });
                }
                Self::arity(head, Arity::Exactly(2), args.len(), span)?;
                let name = args[0].as_ident().ok_or_else(|| CompileError::Malformed {
                    message: "`define` target must be an identifier".into(),
                    span: args[0].span(),
                })?;
                let id = self.push(NodeKind::Define(0), span);
                let value = self.node(&args[1], ctx.expr())?;
                let slot = self.slot_names.len();
                self.slot_names.push(name.to_string());
                self.scopes.last_mut().unwrap().push((name.to_string(), slot));
                self.nodes[id].kind = NodeKind::Define(slot);
                self.nodes[id].children = vec![value];
                Ok(id)
            }
            "store" | "store_row" => {
                self.side_effect_allowed(head, span, ctx)?;
                let arity = if head == "store" { 2 } else { 3 };
                Self::arity(head, Arity::Exactly(arity), args.len(), span)?;
                let slot = self.resolve_target(&args[0], head)?;
                let kind = if head == "store" {
                    NodeKind::Store(slot)
                } else {
                    NodeKind::StoreRow(slot)
                };
                let id = self.push(kind, span);
                let children = args[1..]
                    .iter()
                    .map(|a| self.node(a, ctx.expr()))
                    .collect::<Result<Vec<_>, _>>()?;
                self.nodes[id].children = children;
                Ok(id)
            }
            _ => {
                let kind = match (Prim::from_name(head), self.sigs.get(head)) {
                    (Some(Prim::SleepMs), _) if !self.options.test_primitives => None,
                    (Some(p), _) => {
                        Self::arity(head, p.arity(), args.len(), span)?;
                        Some(NodeKind::Prim(p))
                    }
                    (None, Some(&(index, params))) => {
                        Self::arity(head, Arity::Exactly(params), args.len(), span)?;
                        Some(NodeKind::Call {
                            index,
                            name: Arc::from(head),
                        })
                    }
                    (None, None) => None,
                };
                let kind = kind.ok_or_else(|| CompileError::UnknownIdentifier {
                    name: head.to_string(),
                    span,
                })?;
                let id = self.push(kind, span);
                let children = args
                    .iter()
                    .map(|a| self.node(a, Ctx::pure()))
                    .collect::<Result<Vec<_>, _>>()?;
                self.nodes[id].children = children;
                Ok(id)
            }
        }
    }
}

/// Compiles PhySL source text.
pub fn compile_source(source: &str, options: &CompileOptions) -> Result<Program, crate::Error> {
    let ast = physl::parse(source)?;
    Ok(compile(&ast, options)?)
}
