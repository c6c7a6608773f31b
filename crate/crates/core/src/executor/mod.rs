//! Evaluation of compiled programs.
//!
//! Dataflow mode evaluates every non-leaf node as a task that resolves a
//! [`FutureHandle`]. A pure node launches all of its children at once and
//! applies its operation in a continuation that runs when the last child
//! resolves; control and binding forms chain their children in order.
//! Sequential mode is a direct recursive evaluator that defines the
//! reference semantics; both modes produce bitwise-identical values.

mod dataflow;
mod future;
mod scheduler;
mod sequential;

use std::sync::Arc;

use thiserror::Error;

use crate::compiler::{CompileOptions, CompiledKernel, KernelCache, Program};
use crate::perf::{TraceEvent, TraceSink};
use crate::physl::{Ast, SourceSpan};
use crate::value::{Datum, ValueError};

pub use future::{FutureHandle, Outcome};
pub use scheduler::{current_worker, default_threads, Scheduler, Task, DEFAULT_INLINE_LIMIT};

/// Default maximum nesting of kernel invocations.
pub const DEFAULT_MAX_FRAMES: usize = 10_000;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum RuntimeError {
    #[error("{error} (at {span})")]
    Value { error: ValueError, span: SourceSpan },
    #[error("DepthLimit at {span}: {what} exceeded the limit of {limit}")]
    DepthLimit {
        what: &'static str,
        limit: u64,
        span: SourceSpan,
    },
    #[error("UnknownIdentifier: no kernel named `{0}`")]
    UnknownEntry(String),
    #[error("ArityError: `{name}` expects {expected} argument(s), got {got}")]
    EntryArity {
        name: String,
        expected: usize,
        got: usize,
    },
}

impl RuntimeError {
    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            RuntimeError::Value { span, .. } | RuntimeError::DepthLimit { span, .. } => Some(*span),
            RuntimeError::UnknownEntry(_) | RuntimeError::EntryArity { .. } => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            RuntimeError::Value { error, .. } => error.kind_name(),
            RuntimeError::DepthLimit { .. } => "DepthLimit",
            RuntimeError::UnknownEntry(_) => "UnknownIdentifier",
            RuntimeError::EntryArity { .. } => "ArityError",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Dataflow,
    Sequential,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dataflow" => Ok(Mode::Dataflow),
            "sequential" => Ok(Mode::Sequential),
            other => Err(format!("unknown mode `{other}` (expected dataflow or sequential)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    pub mode: Mode,
    pub threads: usize,
    pub counters: bool,
    pub trace: bool,
    pub max_frames: usize,
    pub max_loop_iterations: Option<u64>,
    pub inline_limit: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            mode: Mode::Dataflow,
            threads: default_threads(),
            counters: false,
            trace: false,
            max_frames: DEFAULT_MAX_FRAMES,
            max_loop_iterations: None,
            inline_limit: DEFAULT_INLINE_LIMIT,
        }
    }
}

impl EvalConfig {
    pub fn dataflow(threads: usize) -> Self {
        EvalConfig {
            threads,
            ..Default::default()
        }
    }

    pub fn sequential() -> Self {
        EvalConfig {
            mode: Mode::Sequential,
            threads: 1,
            ..Default::default()
        }
    }

    pub fn with_counters(mut self, on: bool) -> Self {
        self.counters = on;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.trace = on;
        self
    }
}

/// Evaluation settings plus the worker pool for dataflow mode. One context
/// may serve evaluations from several client threads at once.
pub struct EvalContext {
    pub config: EvalConfig,
    scheduler: Option<Arc<Scheduler>>,
    trace: Option<Arc<TraceSink>>,
}

impl EvalContext {
    pub fn new(config: EvalConfig) -> Self {
        let scheduler = (config.mode == Mode::Dataflow)
            .then(|| Arc::new(Scheduler::with_inline_limit(config.threads, config.inline_limit)));
        EvalContext {
            config,
            scheduler,
            trace: config.trace.then(|| Arc::new(TraceSink::new())),
        }
    }

    pub fn scheduler(&self) -> Option<&Scheduler> {
        self.scheduler.as_deref()
    }

    /// Events recorded so far, in recording order.
    pub fn trace_events(&self) -> Vec<TraceEvent> {
        self.trace.as_ref().map(|t| t.events()).unwrap_or_default()
    }

    /// Evaluates kernel `entry` of `program`.
    pub fn eval(&self, program: &Arc<Program>, entry: &str, args: Vec<Datum>) -> Result<Datum, RuntimeError> {
        let kernel = program
            .kernel(entry)
            .ok_or_else(|| RuntimeError::UnknownEntry(entry.to_string()))?
            .clone();
        self.eval_kernel(program, kernel, args)
    }

    fn eval_kernel(
        &self,
        program: &Arc<Program>,
        kernel: Arc<CompiledKernel>,
        args: Vec<Datum>,
    ) -> Result<Datum, RuntimeError> {
        if args.len() != kernel.param_count() {
            return Err(RuntimeError::EntryArity {
                name: kernel.name.clone(),
                expected: kernel.param_count(),
                got: args.len(),
            });
        }
        match &self.scheduler {
            Some(sched) => dataflow::eval(sched, program, kernel, args, self.config, self.trace.clone()),
            None => sequential::eval(program, &kernel, args, self.config, self.trace.as_deref()),
        }
    }
}

/// Compiles `program` through `cache` and evaluates its `entry` kernel.
pub fn run_program(
    program: &Ast,
    entry: &str,
    args: Vec<Datum>,
    ctx: &EvalContext,
    cache: &KernelCache,
    options: &CompileOptions,
) -> Result<Datum, crate::Error> {
    let compiled = cache.compile(program, options)?;
    Ok(ctx.eval(&compiled, entry, args)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compiler::compile;
    use crate::physl;

    fn both(src: &str, entry: &str, args: Vec<Datum>) -> Result<Datum, RuntimeError> {
        let opts = CompileOptions {
            test_primitives: true,
            ..Default::default()
        };
        let program = Arc::new(compile(&physl::parse(src).unwrap(), &opts).unwrap());
        let seq = EvalContext::new(EvalConfig::sequential()).eval(&program, entry, args.clone());
        for w in [1, 2, 4] {
            let df = EvalContext::new(EvalConfig::dataflow(w)).eval(&program, entry, args.clone());
            match (&seq, &df) {
                (Ok(a), Ok(b)) => assert!(a.bitwise_eq(b), "{src} at W={w}: {a} vs {b}"),
                _ => assert_eq!(seq, df, "{src} at W={w}"),
            }
        }
        seq
    }

    fn main(src: &str) -> Result<Datum, RuntimeError> {
        both(src, crate::compiler::MAIN_KERNEL, vec![])
    }

    #[test]
    fn primitive_examples() {
        assert_eq!(main("add(1, 2)"), Ok(Datum::Int(3)));
        assert_eq!(main("block(1, 2, 3)"), Ok(Datum::Int(3)));
        assert_eq!(main("block(define(a, 2), add(a, 1))"), Ok(Datum::Int(3)));
        assert_eq!(main("block(div(1, 0), 99)"), Ok(Datum::Int(99)));
        assert_eq!(main("if(true, 1, 2)"), Ok(Datum::Int(1)));
        assert_eq!(main("if(false, 1)"), Ok(Datum::Nil));
        assert_eq!(main("while(false, 1)"), Ok(Datum::Nil));
        assert_eq!(
            main("block(define(i, 0), while(lt(i, 5), block(store(i, add(i, 1)))), i)"),
            Ok(Datum::Int(5))
        );
        assert_eq!(main("if(true, block(define(a, 7)))"), Ok(Datum::Int(7)));
        assert_eq!(
            main("block(define(m, matrix(list(list(1, 2), list(3, 4)))), define(old, m), store_row(m, 0, vector(list(9, 9))), list(m, old))")
                .unwrap()
                .to_string(),
            "9.0,9.0\n3.0,4.0\n\n1.0,2.0\n3.0,4.0"
        );
    }

    #[test]
    fn recursion() {
        let fact = "block(define(fact, n, if(le(n, 0), 1, mul(n, fact(sub(n, 1))))))";
        assert_eq!(both(fact, "fact", vec![Datum::Int(0)]), Ok(Datum::Int(1)));
        assert_eq!(both(fact, "fact", vec![Datum::Int(10)]), Ok(Datum::Int(3628800)));
        let fib = "block(define(fib, n, if(lt(n, 2), n, add(fib(sub(n, 1)), fib(sub(n, 2))))))";
        assert_eq!(both(fib, "fib", vec![Datum::Int(20)]), Ok(Datum::Int(6765)));
    }

    #[test]
    fn errors_carry_leaf_spans() {
        let src = "add(1,\n  dot(vector(list(1, 2)), vector(list(1, 2, 3))))";
        let err = main(src).unwrap_err();
        assert_eq!(err.kind_name(), "ShapeMismatch");
        assert_eq!(err.span().map(|s| (s.line, s.col)), Some((2, 3)));
        let err = main("if(2, 1, 0)").unwrap_err();
        assert_eq!(err.kind_name(), "TypeError");
        // leftmost failure wins regardless of completion order
        let err = main("add(add(sleep_ms(30), neg(list(1))), log(list(1)))").unwrap_err();
        assert_eq!(err.span().unwrap().col, 23);
    }

    #[test]
    fn depth_limits() {
        let fact = "block(define(fact, n, if(le(n, 0), 1, mul(n, fact(sub(n, 1))))))";
        let err = both(fact, "fact", vec![Datum::Int(20_000)]).unwrap_err();
        assert_eq!(err.kind_name(), "DepthLimit");
        let program = Arc::new(compile(&physl::parse("while(true, 1)").unwrap(), &Default::default()).unwrap());
        for config in [EvalConfig::sequential(), EvalConfig::dataflow(2)] {
            let ctx = EvalContext::new(EvalConfig {
                max_loop_iterations: Some(100),
                ..config
            });
            let err = ctx.eval(&program, crate::compiler::MAIN_KERNEL, vec![]).unwrap_err();
            assert!(matches!(err, RuntimeError::DepthLimit { limit: 100, .. }));
        }
    }

    #[test]
    fn entry_checks() {
        let program = Arc::new(compile(&physl::parse("block(define(main, 42))").unwrap(), &Default::default()).unwrap());
        let ctx = EvalContext::new(EvalConfig::dataflow(2));
        assert_eq!(ctx.eval(&program, "main", vec![]), Ok(Datum::Int(42)));
        assert_eq!(ctx.eval(&program, "nope", vec![]).unwrap_err().kind_name(), "UnknownIdentifier");
        assert_eq!(ctx.eval(&program, "main", vec![Datum::Nil]).unwrap_err().kind_name(), "ArityError");
    }

    #[test]
    fn run_program_uses_the_cache() {
        let ast = physl::parse("block(define(main, 42))").unwrap();
        let cache = KernelCache::new();
        let ctx = EvalContext::new(EvalConfig::dataflow(1));
        let opts = CompileOptions::default();
        for _ in 0..3 {
            assert_eq!(run_program(&ast, "main", vec![], &ctx, &cache, &opts), Ok(Datum::Int(42)));
        }
        assert_eq!(cache.stats().hits, 2);
        assert!(run_program(&ast, "other", vec![], &ctx, &cache, &opts).is_err());
    }

    #[test]
    fn sequential_mode_spawns_no_tasks() {
        let ctx = EvalContext::new(EvalConfig::sequential());
        assert!(ctx.scheduler().is_none());
        let ctx = EvalContext::new(EvalConfig::dataflow(2));
        let program = Arc::new(compile(&physl::parse("add(neg(1), neg(2))").unwrap(), &Default::default()).unwrap());
        ctx.eval(&program, crate::compiler::MAIN_KERNEL, vec![]).unwrap();
        assert!(ctx.scheduler().unwrap().tasks_spawned() >= 2);
    }

    #[test]
    fn concurrent_clients_share_a_context() {
        let ctx = Arc::new(EvalContext::new(EvalConfig::dataflow(3)));
        let fib = "block(define(fib, n, if(lt(n, 2), n, add(fib(sub(n, 1)), fib(sub(n, 2))))))";
        let program = Arc::new(compile(&physl::parse(fib).unwrap(), &Default::default()).unwrap());
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let (ctx, program) = (ctx.clone(), program.clone());
                std::thread::spawn(move || ctx.eval(&program, "fib", vec![Datum::Int(15)]))
            })
            .collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), Ok(Datum::Int(610)));
        }
    }
}
