use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, PoisonError};
use std::time::Instant;

use super::future::{FutureHandle, Outcome};
use super::scheduler::{self, Scheduler};
use super::{EvalConfig, RuntimeError};
use crate::compiler::{CompiledKernel, ExecNode, NodeKind, Program};
use crate::perf::{exclusive_step, CounterCell, Phase, TraceSink};
use crate::primitives::{apply_prim, store_row_value, truthy, Frame, Prim};
use crate::value::{Datum, ValueError};

struct Run {
    program: Arc<Program>,
    config: EvalConfig,
    trace: Option<Arc<TraceSink>>,
}

struct Activation {
    kernel: Arc<CompiledKernel>,
    frame: Frame,
    depth: usize,
}

/// One node of one kernel invocation.
#[derive(Clone)]
struct Site {
    run: Arc<Run>,
    act: Arc<Activation>,
    local: usize,
}

impl Site {
    fn node(&self) -> &ExecNode {
        self.act.kernel.node(self.local)
    }

    fn cell(&self) -> Option<&CounterCell> {
        self.run
            .config
            .counters
            .then(|| self.act.kernel.counter_cell(self.local))
    }

    fn child(&self, i: usize) -> Site {
        Site {
            run: self.run.clone(),
            act: self.act.clone(),
            local: self.node().children[i],
        }
    }

    fn step<R>(&self, f: impl FnOnce() -> R) -> R {
        exclusive_step(self.cell(), f)
    }

    /// The step that produces the node's outcome, bracketed by trace events.
    fn final_step(&self, f: impl FnOnce() -> Outcome) -> Outcome {
        self.step(|| {
            self.trace(Phase::Begin);
            let o = f();
            self.trace(Phase::End);
            o
        })
    }

    fn trace(&self, phase: Phase) {
        if let Some(sink) = &self.run.trace {
            let n = self.node();
            sink.record(phase, n.id, n.kind.name(), scheduler::current_worker().unwrap_or(0));
        }
    }

    fn fail(&self, error: ValueError) -> RuntimeError {
        RuntimeError::Value {
            error,
            span: self.node().span,
        }
    }
}

/// A node evaluation in flight.
struct Pending {
    site: Site,
    t0: Option<Instant>,
    out: FutureHandle,
}

impl Pending {
    fn finish(self, outcome: Outcome) {
        if let (Some(t0), Some(cell)) = (self.t0, self.site.cell()) {
            cell.add_inclusive(t0.elapsed().as_nanos() as u64);
        }
        self.out.resolve(outcome);
    }
}

pub(super) fn eval(
    sched: &Scheduler,
    program: &Arc<Program>,
    kernel: Arc<CompiledKernel>,
    args: Vec<Datum>,
    config: EvalConfig,
    trace: Option<Arc<TraceSink>>,
) -> Result<Datum, RuntimeError> {
    let run = Arc::new(Run {
        program: program.clone(),
        config,
        trace,
    });
    let act = Arc::new(Activation {
        frame: Frame::new(kernel.frame_size, args),
        kernel,
        depth: 1,
    });
    let out = FutureHandle::pending();
    let root = Site { run, act, local: 0 };
    let o = out.clone();
    sched.spawn(Box::new(move || eval_node(root, o)));
    out.wait()
}

fn eval_node(site: Site, out: FutureHandle) {
    let t0 = site.cell().map(|c| {
        c.add_eval();
        Instant::now()
    });
    let kind = site.node().kind.clone();
    let p = Pending { site, t0, out };
    match kind {
        NodeKind::Const(d) => {
            let o = p.site.final_step(|| Ok(d));
            p.finish(o);
        }
        NodeKind::Var(slot) => {
            let o = p.site.final_step(|| Ok(p.site.act.frame.get(slot)));
            p.finish(o);
        }
        NodeKind::Prim(_) | NodeKind::Call { .. } => eval_pure(p),
        NodeKind::Block
        | NodeKind::If
        | NodeKind::While
        | NodeKind::Define(_)
        | NodeKind::Store(_)
        | NodeKind::StoreRow(_) => drive(
            Sequence {
                p,
                kind,
                stage: 0,
                iterations: 0,
                index: Datum::Nil,
            },
            None,
        ),
    }
}

/// Starts evaluating `site`. Leaves are always read inline; other nodes run
/// inline when `inline` is set and the nesting guard allows, else as a task.
fn launch(site: Site, inline: bool) -> FutureHandle {
    let out = FutureHandle::pending();
    let leaf = matches!(site.node().kind, NodeKind::Const(_) | NodeKind::Var(_));
    if leaf || (inline && scheduler::may_inline()) {
        let o = out.clone();
        scheduler::inline(move || eval_node(site, o));
    } else {
        let o = out.clone();
        scheduler::spawn_local(Box::new(move || eval_node(site, o)));
    }
    out
}

struct Join {
    /// Outstanding children plus one for the dispatching step.
    remaining: AtomicUsize,
    results: Mutex<Vec<Option<Outcome>>>,
    pending: Mutex<Option<Pending>>,
}

impl Join {
    fn arrive(self: &Arc<Self>) {
        if self.remaining.fetch_sub(1, Ordering::AcqRel) == 1 {
            apply(self);
        }
    }
}

fn eval_pure(p: Pending) {
    let site = p.site.clone();
    let n = site.node().children.len();
    let join = Arc::new(Join {
        remaining: AtomicUsize::new(n + 1),
        results: Mutex::new(vec![None; n]),
        pending: Mutex::new(Some(p)),
    });
    site.step(|| {
        for i in 0..n {
            let f = launch(site.child(i), i + 1 == n);
            let j = join.clone();
            f.on_complete(move |o| {
                j.results.lock().unwrap_or_else(PoisonError::into_inner)[i] = Some(o);
                j.arrive();
            });
        }
    });
    join.arrive();
}

fn apply(join: &Arc<Join>) {
    let p = join
        .pending
        .lock()
        .unwrap_or_else(PoisonError::into_inner)
        .take()
        .expect("node applied once");
    let results = std::mem::take(&mut *join.results.lock().unwrap_or_else(PoisonError::into_inner));
    let mut args = Vec::with_capacity(results.len());
    for r in results {
        match r.expect("all children resolved") {
            Ok(v) => args.push(v),
            Err(e) => {
                let o = p.site.final_step(|| Err(e));
                return p.finish(o);
            }
        }
    }
    match p.site.node().kind {
        NodeKind::Prim(prim) => apply_prim_node(p, prim, args),
        NodeKind::Call { index, .. } => call(p, index, args),
        _ => unreachable!("pure kinds only"),
    }
}

fn apply_prim_node(p: Pending, prim: Prim, args: Vec<Datum>) {
    let o = p
        .site
        .final_step(|| apply_prim(prim, &args).map_err(|e| p.site.fail(e)));
    p.finish(o);
}

fn call(p: Pending, index: usize, args: Vec<Datum>) {
    let depth = p.site.act.depth + 1;
    let limit = p.site.run.config.max_frames;
    if depth > limit {
        let span = p.site.node().span;
        let o = p.site.final_step(|| {
            Err(RuntimeError::DepthLimit {
                what: "call depth",
                limit: limit as u64,
                span,
            })
        });
        return p.finish(o);
    }
    let callee = p.site.run.program.kernels()[index].clone();
    let result = FutureHandle::pending();
    let _ = p.site.final_step(|| {
        let act = Arc::new(Activation {
            frame: Frame::new(callee.frame_size, args),
            kernel: callee,
            depth,
        });
        let root = Site {
            run: p.site.run.clone(),
            act,
            local: 0,
        };
        let r = result.clone();
        if scheduler::may_inline() {
            scheduler::inline(move || eval_node(root, r));
        } else {
            scheduler::spawn_local(Box::new(move || eval_node(root, r)));
        }
        Ok(Datum::Nil)
    });
    result.on_complete(move |o| p.finish(o));
}

/// State of a control or binding form; `stage` is the child launched last.
struct Sequence {
    p: Pending,
    kind: NodeKind,
    stage: usize,
    iterations: u64,
    index: Datum,
}

enum Next {
    Launch(usize),
    Done(Outcome),
}

impl Sequence {
    fn advance(&mut self, input: Option<Outcome>) -> Next {
        let value = match input {
            None => return Next::Launch(0),
            Some(Err(e)) => return Next::Done(Err(e)),
            Some(Ok(v)) => v,
        };
        let site = &self.p.site;
        let arity = site.node().children.len();
        let launch = |stage: &mut usize, i| {
            *stage = i;
            Next::Launch(i)
        };
        let next = self.stage + 1;
        match self.kind {
            NodeKind::Block if next < arity => launch(&mut self.stage, next),
            NodeKind::Block => Next::Done(Ok(value)),
            NodeKind::If if self.stage == 0 => match truthy(&value) {
                Err(e) => Next::Done(Err(site.fail(e))),
                Ok(true) => launch(&mut self.stage, 1),
                Ok(false) if arity == 3 => launch(&mut self.stage, 2),
                Ok(false) => Next::Done(Ok(Datum::Nil)),
            },
            NodeKind::If => Next::Done(Ok(value)),
            NodeKind::While if self.stage == 0 => match truthy(&value) {
                Err(e) => Next::Done(Err(site.fail(e))),
                Ok(false) => Next::Done(Ok(Datum::Nil)),
                Ok(true) => {
                    self.iterations += 1;
                    match site.run.config.max_loop_iterations {
                        Some(limit) if self.iterations > limit => {
                            Next::Done(Err(RuntimeError::DepthLimit {
                                what: "loop iterations",
                                limit,
                                span: site.node().span,
                            }))
                        }
                        _ => launch(&mut self.stage, 1),
                    }
                }
            },
            NodeKind::While => launch(&mut self.stage, 0),
            NodeKind::Define(slot) | NodeKind::Store(slot) => {
                site.act.frame.set(slot, value.clone());
                Next::Done(Ok(value))
            }
            NodeKind::StoreRow(_) if self.stage == 0 => {
                self.index = value;
                launch(&mut self.stage, 1)
            }
            NodeKind::StoreRow(slot) => {
                let frame = &site.act.frame;
                match store_row_value(&frame.get(slot), &self.index, &value) {
                    Ok(updated) => {
                        frame.set(slot, updated.clone());
                        Next::Done(Ok(updated))
                    }
                    Err(e) => Next::Done(Err(site.fail(e))),
                }
            }
            _ => unreachable!("sequencing kinds only"),
        }
    }
}

/// Runs a sequencing node's steps until it finishes or must wait for a
/// child that has not resolved yet; the wait is a continuation.
fn drive(mut seq: Sequence, mut input: Option<Outcome>) {
    loop {
        let site = seq.p.site.clone();
        let launched = site.step(|| match seq.advance(input.take()) {
            Next::Launch(i) => Ok(launch(site.child(i), true)),
            Next::Done(o) => Err(o),
        });
        match launched {
            Err(o) => {
                let o = site.final_step(|| o);
                seq.p.finish(o);
                return;
            }
            Ok(f) => match f.try_get() {
                Some(o) => input = Some(o),
                None => {
                    f.on_complete(move |o| drive(seq, Some(o)));
                    return;
                }
            },
        }
    }
}
