use std::sync::Arc;
use std::time::Instant;

use super::future::Outcome;
use super::{EvalConfig, RuntimeError};
use crate::compiler::{CompiledKernel, ExecNode, NodeKind, Program};
use crate::perf::{exclusive_step, Phase, TraceSink};
use crate::primitives::{apply_prim, store_row_value, truthy, Frame};
use crate::value::{Datum, ValueError};

const STACK_BYTES: usize = 512 << 20;

struct Interp<'a> {
    program: &'a Program,
    config: EvalConfig,
    trace: Option<&'a TraceSink>,
}

pub(super) fn eval(
    program: &Arc<Program>,
    kernel: &Arc<CompiledKernel>,
    args: Vec<Datum>,
    config: EvalConfig,
    trace: Option<&TraceSink>,
) -> Result<Datum, RuntimeError> {
    let interp = Interp {
        program,
        config,
        trace,
    };
    std::thread::scope(|s| {
        std::thread::Builder::new()
            .name("fut-sequential".into())
            .stack_size(STACK_BYTES)
            .spawn_scoped(s, || {
                let frame = Frame::new(kernel.frame_size, args);
                interp.node(kernel, &frame, 1, 0)
            })
            .expect("spawn evaluator thread")
            .join()
            .expect("sequential evaluator panicked")
    })
}

fn fail(node: &ExecNode, error: ValueError) -> RuntimeError {
    RuntimeError::Value {
        error,
        span: node.span,
    }
}

impl Interp<'_> {
    fn node(&self, kernel: &CompiledKernel, frame: &Frame, depth: usize, local: usize) -> Outcome {
        let node = kernel.node(local);
        let cell = self.config.counters.then(|| kernel.counter_cell(local));
        let t0 = cell.map(|c| {
            c.add_eval();
            Instant::now()
        });
        if let Some(t) = self.trace {
            t.record(Phase::Begin, node.id, node.kind.name(), 0);
        }
        let o = exclusive_step(cell, || self.apply(kernel, frame, depth, node));
        if let Some(t) = self.trace {
            t.record(Phase::End, node.id, node.kind.name(), 0);
        }
        if let (Some(t0), Some(cell)) = (t0, cell) {
            cell.add_inclusive(t0.elapsed().as_nanos() as u64);
        }
        o
    }

    /// Evaluates every child left to right and reports the leftmost failure.
    fn children(&self, kernel: &CompiledKernel, frame: &Frame, depth: usize, node: &ExecNode) -> Result<Vec<Datum>, RuntimeError> {
        let results: Vec<Outcome> = node
            .children
            .iter()
            .map(|&c| self.node(kernel, frame, depth, c))
            .collect();
        results.into_iter().collect()
    }

    fn apply(&self, kernel: &CompiledKernel, frame: &Frame, depth: usize, node: &ExecNode) -> Outcome {
        let child = |i: usize| self.node(kernel, frame, depth, node.children[i]);
        match &node.kind {
            NodeKind::Const(d) => Ok(d.clone()),
            NodeKind::Var(slot) => Ok(frame.get(*slot)),
            NodeKind::Prim(p) => {
                let args = self.children(kernel, frame, depth, node)?;
                apply_prim(*p, &args).map_err(|e| fail(node, e))
            }
            NodeKind::Call { index, .. } => {
                let args = self.children(kernel, frame, depth, node)?;
                if depth + 1 > self.config.max_frames {
                    return Err(RuntimeError::DepthLimit {
                        what: "call depth",
                        limit: self.config.max_frames as u64,
                        span: node.span,
                    });
                }
                let callee = &self.program.kernels()[*index];
                let callee_frame = Frame::new(callee.frame_size, args);
                self.node(callee, &callee_frame, depth + 1, 0)
            }
            NodeKind::Block => {
                let mut last = Datum::Nil;
                for i in 0..node.children.len() {
                    last = child(i)?;
                }
                Ok(last)
            }
            NodeKind::If => match truthy(&child(0)?).map_err(|e| fail(node, e))? {
                true => child(1),
                false if node.children.len() == 3 => child(2),
                false => Ok(Datum::Nil),
            },
            NodeKind::While => {
                let mut iterations = 0u64;
                while truthy(&child(0)?).map_err(|e| fail(node, e))? {
                    iterations += 1;
                    if let Some(limit) = self.config.max_loop_iterations.filter(|&l| iterations > l) {
                        return Err(RuntimeError::DepthLimit {
                            what: "loop iterations",
                            limit,
                            span: node.span,
                        });
                    }
                    child(1)?;
                }
                Ok(Datum::Nil)
            }
            NodeKind::Define(slot) | NodeKind::Store(slot) => {
                let v = child(0)?;
                frame.set(*slot, v.clone());
                Ok(v)
            }
            NodeKind::StoreRow(slot) => {
                let index = child(0)?;
                let row = child(1)?;
                let updated = store_row_value(&frame.get(*slot), &index, &row).map_err(|e| fail(node, e))?;
                frame.set(*slot, updated.clone());
                Ok(updated)
            }
        }
    }
}
