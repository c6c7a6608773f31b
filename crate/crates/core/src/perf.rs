//! Per-node performance counters and their exporters.
//!
//! Counters aggregate per static tree node across invocations. Inclusive
//! time is wall time from a node's evaluation request to the resolution of
//! its result; exclusive time is the time spent in the node's own steps
//! (dispatching children and applying its operation), with any nested node
//! evaluation that ran inline on the same thread subtracted. Sibling
//! inclusive times may therefore sum to more than their parent's when the
//! siblings ran concurrently.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Mutex, PoisonError};
use std::time::Instant;

use serde::Serialize;

use crate::compiler::{CompiledKernel, Program};

/// Atomic counter cell attached to one execution-tree node.
#[derive(Debug, Default)]
pub struct CounterCell {
    count: AtomicU64,
    inclusive_ns: AtomicU64,
    exclusive_ns: AtomicU64,
}

/// Snapshot of a [`CounterCell`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct CounterSet {
    pub count: u64,
    pub inclusive_ns: u64,
    pub exclusive_ns: u64,
}

impl CounterCell {
    pub fn add_eval(&self) {
        self.count.fetch_add(1, Ordering::Relaxed);
    }

    pub fn add_inclusive(&self, ns: u64) {
        self.inclusive_ns.fetch_add(ns, Ordering::Relaxed);
    }

    pub fn add_exclusive(&self, ns: u64) {
        self.exclusive_ns.fetch_add(ns, Ordering::Relaxed);
    }

    pub fn snapshot(&self) -> CounterSet {
        CounterSet {
            count: self.count.load(Ordering::Relaxed),
            inclusive_ns: self.inclusive_ns.load(Ordering::Relaxed),
            exclusive_ns: self.exclusive_ns.load(Ordering::Relaxed),
        }
    }

    pub fn reset(&self) {
        self.count.store(0, Ordering::Relaxed);
        self.inclusive_ns.store(0, Ordering::Relaxed);
        self.exclusive_ns.store(0, Ordering::Relaxed);
    }
}

thread_local! {
    static NESTED: RefCell<Vec<u64>> = const { RefCell::new(Vec::new()) };
}

/// Runs `f` as one of a node's own steps and charges its duration, minus
/// any nested steps that ran inside it on this thread, to `cell`'s
/// exclusive time.
pub fn exclusive_step<R>(cell: Option<&CounterCell>, f: impl FnOnce() -> R) -> R {
    let Some(cell) = cell else {
        return f();
    };
    let start = Instant::now();
    NESTED.with(|n| n.borrow_mut().push(0));
    let result = f();
    let elapsed = start.elapsed().as_nanos() as u64;
    let nested = NESTED.with(|n| {
        let mut n = n.borrow_mut();
        let nested = n.pop().unwrap_or(0);
        if let Some(parent) = n.last_mut() {
            *parent += elapsed;
        }
        nested
    });
    cell.add_exclusive(elapsed.saturating_sub(nested));
    result
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Phase {
    #[serde(rename = "B")]
    Begin,
    #[serde(rename = "E")]
    End,
}

/// One begin or end event of a node's apply step.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEvent {
    pub phase: Phase,
    pub node: u32,
    pub kind: String,
    pub worker: usize,
    /// Microseconds since the start of the run (monotonic clock).
    pub ts_us: f64,
}

/// Collects trace events for one run.
pub struct TraceSink {
    start: Instant,
    events: Mutex<Vec<TraceEvent>>,
}

impl Default for TraceSink {
    fn default() -> Self {
        TraceSink::new()
    }
}

impl TraceSink {
    pub fn new() -> Self {
        TraceSink {
            start: Instant::now(),
            events: Mutex::new(Vec::new()),
        }
    }

    pub fn record(&self, phase: Phase, node: u32, kind: &str, worker: usize) {
        let ts_us = self.start.elapsed().as_nanos() as f64 / 1000.0;
        self.events
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .push(TraceEvent {
                phase,
                node,
                kind: kind.to_string(),
                worker,
                ts_us,
            });
    }

    pub fn events(&self) -> Vec<TraceEvent> {
        self.events
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .clone()
    }
}

#[derive(Serialize)]
struct TraceRecord<'a> {
    name: &'a str,
    ph: Phase,
    ts: f64,
    pid: u32,
    tid: usize,
    args: TraceArgs,
}

#[derive(Serialize)]
struct TraceArgs {
    node: u32,
}

/// Trace-event JSON array loadable by standard trace viewers.
pub fn export_trace(events: &[TraceEvent]) -> String {
    let records: Vec<TraceRecord<'_>> = events
        .iter()
        .map(|e| TraceRecord {
            name: &e.kind,
            ph: e.phase,
            ts: e.ts_us,
            pid: 1,
            tid: e.worker,
            args: TraceArgs { node: e.node },
        })
        .collect();
    serde_json::to_string(&records).expect("trace records serialize")
}

/// Checks that begin/end events pair up per worker with proper nesting and
/// non-decreasing timestamps.
pub fn validate_trace(events: &[TraceEvent]) -> Result<(), String> {
    let mut stacks: HashMap<usize, Vec<&TraceEvent>> = HashMap::new();
    for e in events {
        let stack = stacks.entry(e.worker).or_default();
        match e.phase {
            Phase::Begin => stack.push(e),
            Phase::End => {
                let Some(b) = stack.pop() else {
                    return Err(format!("E for node {} on tid {} without B", e.node, e.worker));
                };
                if b.node != e.node {
                    return Err(format!(
                        "E for node {} closes B for node {} on tid {}",
                        e.node, b.node, e.worker
                    ));
                }
                if e.ts_us < b.ts_us {
                    return Err(format!("node {}: E.ts {} < B.ts {}", e.node, e.ts_us, b.ts_us));
                }
            }
        }
    }
    match stacks.iter().find(|(_, s)| !s.is_empty()) {
        Some((tid, s)) => Err(format!("unclosed B for node {} on tid {tid}", s[0].node)),
        None => Ok(()),
    }
}

/// Number of begin events per node id.
pub fn begin_counts(events: &[TraceEvent]) -> HashMap<u32, u64> {
    let mut counts = HashMap::new();
    for e in events.iter().filter(|e| e.phase == Phase::Begin) {
        *counts.entry(e.node).or_insert(0) += 1;
    }
    counts
}

pub const COUNTER_CSV_HEADER: &str = "node_id,kind,line,col,count,inclusive_ns,exclusive_ns";

fn write_counter_rows(w: &mut csv::Writer<Vec<u8>>, kernel: &CompiledKernel) {
    for (local, node) in kernel.nodes().iter().enumerate() {
        let c = kernel.counters(local);
        w.write_record([
            node.id.to_string(),
            node.kind.label(kernel),
            node.span.line.to_string(),
            node.span.col.to_string(),
            c.count.to_string(),
            c.inclusive_ns.to_string(),
            c.exclusive_ns.to_string(),
        ])
        .expect("in-memory csv write");
    }
}

fn counters_csv(kernels: &[&CompiledKernel]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COUNTER_CSV_HEADER.split(','))
        .expect("in-memory csv write");
    for k in kernels {
        write_counter_rows(&mut w, k);
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf8 csv")
}

/// Counter table of one kernel, rows in pre-order.
pub fn export_counters(kernel: &CompiledKernel) -> String {
    counters_csv(&[kernel])
}

/// Counter table of every kernel of a program, in definition order.
pub fn export_program_counters(program: &Program) -> String {
    let kernels: Vec<&CompiledKernel> = program.kernels().iter().map(|k| &**k).collect();
    counters_csv(&kernels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(phase: Phase, node: u32, worker: usize, ts_us: f64) -> TraceEvent {
        TraceEvent {
            phase,
            node,
            kind: "k".into(),
            worker,
            ts_us,
        }
    }

    #[test]
    fn exclusive_subtracts_nested_steps() {
        let outer = CounterCell::default();
        let inner = CounterCell::default();
        exclusive_step(Some(&outer), || {
            exclusive_step(Some(&inner), || std::thread::sleep(std::time::Duration::from_millis(20)));
        });
        let (o, i) = (outer.snapshot(), inner.snapshot());
        assert!(i.exclusive_ns >= 20_000_000);
        assert!(o.exclusive_ns < 5_000_000, "{o:?}");
    }

    #[test]
    fn empty_trace_is_an_empty_array() {
        assert_eq!(export_trace(&[]), "[]");
    }

    #[test]
    fn trace_json_fields() {
        let text = export_trace(&[ev(Phase::Begin, 3, 1, 1.5), ev(Phase::End, 3, 1, 2.0)]);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v[0]["ph"], "B");
        assert_eq!(v[0]["pid"], 1);
        assert_eq!(v[0]["tid"], 1);
        assert_eq!(v[0]["args"]["node"], 3);
        assert_eq!(v[1]["ph"], "E");
        assert_eq!(v[1]["name"], "k");
    }

    #[test]
    fn validator_catches_bad_traces() {
        assert!(validate_trace(&[ev(Phase::Begin, 1, 0, 0.0), ev(Phase::End, 1, 0, 1.0)]).is_ok());
        assert!(validate_trace(&[ev(Phase::Begin, 1, 0, 0.0)]).is_err());
        assert!(validate_trace(&[ev(Phase::Begin, 1, 0, 0.0), ev(Phase::End, 1, 1, 1.0)]).is_err());
        assert!(validate_trace(&[ev(Phase::Begin, 1, 0, 2.0), ev(Phase::End, 1, 0, 1.0)]).is_err());
        assert!(validate_trace(&[
            ev(Phase::Begin, 1, 0, 0.0),
            ev(Phase::Begin, 2, 0, 0.5),
            ev(Phase::End, 1, 0, 1.0),
            ev(Phase::End, 2, 0, 1.0)
        ])
        .is_err());
    }
}
