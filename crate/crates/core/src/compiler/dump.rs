use std::fmt::Write as _;

use serde::Serialize;

use super::{CompiledKernel, Program};
use crate::perf::CounterSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DumpFormat {
    Dot,
    Json,
}

impl std::str::FromStr for DumpFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dot" => Ok(DumpFormat::Dot),
            "json" => Ok(DumpFormat::Json),
            other => Err(format!("unknown dump format `{other}` (expected dot or json)")),
        }
    }
}

#[derive(Serialize)]
struct JsonSpan {
    line: u32,
    col: u32,
}

#[derive(Serialize)]
struct JsonNode {
    id: u32,
    kind: String,
    span: JsonSpan,
    counters: Option<CounterSet>,
    children: Vec<JsonNode>,
}

fn json_node(kernel: &CompiledKernel, local: usize, with_counters: bool) -> JsonNode {
    let n = kernel.node(local);
    JsonNode {
        id: n.id,
        kind: n.kind.label(kernel),
        span: JsonSpan {
            line: n.span.line,
            col: n.span.col,
        },
        counters: with_counters.then(|| kernel.counters(local)),
        children: n
            .children
            .iter()
            .map(|&c| json_node(kernel, c, with_counters))
            .collect(),
    }
}

fn ms(ns: u64) -> String {
    format!("{:.3}ms", ns as f64 / 1e6)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn dot_body(kernel: &CompiledKernel, with_counters: bool, out: &mut String) {
    for (local, n) in kernel.nodes().iter().enumerate() {
        let mut label = dot_escape(&n.kind.label(kernel));
        if with_counters {
            let c = kernel.counters(local);
            let _ = write!(
                label,
                "\\ncount={}\\nincl={} excl={}",
                c.count,
                ms(c.inclusive_ns),
                ms(c.exclusive_ns)
            );
        }
        let _ = writeln!(out, "  n{} [label=\"{}\"];", n.id, label);
    }
    for n in kernel.nodes() {
        for &c in &n.children {
            let _ = writeln!(out, "  n{} -> n{};", n.id, kernel.node(c).id);
        }
    }
}

/// Renders one kernel's execution tree, optionally annotated with counters.
pub fn dump_tree(kernel: &CompiledKernel, format: DumpFormat, with_counters: bool) -> String {
    match format {
        DumpFormat::Json => {
            let root = json_node(kernel, 0, with_counters);
            serde_json::to_string_pretty(&root).expect("tree serializes")
        }
        DumpFormat::Dot => {
            let mut out = format!("digraph \"{}\" {{\n  node [shape=box];\n", dot_escape(&kernel.name));
            dot_body(kernel, with_counters, &mut out);
            out.push_str("}\n");
            out
        }
    }
}

/// Renders every kernel of a program. JSON output is an object keyed by
/// kernel name; DOT output is one graph with a cluster per kernel.
pub fn dump_program(program: &Program, format: DumpFormat, with_counters: bool) -> String {
    match format {
        DumpFormat::Json => {
            let map: serde_json::Map<String, serde_json::Value> = program
                .kernels()
                .iter()
                .map(|k| {
                    let v = serde_json::to_value(json_node(k, 0, with_counters)).expect("tree serializes");
                    (k.name.clone(), v)
                })
                .collect();
            serde_json::to_string_pretty(&map).expect("tree serializes")
        }
        DumpFormat::Dot => {
            let mut out = String::from("digraph program {\n  node [shape=box];\n");
            for (i, k) in program.kernels().iter().enumerate() {
                let _ = writeln!(out, "  subgraph cluster_{i} {{\n  label=\"{}\";", dot_escape(&k.name));
                dot_body(k, with_counters, &mut out);
                out.push_str("  }\n");
            }
            out.push_str("}\n");
            out
        }
    }
}
