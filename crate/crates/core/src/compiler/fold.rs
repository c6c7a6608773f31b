use super::{CompiledKernel, ExecNode, NodeKind, Program};
use crate::primitives::apply_prim;
use crate::value::Datum;

/// Replaces every arithmetic or comparison node whose operands are all
/// constants with the constant it evaluates to. Nodes whose evaluation
/// would fail are left in place so the error surfaces at run time.
pub fn fold_constants(kernel: &CompiledKernel) -> CompiledKernel {
    let base = kernel.nodes().first().map_or(0, |n| n.id);
    let mut out = Vec::with_capacity(kernel.node_count());
    if kernel.node_count() > 0 {
        fold_node(kernel, 0, &mut out);
    }
    for (i, n) in out.iter_mut().enumerate() {
        n.id = base + i as u32;
    }
    CompiledKernel::new(
        kernel.name.clone(),
        kernel.params.clone(),
        kernel.slot_names.clone(),
        out,
        kernel.source_hash,
        kernel.span,
    )
}

/// Folds every kernel and renumbers node ids program-wide.
pub fn fold_program(program: &Program) -> Program {
    let mut kernels: Vec<CompiledKernel> = program.kernels().iter().map(|k| fold_constants(k)).collect();
    super::renumber(&mut kernels);
    Program::new(kernels, program.source_hash)
}

fn fold_node(kernel: &CompiledKernel, local: usize, out: &mut Vec<ExecNode>) -> usize {
    let node = kernel.node(local);
    let at = out.len();
    out.push(ExecNode {
        id: 0,
        kind: node.kind.clone(),
        children: Vec::new(),
        span: node.span,
    });
    let children: Vec<usize> = node.children.iter().map(|&c| fold_node(kernel, c, out)).collect();
    if let NodeKind::Prim(p) = node.kind {
        if p.is_foldable() {
            let consts: Option<Vec<Datum>> = children
                .iter()
                .map(|&c| match &out[c].kind {
                    NodeKind::Const(d) => Some(d.clone()),
                    _ => None,
                })
                .collect();
            if let Some(Ok(value)) = consts.map(|args| apply_prim(p, &args)) {
                out.truncate(at + 1);
                out[at].kind = NodeKind::Const(value);
                return at;
            }
        }
    }
    out[at].children = children;
    at
}
