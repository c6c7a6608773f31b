use std::path::Path;
use std::sync::Arc;

use fut_core::compiler::{self, dump_program, CompileOptions, DumpFormat, Program, MAIN_KERNEL};
use fut_core::executor::{default_threads, EvalConfig, EvalContext, Mode};
use fut_core::perf;
use fut_core::physl::{self, Ast};
use fut_core::pyfrontend;
use fut_core::value::{self, ArgError, Datum};

use crate::output::{diagnostic, read_text, write_atomic, Failure};
use crate::RunArgs;

fn report(err: &fut_core::Error, path: &Path, source: &str) -> Failure {
    Failure::User(diagnostic(err.kind_name(), &err.to_string(), path, source, err.span()))
}

pub fn transpile(input: &Path, output: Option<&Path>) -> Result<(), Failure> {
    let source = read_text(input)?;
    let text = pyfrontend::transpile(&source).map_err(|e| report(&e.into(), input, &source))?;
    match output {
        Some(out) => write_atomic(out, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn is_pylite(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "py")
}

/// Source text to PhySL Ast; `.py` files go through the frontend first.
fn load(path: &Path, source: &str) -> Result<Ast, fut_core::Error> {
    if is_pylite(path) {
        Ok(pyfrontend::transpile_ast(source)?)
    } else {
        Ok(physl::parse(source)?)
    }
}

fn pick_entry(program: &Program, requested: Option<&str>) -> Result<String, Failure> {
    if let Some(name) = requested {
        return Ok(name.to_string());
    }
    if program.kernel(MAIN_KERNEL).is_some() {
        return Ok(MAIN_KERNEL.to_string());
    }
    let names: Vec<&str> = program.entry_names().collect();
    match names.as_slice() {
        [only] => Ok(only.to_string()),
        _ => Err(Failure::usage(format!(
            "program defines several kernels; choose one with --entry ({})",
            names.join(", ")
        ))),
    }
}

fn bind_args(program: &Program, entry: &str, raw: &[String]) -> Result<Vec<Datum>, Failure> {
    let base = std::env::current_dir().map_err(|e| Failure::Io(format!("error[IoError]: {e}")))?;
    let mut bound = Vec::new();
    for text in raw {
        let (name, datum) = value::parse_binding(text, &base).map_err(|e| match e {
            ArgError::Io { .. } => Failure::Io(format!("error[IoError]: {e}")),
            ArgError::Syntax(m) => Failure::User(format!("error[ArgumentError]: {m}")),
            ArgError::Value { ref source, .. } => Failure::User(format!("error[{}]: {e}", source.kind_name())),
        })?;
        if bound.iter().any(|(n, _)| n == &name) {
            return Err(Failure::usage(format!("argument `{name}` given twice")));
        }
        bound.push((name, datum));
    }
    // Unknown entries are reported by the evaluator with their own kind.
    let Some(kernel) = program.kernel(entry) else {
        return Ok(bound.into_iter().map(|(_, d)| d).collect());
    };
    if let Some((extra, _)) = bound.iter().find(|(n, _)| !kernel.params.contains(n)) {
        return Err(Failure::usage(format!(
            "`{entry}` has no parameter `{extra}` (parameters: {})",
            kernel.params.join(", ")
        )));
    }
    kernel
        .params
        .iter()
        .map(|p| {
            let i = bound.iter().position(|(n, _)| n == p);
            i.map(|i| bound[i].1.clone())
                .ok_or_else(|| Failure::usage(format!("missing --arg {p}=TYPE:VALUE for `{entry}`")))
        })
        .collect()
}

fn config(args: &RunArgs) -> EvalConfig {
    let mut config = match args.mode {
        Mode::Sequential => EvalConfig::sequential(),
        Mode::Dataflow => EvalConfig::dataflow(args.threads.map_or_else(default_threads, usize::from)),
    };
    config.counters = args.counters.is_some() || args.dump_tree.is_some();
    config.trace = args.trace.is_some();
    if let Some(m) = args.max_frames {
        config.max_frames = m;
    }
    config.max_loop_iterations = args.max_loop_iterations;
    config
}

fn write_artifacts(args: &RunArgs, ctx: &EvalContext, program: &Program) -> Result<(), Failure> {
    if let Some(path) = &args.counters {
        write_atomic(path, &perf::export_program_counters(program))?;
    }
    if let Some(path) = &args.trace {
        write_atomic(path, &perf::export_trace(&ctx.trace_events()))?;
    }
    if let Some(path) = &args.dump_tree {
        let format = if path.extension().is_some_and(|e| e == "json") {
            DumpFormat::Json
        } else {
            DumpFormat::Dot
        };
        write_atomic(path, &dump_program(program, format, true))?;
    }
    Ok(())
}

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let path = args.program.as_path();
    let source = read_text(path)?;
    let opts = CompileOptions {
        fold_constants: args.fold,
        test_primitives: args.test_primitives,
    };
    let program = load(path, &source)
        .and_then(|ast| Ok(compiler::compile(&ast, &opts)?))
        .map_err(|e| report(&e, path, &source))?;
    let program = Arc::new(program);
    let entry = pick_entry(&program, args.entry.as_deref())?;
    let inputs = bind_args(&program, &entry, &args.args)?;
    let ctx = EvalContext::new(config(args));
    let result = ctx.eval(&program, &entry, inputs);
    write_artifacts(args, &ctx, &program)?;
    match result {
        Ok(d) => {
            println!("{d}");
            Ok(())
        }
        Err(e) => Err(report(&e.into(), path, &source)),
    }
}
