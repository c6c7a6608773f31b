//! Python module `fut`: transpile PyLite, compile PhySL and evaluate
//! kernels on the dataflow executor.
//!
//! ```python
//! import fut
//! prog = fut.Program.from_pylite(open("fact.py").read())
//! fut.Context(threads=4).eval(prog, "fact", [5])   # 120
//! ```

use std::sync::Arc;

use fut_core::compiler::{self, dump_program, CompileOptions, DumpFormat};
use fut_core::executor::{EvalConfig, EvalContext, Mode};
use fut_core::value::{Datum, Matrix};
use fut_core::{perf, physl, pyfrontend};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyTypeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyFloat, PyInt, PyList, PyString};

create_exception!(fut, FutError, PyException, "Error raised by the fut toolkit; `kind` names the error.");

fn fut_err(e: impl Into<fut_core::Error>) -> PyErr {
    let e = e.into();
    let err = FutError::new_err(e.to_string());
    Python::attach(|py| {
        let value = err.value(py);
        let _ = value.setattr("kind", e.kind_name());
        let _ = value.setattr("span", e.span().map(|s| (s.line, s.col)));
    });
    err
}

fn numbers(items: &Bound<'_, PyList>) -> Option<Vec<f64>> {
    items
        .iter()
        .map(|x| {
            if x.is_instance_of::<PyBool>() {
                None
            } else {
                x.extract::<f64>().ok()
            }
        })
        .collect()
}

/// Python value to Datum: numbers and strings map to scalars, a flat list of
/// numbers to a Vector, a non-empty list of equal-length number lists to a
/// Matrix, and any other list to a List.
pub fn to_datum(obj: &Bound<'_, PyAny>) -> PyResult<Datum> {
    if obj.is_none() {
        return Ok(Datum::Nil);
    }
    if obj.is_instance_of::<PyBool>() {
        return Ok(Datum::Bool(obj.extract()?));
    }
    if obj.is_instance_of::<PyInt>() {
        return Ok(Datum::Int(obj.extract()?));
    }
    if obj.is_instance_of::<PyFloat>() {
        return Ok(Datum::Float(obj.extract()?));
    }
    if let Ok(s) = obj.cast::<PyString>() {
        return Ok(Datum::str(&s.to_cow()?));
    }
    let Ok(list) = obj.cast::<PyList>() else {
        return Err(PyTypeError::new_err(format!(
            "cannot convert {} to a fut value",
            obj.get_type().name()?
        )));
    };
    if !list.is_empty() {
        if let Some(v) = numbers(list) {
            return Ok(Datum::vector(v));
        }
        let rows: Option<Vec<Vec<f64>>> = list
            .iter()
            .map(|r| r.cast::<PyList>().ok().and_then(|r| numbers(r)))
            .collect();
        if let Some(rows) = rows.filter(|r| r.iter().all(|x| !x.is_empty())) {
            return Matrix::from_rows(&rows)
                .map(Datum::Matrix)
                .map_err(|e| PyValueError::new_err(e.to_string()));
        }
    }
    let items = list.iter().map(|x| to_datum(&x)).collect::<PyResult<Vec<_>>>()?;
    Ok(Datum::list(items))
}

pub fn from_datum<'py>(py: Python<'py>, d: &Datum) -> PyResult<Bound<'py, PyAny>> {
    Ok(match d {
        Datum::Nil => py.None().into_bound(py),
        Datum::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Datum::Int(i) => i.into_pyobject(py)?.into_any(),
        Datum::Float(x) => x.into_pyobject(py)?.into_any(),
        Datum::Str(s) => PyString::new(py, s).into_any(),
        Datum::Vector(v) => PyList::new(py, v.as_slice())?.into_any(),
        Datum::Matrix(m) => PyList::new(py, m.to_rows())?.into_any(),
        Datum::List(items) => {
            let out = items.iter().map(|x| from_datum(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, out)?.into_any()
        }
    })
}

/// PyLite source to PhySL text.
#[pyfunction]
fn transpile(source: &str) -> PyResult<String> {
    pyfrontend::transpile(source).map_err(fut_err)
}

/// A compiled program: one execution tree per kernel.
#[pyclass(frozen)]
struct Program {
    inner: Arc<compiler::Program>,
}

#[pymethods]
impl Program {
    /// Compiles PhySL source.
    #[new]
    #[pyo3(signature = (source, fold=false))]
    fn new(source: &str, fold: bool) -> PyResult<Self> {
        let ast = physl::parse(source).map_err(fut_err)?;
        Self::build(&ast, fold)
    }

    /// Transpiles and compiles PyLite source.
    #[staticmethod]
    #[pyo3(signature = (source, fold=false))]
    fn from_pylite(source: &str, fold: bool) -> PyResult<Self> {
        let ast = pyfrontend::transpile_ast(source).map_err(fut_err)?;
        Self::build(&ast, fold)
    }

    fn kernels(&self) -> Vec<String> {
        self.inner.entry_names().map(str::to_string).collect()
    }

    fn params(&self, kernel: &str) -> PyResult<Vec<String>> {
        self.inner
            .kernel(kernel)
            .map(|k| k.params.clone())
            .ok_or_else(|| PyValueError::new_err(format!("no kernel named `{kernel}`")))
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    /// Execution trees as `"dot"` or `"json"`, with counters.
    #[pyo3(signature = (format="dot"))]
    fn dump(&self, format: &str) -> PyResult<String> {
        let f: DumpFormat = format.parse().map_err(PyValueError::new_err)?;
        Ok(dump_program(&self.inner, f, true))
    }

    /// Per-node counters as CSV.
    fn counters_csv(&self) -> String {
        perf::export_program_counters(&self.inner)
    }

    fn reset_counters(&self) {
        self.inner.reset_counters();
    }

    fn __repr__(&self) -> String {
        format!("Program(kernels={:?}, nodes={})", self.kernels(), self.node_count())
    }
}

impl Program {
    fn build(ast: &physl::Ast, fold: bool) -> PyResult<Self> {
        let opts = CompileOptions {
            fold_constants: fold,
            ..Default::default()
        };
        let inner = compiler::compile(ast, &opts).map_err(fut_err)?;
        Ok(Program { inner: Arc::new(inner) })
    }
}

/// An evaluator with its own worker pool.
#[pyclass(frozen)]
struct Context {
    inner: EvalContext,
}

#[pymethods]
impl Context {
    #[new]
    #[pyo3(signature = (threads=None, mode="dataflow", counters=false, trace=false))]
    fn new(threads: Option<usize>, mode: &str, counters: bool, trace: bool) -> PyResult<Self> {
        let mode: Mode = mode.parse().map_err(PyValueError::new_err)?;
        let base = match (mode, threads) {
            (_, Some(0)) => return Err(PyValueError::new_err("threads must be at least 1")),
            (Mode::Sequential, _) => EvalConfig::sequential(),
            (Mode::Dataflow, Some(w)) => EvalConfig::dataflow(w),
            (Mode::Dataflow, None) => EvalConfig::default(),
        };
        Ok(Context {
            inner: EvalContext::new(base.with_counters(counters).with_trace(trace)),
        })
    }

    #[getter]
    fn threads(&self) -> usize {
        self.inner.config.threads
    }

    /// Evaluates `entry` of `program`; the GIL is released meanwhile.
    #[pyo3(signature = (program, entry, args=Vec::new()))]
    fn eval<'py>(
        &self,
        py: Python<'py>,
        program: &Program,
        entry: &str,
        args: Vec<Bound<'py, PyAny>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let args = args.iter().map(to_datum).collect::<PyResult<Vec<_>>>()?;
        let prog = program.inner.clone();
        let out = py.detach(|| self.inner.eval(&prog, entry, args));
        from_datum(py, &out.map_err(fut_err)?)
    }

    /// Trace events recorded so far, as trace-event JSON.
    fn trace_json(&self) -> String {
        perf::export_trace(&self.inner.trace_events())
    }
}

#[pymodule]
fn fut(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(transpile, m)?)?;
    m.add_class::<Program>()?;
    m.add_class::<Context>()?;
    m.add("FutError", m.py().get_type::<FutError>())?;
    Ok(())
}
