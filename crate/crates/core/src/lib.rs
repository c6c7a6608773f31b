//! Futurized array-language toolkit: PhySL parsing, a PyLite front end,
//! execution-tree compilation and a dataflow executor with per-node
//! performance counters.

pub mod algorithms;
pub mod compiler;
pub mod executor;
pub mod perf;
pub mod physl;
pub mod primitives;
pub mod pyfrontend;
pub mod value;

use physl::SourceSpan;

/// Any failure from source text to result.
#[derive(Clone, Debug, thiserror::Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Syntax(#[from] physl::SyntaxError),
    #[error(transparent)]
    Frontend(#[from] pyfrontend::FrontendError),
    #[error(transparent)]
    Compile(#[from] compiler::CompileError),
    #[error(transparent)]
    Runtime(#[from] executor::RuntimeError),
}

impl Error {
    pub fn span(&self) -> Option<SourceSpan> {
        match self {
            Error::Syntax(e) => Some(e.span()),
            Error::Frontend(e) => Some(e.span()),
            Error::Compile(e) => Some(e.span()),
            Error::Runtime(e) => e.span(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Error::Syntax(e) => e.kind_name(),
            Error::Frontend(e) => e.kind_name(),
            Error::Compile(e) => e.kind_name(),
            Error::Runtime(e) => e.kind_name(),
        }
    }
}
