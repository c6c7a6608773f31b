use std::fmt;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use fut_core::physl::SourceSpan;

/// Why a subcommand stopped. User errors cover bad input programs, flags
/// and arguments; I/O errors cover the environment.
#[derive(Debug)]
pub enum Failure {
    User(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::User(_) => ExitCode::from(1),
            Failure::Io(_) => ExitCode::from(2),
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        Failure::Io(format!("error[IoError]: {}: {err}", path.display()))
    }

    pub fn usage(msg: impl fmt::Display) -> Self {
        Failure::User(format!("error[UsageError]: {msg}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::User(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

/// Renders `kind`, `message` and, when known, the source line under the
/// span with a caret marker.
pub fn diagnostic(kind: &str, message: &str, path: &Path, source: &str, span: Option<SourceSpan>) -> String {
    let mut out = format!("error[{kind}]: {message}");
    let Some(span) = span.filter(|s| s.line > 0) else {
        return out;
    };
    out.push_str(&format!("\n  --> {}:{}:{}", path.display(), span.line, span.col));
    if let Some(line) = source.lines().nth(span.line as usize - 1) {
        let gutter = span.line.to_string();
        let pad = " ".repeat(gutter.len());
        let col = (span.col as usize).saturating_sub(1).min(line.len());
        let width = span.byte_len.clamp(1, (line.len() - col).max(1));
        out.push_str(&format!(
            "\n{pad} |\n{gutter} | {line}\n{pad} | {}{}",
            " ".repeat(col),
            "^".repeat(width)
        ));
    }
    out
}

pub fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

/// Writes `contents` to a temporary file beside `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Failure::io(path, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Failure::io(path, e))?;
    tmp.persist(path).map_err(|e| Failure::io(path, e.error))?;
    Ok(())
}
