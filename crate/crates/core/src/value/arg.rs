use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{read_csv, Datum, ValueError};

#[derive(Debug, Error)]
pub enum ArgError {
    #[error("ArgumentError: {0}")]
    Syntax(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Value { path: PathBuf, source: ValueError },
}

/// Parses a typed argument value: `int:<n>`, `float:<x>`, `seed:<n>` (an
/// Int) or `csv:<path>` (a Vector or Matrix; relative paths resolve
/// against `base`).
pub fn parse_typed(text: &str, base: &Path) -> Result<Datum, ArgError> {
    let (ty, raw) = text
        .split_once(':')
        .ok_or_else(|| ArgError::Syntax(format!("`{text}` lacks a type prefix (int:, float:, csv:, seed:)")))?;
    let bad = |what: &str| ArgError::Syntax(format!("`{raw}` is not a valid {what}"));
    match ty {
        "int" | "seed" => raw.trim().parse().map(Datum::Int).map_err(|_| bad("integer")),
        "float" => raw.trim().parse().map(Datum::Float).map_err(|_| bad("float")),
        "csv" => {
            let path = base.join(raw);
            match read_csv(&path) {
                Err(source) => Err(ArgError::Io { path, source }),
                Ok(Err(source)) => Err(ArgError::Value { path, source }),
                Ok(Ok(d)) => Ok(d),
            }
        }
        other => Err(ArgError::Syntax(format!("unknown argument type `{other}`"))),
    }
}

/// Parses `name=type:value`.
pub fn parse_binding(text: &str, base: &Path) -> Result<(String, Datum), ArgError> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| ArgError::Syntax(format!("`{text}` is not of the form name=type:value")))?;
    if name.is_empty() {
        return Err(ArgError::Syntax(format!("`{text}` has an empty name")));
    }
    Ok((name.to_string(), parse_typed(value, base)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn typed_values() {
        let here = Path::new(".");
        assert_eq!(parse_typed("int:5", here).unwrap(), Datum::Int(5));
        assert_eq!(parse_typed("seed:7", here).unwrap(), Datum::Int(7));
        assert_eq!(parse_typed("float:0.25", here).unwrap(), Datum::Float(0.25));
        assert!(matches!(parse_typed("int:x", here), Err(ArgError::Syntax(_))));
        assert!(matches!(parse_typed("5", here), Err(ArgError::Syntax(_))));
        assert!(matches!(parse_typed("csv:/definitely/missing.csv", here), Err(ArgError::Io { .. })));
        let (k, v) = parse_binding("n=int:3", here).unwrap();
        assert_eq!((k.as_str(), v), ("n", Datum::Int(3)));
        assert!(parse_binding("=int:3", here).is_err());
    }
}
