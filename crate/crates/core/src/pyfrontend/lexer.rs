use super::FrontendError;
use crate::physl::SourceSpan;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PyToken {
    pub tok: Tok,
    pub span: SourceSpan,
}

const OPERATORS: &[&str] = &[
    "**=", "//=", "**", "//", "+=", "-=", "*=", "/=", "@=", "%=", "<=", ">=", "==", "!=", "->",
    "+", "-", "*", "/", "@", "%", "<", ">", "=", "(", ")", "[", "]", ",", ":", ".", ";", "{", "}",
    "&", "|", "^", "~",
];

/// Tokenizes PyLite source into logical lines with INDENT/DEDENT markers.
/// Indentation must use spaces; newlines inside brackets are ignored.
pub fn tokenize(source: &str) -> Result<Vec<PyToken>, FrontendError> {
    let mut tokens = Vec::new();
    let mut indents: Vec<usize> = vec![0];
    let mut depth = 0usize;
    let mut offset = 0usize;

    for (line_idx, raw_line) in source.split_inclusive('\n').enumerate() {
        let line_no = line_idx as u32 + 1;
        let line = raw_line.trim_end_matches(['\n', '\r']);
        let line_start = offset;
        offset += raw_line.len();

        let content_start = line.len() - line.trim_start_matches([' ', '\t']).len();
        let rest = &line[content_start..];
        if depth == 0 {
            if rest.is_empty() || rest.starts_with('#') {
                continue;
            }
            let lead = &line[..content_start];
            if lead.contains('\t') {
                return Err(FrontendError::Indentation {
                    span: SourceSpan::new(line_no, 1, line_start, content_start),
                    message: "tabs are not allowed in indentation".into(),
                });
            }
            let width = content_start;
            let here = SourceSpan::new(line_no, width as u32 + 1, line_start + width, 0);
            let current = *indents.last().unwrap();
            if width > current {
                indents.push(width);
                tokens.push(PyToken {
                    tok: Tok::Indent,
                    span: here,
                });
            } else {
                while width < *indents.last().unwrap() {
                    indents.pop();
                    tokens.push(PyToken {
                        tok: Tok::Dedent,
                        span: here,
                    });
                }
                if width != *indents.last().unwrap() {
                    return Err(FrontendError::Indentation {
                        span: here,
                        message: "unindent does not match any outer indentation level".into(),
                    });
                }
            }
        }

        let mut chars = line.char_indices().skip_while(|&(i, _)| i < content_start).peekable();
        while let Some(&(i, c)) = chars.peek() {
            let col = line[..i].chars().count() as u32 + 1;
            let span_of = |len: usize| SourceSpan::new(line_no, col, line_start + i, len);
            if c == ' ' || c == '\t' {
                chars.next();
                continue;
            }
            if c == '#' {
                break;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let end = line[i..]
                    .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                    .map_or(line.len(), |n| i + n);
                tokens.push(PyToken {
                    tok: Tok::Name(line[i..end].to_string()),
                    span: span_of(end - i),
                });
                while chars.peek().is_some_and(|&(j, _)| j < end) {
                    chars.next();
                }
                continue;
            }
            if c.is_ascii_digit() || (c == '.' && line[i + 1..].starts_with(|d: char| d.is_ascii_digit())) {
                let (tok, len) = number(&line[i..], span_of(0))?;
                tokens.push(PyToken {
                    tok,
                    span: span_of(len),
                });
                while chars.peek().is_some_and(|&(j, _)| j < i + len) {
                    chars.next();
                }
                continue;
            }
            if c == '"' || c == '\'' {
                let (text, len) = string(&line[i..], c, span_of(0))?;
                tokens.push(PyToken {
                    tok: Tok::Str(text),
                    span: span_of(len),
                });
                while chars.peek().is_some_and(|&(j, _)| j < i + len) {
                    chars.next();
                }
                continue;
            }
            let Some(op) = OPERATORS.iter().find(|op| line[i..].starts_with(**op)) else {
                return Err(FrontendError::Parse {
                    span: span_of(c.len_utf8()),
                    expected: "a token".into(),
                    found: format!("character {c:?}"),
                });
            };
            match *op {
                "(" | "[" | "{" => depth += 1,
                ")" | "]" | "}" => depth = depth.saturating_sub(1),
                _ => {}
            }
            tokens.push(PyToken {
                tok: Tok::Op(op),
                span: span_of(op.len()),
            });
            for _ in 0..op.len() {
                chars.next();
            }
        }
        if depth == 0 {
            tokens.push(PyToken {
                tok: Tok::Newline,
                span: SourceSpan::new(line_no, line.chars().count() as u32 + 1, line_start + line.len(), 0),
            });
        }
    }
    let eof = SourceSpan::new(
        source.lines().count().max(1) as u32,
        1,
        source.len(),
        0,
    );
    while indents.len() > 1 {
        indents.pop();
        tokens.push(PyToken {
            tok: Tok::Dedent,
            span: eof,
        });
    }
    tokens.push(PyToken { tok: Tok::Eof, span: eof });
    Ok(tokens)
}

fn number(text: &str, span: SourceSpan) -> Result<(Tok, usize), FrontendError> {
    let bytes = text.as_bytes();
    let mut end = 0;
    let digits = |end: &mut usize| {
        while *end < bytes.len() && bytes[*end].is_ascii_digit() {
            *end += 1;
        }
    };
    digits(&mut end);
    let mut is_float = false;
    if end < bytes.len() && bytes[end] == b'.' {
        is_float = true;
        end += 1;
        digits(&mut end);
    }
    if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
        let mut probe = end + 1;
        if probe < bytes.len() && (bytes[probe] == b'+' || bytes[probe] == b'-') {
            probe += 1;
        }
        if probe < bytes.len() && bytes[probe].is_ascii_digit() {
            is_float = true;
            end = probe;
            digits(&mut end);
        }
    }
    let literal = &text[..end];
    let span = SourceSpan { byte_len: end, ..span };
    let bad = || FrontendError::Parse {
        span,
        expected: "a numeric literal".into(),
        found: literal.to_string(),
    };
    if is_float {
        literal.parse().map(|x| (Tok::Float(x), end)).map_err(|_| bad())
    } else {
        literal.parse().map(|i| (Tok::Int(i), end)).map_err(|_| bad())
    }
}

fn string(text: &str, quote: char, span: SourceSpan) -> Result<(String, usize), FrontendError> {
    let mut out = String::new();
    let mut iter = text.char_indices().skip(1);
    while let Some((i, c)) = iter.next() {
        match c {
            c if c == quote => return Ok((out, i + 1)),
            '\\' => match iter.next() {
                Some((_, 'n')) => out.push('\n'),
                Some((_, 't')) => out.push('\t'),
                Some((_, '\\')) => out.push('\\'),
                Some((_, '"')) => out.push('"'),
                Some((_, '\'')) => out.push('\''),
                other => {
                    return Err(FrontendError::Parse {
                        span,
                        expected: "a supported escape".into(),
                        found: format!("{:?}", other.map(|(_, c)| c)),
                    })
                }
            },
            c => out.push(c),
        }
    }
    Err(FrontendError::Parse {
        span: SourceSpan {
            byte_len: text.len(),
            ..span
        },
        expected: "closing quote".into(),
        found: "end of line".into(),
    })
}
