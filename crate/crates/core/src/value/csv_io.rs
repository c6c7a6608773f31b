use std::fmt::Write as _;

use super::{Datum, Matrix, ValueError};

/// Shortest decimal text that parses back to the same binary64; always
/// contains `.` or `e` for finite values.
pub fn format_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Parses comma-separated decimal values. A single line yields a vector;
/// several lines yield a matrix with one row per line.
pub fn read_csv_str(text: &str) -> Result<Datum, ValueError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ValueError::type_error(format!("csv: {e}")))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| ValueError::type_error(format!("csv: not a number: {field:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    match rows.len() {
        0 => Ok(Datum::vector(Vec::new())),
        1 => Ok(Datum::vector(rows.pop().unwrap())),
        _ => Matrix::from_rows(&rows).map(Datum::Matrix),
    }
}

pub fn read_csv(path: &std::path::Path) -> std::io::Result<Result<Datum, ValueError>> {
    Ok(read_csv_str(&std::fs::read_to_string(path)?))
}

/// Writes a vector as one line or a matrix as one line per row.
pub fn write_csv(d: &Datum) -> Result<String, ValueError> {
    fn line(out: &mut String, xs: &[f64]) {
        for (i, x) in xs.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_f64(*x));
        }
        out.push('\n');
    }
    let mut out = String::new();
    match d {
        Datum::Vector(v) => line(&mut out, v.as_slice()),
        Datum::Matrix(m) => (0..m.rows()).for_each(|i| line(&mut out, m.row(i))),
        other => {
            return Err(ValueError::type_error(format!(
                "csv export needs a vector or matrix, got {}",
                other.type_name()
            )))
        }
    }
    Ok(out)
}
