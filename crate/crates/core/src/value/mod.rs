//! Runtime value universe and the deterministic numeric kernels shared by
//! every primitive.
//!
//! All array storage is row-major and every kernel walks its output in
//! row-major index order. Kernels are serial; parallelism only exists between
//! execution-tree nodes, which keeps results bitwise reproducible for any
//! worker count.

mod arg;
mod csv_io;
mod ops;
mod rng;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use arg::{parse_binding, parse_typed, ArgError};
pub use csv_io::{format_f64, read_csv, read_csv_str, write_csv};
pub use ops::{
    broadcast_elementwise, compare, diag, dot, elementwise_unary, identity, random, shape_of,
    slice_row, solve, store_row, sum, transpose, zeros, BinaryOp, CompareOp, UnaryOp,
    SINGULAR_PIVOT,
};
pub use rng::{splitmix64_unit_f64, SplitMixStream};

/// Dense 1-D array of binary64 values.
#[derive(Clone, PartialEq)]
pub struct Vector(Arc<[f64]>);

impl Vector {
    pub fn new(data: impl Into<Arc<[f64]>>) -> Self {
        Vector(data.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Dense row-major 2-D array of binary64 values.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Arc<[f64]>,
}

impl Matrix {
    /// Builds a matrix, checking that `data.len() == rows * cols`.
    pub fn new(rows: usize, cols: usize, data: impl Into<Arc<[f64]>>) -> Result<Self, ValueError> {
        let data = data.into();
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(ValueError::ShapeMismatch {
                lhs: Shape::Matrix(rows, cols),
                rhs: Shape::Vector(data.len()),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, ValueError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(ValueError::RaggedMatrix);
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Matrix::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.rows).map(|i| self.row(i)))
            .finish()
    }
}

/// A runtime value. Values are immutable; cloning shares the backing buffers.
#[derive(Clone, Debug, PartialEq)]
pub enum Datum {
    Nil,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(Arc<str>),
    List(Arc<[Datum]>),
    Vector(Vector),
    Matrix(Matrix),
}

impl Datum {
    pub fn vector(data: impl Into<Arc<[f64]>>) -> Datum {
        Datum::Vector(Vector::new(data))
    }

    pub fn matrix(rows: &[Vec<f64>]) -> Result<Datum, ValueError> {
        Matrix::from_rows(rows).map(Datum::Matrix)
    }

    pub fn list(items: impl Into<Arc<[Datum]>>) -> Datum {
        Datum::List(items.into())
    }

    pub fn str(s: &str) -> Datum {
        Datum::Str(Arc::from(s))
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Datum::Nil => "nil",
            Datum::Bool(_) => "bool",
            Datum::Int(_) => "int",
            Datum::Float(_) => "float",
            Datum::Str(_) => "str",
            Datum::List(_) => "list",
            Datum::Vector(_) => "vector",
            Datum::Matrix(_) => "matrix",
        }
    }

    pub fn shape(&self) -> Option<Shape> {
        match self {
            Datum::Int(_) | Datum::Float(_) => Some(Shape::Scalar),
            Datum::Vector(v) => Some(Shape::Vector(v.len())),
            Datum::Matrix(m) => Some(Shape::Matrix(m.rows(), m.cols())),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Datum::Int(i) => Some(i as f64),
            Datum::Float(x) => Some(x),
            _ => None,
        }
    }

    /// Structural equality where floats compare by bit pattern, so `NaN`
    /// equals an identical `NaN` and `0.0` differs from `-0.0`.
    pub fn bitwise_eq(&self, other: &Datum) -> bool {
        fn bits_eq(a: &[f64], b: &[f64]) -> bool {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        }
        match (self, other) {
            (Datum::Float(a), Datum::Float(b)) => a.to_bits() == b.to_bits(),
            (Datum::Vector(a), Datum::Vector(b)) => bits_eq(a.as_slice(), b.as_slice()),
            (Datum::Matrix(a), Datum::Matrix(b)) => {
                a.rows() == b.rows() && a.cols() == b.cols() && bits_eq(a.as_slice(), b.as_slice())
            }
            (Datum::List(a), Datum::List(b)) => {
                a.len() == b.len() && a.iter().zip(b.iter()).all(|(x, y)| x.bitwise_eq(y))
            }
            _ => self == other,
        }
    }
}

impl fmt::Display for Datum {
    /// Canonical text form: scalars plain, vectors as one CSV line, matrices
    /// as one CSV line per row, list items separated by a blank line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Datum::Nil => f.write_str("nil"),
            Datum::Bool(b) => write!(f, "{b}"),
            Datum::Int(i) => write!(f, "{i}"),
            Datum::Float(x) => f.write_str(&format_f64(*x)),
            Datum::Str(s) => f.write_str(s),
            Datum::Vector(_) | Datum::Matrix(_) => {
                let text = write_csv(self).map_err(|_| fmt::Error)?;
                f.write_str(text.trim_end_matches('\n'))
            }
            Datum::List(items) => {
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str("\n\n")?;
                    }
                    write!(f, "{item}")?;
                }
                Ok(())
            }
        }
    }
}

impl From<f64> for Datum {
    fn from(x: f64) -> Self {
        Datum::Float(x)
    }
}

impl From<i64> for Datum {
    fn from(i: i64) -> Self {
        Datum::Int(i)
    }
}

impl From<bool> for Datum {
    fn from(b: bool) -> Self {
        Datum::Bool(b)
    }
}

/// Rank and extents of a numeric value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn rank(&self) -> usize {
        match self {
            Shape::Scalar => 0,
            Shape::Vector(_) => 1,
            Shape::Matrix(..) => 2,
        }
    }

    pub fn dims(&self) -> Vec<usize> {
        match *self {
            Shape::Scalar => vec![],
            Shape::Vector(n) => vec![n],
            Shape::Matrix(r, c) => vec![r, c],
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Scalar => f.write_str("()"),
            Shape::Vector(n) => write!(f, "({n})"),
            Shape::Matrix(r, c) => write!(f, "({r}, {c})"),
        }
    }
}

/// Failures raised by the value kernels.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum ValueError {
    #[error("ShapeMismatch: {lhs} vs {rhs}")]
    ShapeMismatch { lhs: Shape, rhs: Shape },
    #[error("TypeError: {0}")]
    TypeError(String),
    #[error("Singular: pivot magnitude {pivot:e} below threshold at column {column}")]
    Singular { column: usize, pivot: f64 },
    #[error("AxisOutOfRange: axis {axis} for rank {rank}")]
    AxisOutOfRange { axis: i64, rank: usize },
    #[error("NegativeExtent: {0}")]
    NegativeExtent(i64),
    #[error("RaggedMatrix: rows have differing lengths")]
    RaggedMatrix,
    #[error("RowOutOfRange: row {index} of {rows}")]
    RowOutOfRange { index: i64, rows: usize },
    #[error("Overflow: integer {0} overflowed")]
    Overflow(&'static str),
}

impl ValueError {
    pub fn type_error(msg: impl Into<String>) -> Self {
        ValueError::TypeError(msg.into())
    }

    /// Stable short name of the error kind, used in diagnostics.
    pub fn kind_name(&self) -> &'static str {
        match self {
            ValueError::ShapeMismatch { .. } => "ShapeMismatch",
            ValueError::TypeError(_) => "TypeError",
            ValueError::Singular { .. } => "Singular",
            ValueError::AxisOutOfRange { .. } => "AxisOutOfRange",
            ValueError::NegativeExtent(_) => "NegativeExtent",
            ValueError::RaggedMatrix => "RaggedMatrix",
            ValueError::RowOutOfRange { .. } => "RowOutOfRange",
            ValueError::Overflow(_) => "Overflow",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_storage_length_is_checked() {
        assert!(Matrix::new(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(Matrix::new(0, 5, Vec::<f64>::new()).is_ok());
        assert_eq!(
            Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]),
            Err(ValueError::RaggedMatrix)
        );
    }

    #[test]
    fn bitwise_eq_distinguishes_signed_zero() {
        assert!(!Datum::Float(0.0).bitwise_eq(&Datum::Float(-0.0)));
        assert!(Datum::Float(f64::NAN).bitwise_eq(&Datum::Float(f64::NAN)));
        assert!(Datum::vector(vec![1.0, 2.0]).bitwise_eq(&Datum::vector(vec![1.0, 2.0])));
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(Datum::Int(120).to_string(), "120");
        assert_eq!(Datum::Float(0.5).to_string(), "0.5");
        assert_eq!(Datum::vector(vec![1.0, -2.5]).to_string(), "1.0,-2.5");
        let m = Datum::matrix(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(m.to_string(), "1.0,2.0\n3.0,4.0");
    }
}
