use std::sync::Arc;

use super::rng::SplitMixStream;
use super::{Datum, Matrix, Shape, ValueError, Vector};

/// Pivots with magnitude below this are treated as singular by [`solve`].
pub const SINGULAR_PIVOT: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => a / b,
        }
    }

    fn apply_int(self, a: i64, b: i64) -> Result<Datum, ValueError> {
        let checked = match self {
            BinaryOp::Add => a.checked_add(b),
            BinaryOp::Sub => a.checked_sub(b),
            BinaryOp::Mul => a.checked_mul(b),
            BinaryOp::Div => return Ok(Datum::Float(a as f64 / b as f64)),
        };
        checked
            .map(Datum::Int)
            .ok_or(ValueError::Overflow(self.name()))
    }

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Exp,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CompareOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

enum Operand<'a> {
    Scalar(f64),
    Array(&'a [f64]),
}

fn operand<'a>(d: &'a Datum, side: &str) -> Result<Operand<'a>, ValueError> {
    match d {
        Datum::Int(i) => Ok(Operand::Scalar(*i as f64)),
        Datum::Float(x) => Ok(Operand::Scalar(*x)),
        Datum::Vector(v) => Ok(Operand::Array(v.as_slice())),
        Datum::Matrix(m) => Ok(Operand::Array(m.as_slice())),
        other => Err(ValueError::type_error(format!(
            "{side} operand must be numeric, got {}",
            other.type_name()
        ))),
    }
}

fn rebuild(shape: Shape, data: Vec<f64>) -> Datum {
    match shape {
        Shape::Scalar => Datum::Float(data[0]),
        Shape::Vector(_) => Datum::vector(data),
        Shape::Matrix(r, c) => Datum::Matrix(Matrix {
            rows: r,
            cols: c,
            data: Arc::from(data),
        }),
    }
}

/// Elementwise arithmetic with scalar broadcasting. `Int op Int` stays
/// integral except for division; any other mix is computed in binary64.
pub fn broadcast_elementwise(op: BinaryOp, a: &Datum, b: &Datum) -> Result<Datum, ValueError> {
    if let (Datum::Int(x), Datum::Int(y)) = (a, b) {
        return op.apply_int(*x, *y);
    }
    let lhs = operand(a, "left")?;
    let rhs = operand(b, "right")?;
    let (sa, sb) = (a.shape().unwrap(), b.shape().unwrap());
    match (lhs, rhs) {
        (Operand::Scalar(x), Operand::Scalar(y)) => Ok(Datum::Float(op.apply(x, y))),
        (Operand::Scalar(x), Operand::Array(ys)) => {
            Ok(rebuild(sb, ys.iter().map(|&y| op.apply(x, y)).collect()))
        }
        (Operand::Array(xs), Operand::Scalar(y)) => {
            Ok(rebuild(sa, xs.iter().map(|&x| op.apply(x, y)).collect()))
        }
        (Operand::Array(xs), Operand::Array(ys)) => {
            if sa != sb {
                return Err(ValueError::ShapeMismatch { lhs: sa, rhs: sb });
            }
            Ok(rebuild(
                sa,
                xs.iter().zip(ys).map(|(&x, &y)| op.apply(x, y)).collect(),
            ))
        }
    }
}

pub fn elementwise_unary(op: UnaryOp, a: &Datum) -> Result<Datum, ValueError> {
    let f = match op {
        UnaryOp::Neg => |x: f64| -x,
        UnaryOp::Exp => f64::exp,
        UnaryOp::Log => f64::ln,
    };
    match a {
        Datum::Int(i) if op == UnaryOp::Neg => i
            .checked_neg()
            .map(Datum::Int)
            .ok_or(ValueError::Overflow("neg")),
        Datum::Int(i) => Ok(Datum::Float(f(*i as f64))),
        Datum::Float(x) => Ok(Datum::Float(f(*x))),
        Datum::Vector(v) => Ok(Datum::vector(
            v.as_slice().iter().map(|&x| f(x)).collect::<Vec<_>>(),
        )),
        Datum::Matrix(m) => Ok(rebuild(
            Shape::Matrix(m.rows(), m.cols()),
            m.as_slice().iter().map(|&x| f(x)).collect(),
        )),
        other => Err(ValueError::type_error(format!(
            "unary operand must be numeric, got {}",
            other.type_name()
        ))),
    }
}

/// Scalar comparison. Numbers compare as binary64 when either side is a
/// float; `eq`/`ne` additionally accept matching bool, string and nil pairs.
pub fn compare(op: CompareOp, a: &Datum, b: &Datum) -> Result<Datum, ValueError> {
    use std::cmp::Ordering;
    let ordering = match (a, b) {
        (Datum::Int(x), Datum::Int(y)) => Some(x.cmp(y)),
        (Datum::Int(_) | Datum::Float(_), Datum::Int(_) | Datum::Float(_)) => {
            a.as_f64().unwrap().partial_cmp(&b.as_f64().unwrap())
        }
        _ => {
            let equal = match (a, b) {
                (Datum::Bool(x), Datum::Bool(y)) => x == y,
                (Datum::Str(x), Datum::Str(y)) => x == y,
                (Datum::Nil, Datum::Nil) => true,
                _ => {
                    return Err(ValueError::type_error(format!(
                        "cannot compare {} with {}",
                        a.type_name(),
                        b.type_name()
                    )))
                }
            };
            return match op {
                CompareOp::Eq => Ok(Datum::Bool(equal)),
                CompareOp::Ne => Ok(Datum::Bool(!equal)),
                _ => Err(ValueError::type_error(format!(
                    "ordering comparison on {}",
                    a.type_name()
                ))),
            };
        }
    };
    // NaN compares unordered: every relation is false except `ne`.
    let result = match (op, ordering) {
        (CompareOp::Ne, None) => true,
        (_, None) => false,
        (CompareOp::Lt, Some(o)) => o == Ordering::Less,
        (CompareOp::Le, Some(o)) => o != Ordering::Greater,
        (CompareOp::Gt, Some(o)) => o == Ordering::Greater,
        (CompareOp::Ge, Some(o)) => o != Ordering::Less,
        (CompareOp::Eq, Some(o)) => o == Ordering::Equal,
        (CompareOp::Ne, Some(o)) => o != Ordering::Equal,
    };
    Ok(Datum::Bool(result))
}

/// Serial left-to-right sum of products.
fn serial_dot(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> f64 {
    let mut products = xs.zip(ys).map(|(x, y)| x * y);
    match products.next() {
        Some(first) => products.fold(first, |acc, p| acc + p),
        None => 0.0,
    }
}

pub fn dot(a: &Datum, b: &Datum) -> Result<Datum, ValueError> {
    match (a, b) {
        (Datum::Vector(x), Datum::Vector(y)) => {
            check(x.len() == y.len(), a, b)?;
            Ok(Datum::Float(serial_dot(
                x.as_slice().iter().copied(),
                y.as_slice().iter().copied(),
            )))
        }
        (Datum::Matrix(m), Datum::Vector(v)) => {
            check(m.cols() == v.len(), a, b)?;
            let out: Vec<f64> = (0..m.rows())
                .map(|i| serial_dot(m.row(i).iter().copied(), v.as_slice().iter().copied()))
                .collect();
            Ok(Datum::vector(out))
        }
        (Datum::Vector(v), Datum::Matrix(m)) => {
            check(m.rows() == v.len(), a, b)?;
            let out: Vec<f64> = (0..m.cols())
                .map(|j| {
                    serial_dot(
                        v.as_slice().iter().copied(),
                        (0..m.rows()).map(|k| m.get(k, j)),
                    )
                })
                .collect();
            Ok(Datum::vector(out))
        }
        (Datum::Matrix(x), Datum::Matrix(y)) => {
            check(x.cols() == y.rows(), a, b)?;
            let mut out = Vec::with_capacity(x.rows() * y.cols());
            for i in 0..x.rows() {
                let row = x.row(i);
                for j in 0..y.cols() {
                    out.push(serial_dot(
                        row.iter().copied(),
                        (0..y.rows()).map(|k| y.get(k, j)),
                    ));
                }
            }
            Ok(rebuild(Shape::Matrix(x.rows(), y.cols()), out))
        }
        _ => Err(ValueError::type_error(format!(
            "dot expects vectors or matrices, got {} and {}",
            a.type_name(),
            b.type_name()
        ))),
    }
}

fn check(ok: bool, a: &Datum, b: &Datum) -> Result<(), ValueError> {
    if ok {
        Ok(())
    } else {
        Err(ValueError::ShapeMismatch {
            lhs: a.shape().unwrap_or(Shape::Scalar),
            rhs: b.shape().unwrap_or(Shape::Scalar),
        })
    }
}

pub fn transpose(a: &Datum) -> Result<Datum, ValueError> {
    match a {
        Datum::Vector(_) => Ok(a.clone()),
        Datum::Matrix(m) => {
            let mut out = Vec::with_capacity(m.rows() * m.cols());
            for j in 0..m.cols() {
                for i in 0..m.rows() {
                    out.push(m.get(i, j));
                }
            }
            Ok(rebuild(Shape::Matrix(m.cols(), m.rows()), out))
        }
        other => Err(ValueError::type_error(format!(
            "transpose expects a vector or matrix, got {}",
            other.type_name()
        ))),
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting. The pivot
/// is the largest magnitude entry at or below the diagonal, the smallest row
/// index winning ties.
pub fn solve(a: &Datum, b: &Datum) -> Result<Datum, ValueError> {
    let Datum::Matrix(m) = a else {
        return Err(ValueError::type_error(format!(
            "solve expects a matrix, got {}",
            a.type_name()
        )));
    };
    let n = m.rows();
    let (rhs_cols, rhs): (usize, &[f64]) = match b {
        Datum::Vector(v) => (1, v.as_slice()),
        Datum::Matrix(bm) => (bm.cols(), bm.as_slice()),
        other => {
            return Err(ValueError::type_error(format!(
                "solve right-hand side must be a vector or matrix, got {}",
                other.type_name()
            )))
        }
    };
    let rhs_rows = match b {
        Datum::Vector(v) => v.len(),
        Datum::Matrix(bm) => bm.rows(),
        _ => unreachable!(),
    };
    if m.cols() != n || rhs_rows != n {
        return Err(ValueError::ShapeMismatch {
            lhs: a.shape().unwrap(),
            rhs: b.shape().unwrap(),
        });
    }

    let mut lu = m.as_slice().to_vec();
    let mut x = rhs.to_vec();
    for col in 0..n {
        let mut pivot_row = col;
        for r in col + 1..n {
            if lu[r * n + col].abs() > lu[pivot_row * n + col].abs() {
                pivot_row = r;
            }
        }
        let pivot = lu[pivot_row * n + col];
        if pivot.is_nan() || pivot.abs() < SINGULAR_PIVOT {
            return Err(ValueError::Singular { column: col, pivot });
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap(col * n + j, pivot_row * n + j);
            }
            for j in 0..rhs_cols {
                x.swap(col * rhs_cols + j, pivot_row * rhs_cols + j);
            }
        }
        for r in col + 1..n {
            let factor = lu[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                lu[r * n + j] -= factor * lu[col * n + j];
            }
            for j in 0..rhs_cols {
                x[r * rhs_cols + j] -= factor * x[col * rhs_cols + j];
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = lu[col * n + col];
        for j in 0..rhs_cols {
            let mut acc = x[col * rhs_cols + j];
            for k in col + 1..n {
                acc -= lu[col * n + k] * x[k * rhs_cols + j];
            }
            x[col * rhs_cols + j] = acc / pivot;
        }
    }
    Ok(match b {
        Datum::Vector(_) => Datum::vector(x),
        _ => rebuild(Shape::Matrix(n, rhs_cols), x),
    })
}

fn extent(i: i64) -> Result<usize, ValueError> {
    usize::try_from(i).map_err(|_| ValueError::NegativeExtent(i))
}

pub fn identity(n: i64) -> Result<Datum, ValueError> {
    let n = extent(n)?;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + i] = 1.0;
    }
    Ok(rebuild(Shape::Matrix(n, n), data))
}

/// Interprets a shape argument: an Int `n` or a list of one or two Ints.
fn parse_shape(shape: &Datum) -> Result<Shape, ValueError> {
    let as_int = |d: &Datum| match d {
        Datum::Int(i) => extent(*i),
        other => Err(ValueError::type_error(format!(
            "shape extents must be ints, got {}",
            other.type_name()
        ))),
    };
    match shape {
        Datum::Int(_) => Ok(Shape::Vector(as_int(shape)?)),
        Datum::List(items) => match &items[..] {
            [n] => Ok(Shape::Vector(as_int(n)?)),
            [r, c] => Ok(Shape::Matrix(as_int(r)?, as_int(c)?)),
            _ => Err(ValueError::type_error(format!(
                "shape must have 1 or 2 extents, got {}",
                items.len()
            ))),
        },
        other => Err(ValueError::type_error(format!(
            "shape must be an int or a list, got {}",
            other.type_name()
        ))),
    }
}

fn element_count(shape: Shape) -> usize {
    shape.dims().iter().product()
}

pub fn zeros(shape: &Datum) -> Result<Datum, ValueError> {
    let shape = parse_shape(shape)?;
    Ok(rebuild(shape, vec![0.0; element_count(shape)]))
}

/// Fills the requested shape row-major from splitmix64 seeded by `seed`.
pub fn random(shape: &Datum, seed: i64) -> Result<Datum, ValueError> {
    let shape = parse_shape(shape)?;
    let mut stream = SplitMixStream::new(seed as u64);
    let data = (0..element_count(shape)).map(|_| stream.next_f64()).collect();
    Ok(rebuild(shape, data))
}

pub fn diag(v: &Datum) -> Result<Datum, ValueError> {
    let Datum::Vector(v) = v else {
        return Err(ValueError::type_error(format!(
            "diag expects a vector, got {}",
            v.type_name()
        )));
    };
    let n = v.len();
    let mut data = vec![0.0; n * n];
    for (i, &x) in v.as_slice().iter().enumerate() {
        data[i * n + i] = x;
    }
    Ok(rebuild(Shape::Matrix(n, n), data))
}

pub fn sum(a: &Datum) -> Result<Datum, ValueError> {
    let total = match a {
        Datum::Int(i) => *i as f64,
        Datum::Float(x) => *x,
        Datum::Vector(v) => v.as_slice().iter().fold(0.0, |acc, &x| acc + x),
        Datum::Matrix(m) => m.as_slice().iter().fold(0.0, |acc, &x| acc + x),
        other => {
            return Err(ValueError::type_error(format!(
                "sum expects a numeric value, got {}",
                other.type_name()
            )))
        }
    };
    Ok(Datum::Float(total))
}

pub fn shape_of(a: &Datum, axis: i64) -> Result<Datum, ValueError> {
    let shape = a.shape().ok_or_else(|| {
        ValueError::type_error(format!("shape of non-numeric {}", a.type_name()))
    })?;
    let dims = shape.dims();
    usize::try_from(axis)
        .ok()
        .and_then(|ax| dims.get(ax))
        .map(|&d| Datum::Int(d as i64))
        .ok_or(ValueError::AxisOutOfRange {
            axis,
            rank: shape.rank(),
        })
}

/// Row `i` of a matrix as a vector, element `i` of a vector, or item `i` of a
/// list.
pub fn slice_row(a: &Datum, i: i64) -> Result<Datum, ValueError> {
    let len = match a {
        Datum::Matrix(m) => m.rows(),
        Datum::Vector(v) => v.len(),
        Datum::List(items) => items.len(),
        other => {
            return Err(ValueError::type_error(format!(
                "cannot index {}",
                other.type_name()
            )))
        }
    };
    let idx = usize::try_from(i)
        .ok()
        .filter(|&idx| idx < len)
        .ok_or(ValueError::RowOutOfRange { index: i, rows: len })?;
    Ok(match a {
        Datum::Matrix(m) => Datum::vector(m.row(idx)),
        Datum::Vector(v) => Datum::Float(v.as_slice()[idx]),
        Datum::List(items) => items[idx].clone(),
        _ => unreachable!(),
    })
}

/// Copy of matrix `m` with row `i` replaced by `row`.
pub fn store_row(m: &Datum, i: i64, row: &Datum) -> Result<Datum, ValueError> {
    let Datum::Matrix(m) = m else {
        return Err(ValueError::type_error(format!(
            "store_row target must be a matrix, got {}",
            m.type_name()
        )));
    };
    let idx = usize::try_from(i)
        .ok()
        .filter(|&idx| idx < m.rows())
        .ok_or(ValueError::RowOutOfRange {
            index: i,
            rows: m.rows(),
        })?;
    let values = match row {
        Datum::Vector(v) if v.len() == m.cols() => v.as_slice(),
        Datum::Vector(v) => {
            return Err(ValueError::ShapeMismatch {
                lhs: Shape::Vector(m.cols()),
                rhs: Shape::Vector(v.len()),
            })
        }
        other => {
            return Err(ValueError::type_error(format!(
                "store_row value must be a vector, got {}",
                other.type_name()
            )))
        }
    };
    let mut data = m.as_slice().to_vec();
    data[idx * m.cols()..(idx + 1) * m.cols()].copy_from_slice(values);
    Ok(rebuild(Shape::Matrix(m.rows(), m.cols()), data))
}

impl From<Vector> for Datum {
    fn from(v: Vector) -> Self {
        Datum::Vector(v)
    }
}

impl From<Matrix> for Datum {
    fn from(m: Matrix) -> Self {
        Datum::Matrix(m)
    }
}
