//! Executable semantics of the primitive vocabulary.
//!
//! Pure primitives are functions of their already-evaluated arguments and
//! may run on any worker. Control and binding forms (`block`, `if`,
//! `while`, `define`, `store`, `store_row`) are sequenced by the executor;
//! this module supplies their value-level pieces: condition coercion and
//! frame slots.

use std::sync::{Mutex, PoisonError};
use std::time::Duration;

use crate::value::{self, BinaryOp, CompareOp, Datum, Matrix, UnaryOp, ValueError};

/// Pure primitives, named as they appear in PhySL.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Prim {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Dot,
    Transpose,
    Solve,
    Exp,
    Log,
    Sum,
    Identity,
    Zeros,
    Diag,
    Shape,
    Random,
    List,
    Vector,
    Matrix,
    SliceRow,
    /// Sleeps for the given number of milliseconds and returns it. Only
    /// available when the compiler enables test primitives.
    SleepMs,
}

/// Argument count accepted by a primitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Exactly(usize),
    AtLeast(usize),
    Range(usize, usize),
}

impl Arity {
    pub fn accepts(self, n: usize) -> bool {
        match self {
            Arity::Exactly(k) => n == k,
            Arity::AtLeast(k) => n >= k,
            Arity::Range(lo, hi) => (lo..=hi).contains(&n),
        }
    }
}

impl std::fmt::Display for Arity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Arity::Exactly(k) => write!(f, "{k}"),
            Arity::AtLeast(k) => write!(f, "at least {k}"),
            Arity::Range(lo, hi) => write!(f, "{lo} to {hi}"),
        }
    }
}

impl Prim {
    pub const ALL: [Prim; 27] = [
        Prim::Add,
        Prim::Sub,
        Prim::Mul,
        Prim::Div,
        Prim::Neg,
        Prim::Lt,
        Prim::Le,
        Prim::Gt,
        Prim::Ge,
        Prim::Eq,
        Prim::Ne,
        Prim::Dot,
        Prim::Transpose,
        Prim::Solve,
        Prim::Exp,
        Prim::Log,
        Prim::Sum,
        Prim::Identity,
        Prim::Zeros,
        Prim::Diag,
        Prim::Shape,
        Prim::Random,
        Prim::List,
        Prim::Vector,
        Prim::Matrix,
        Prim::SliceRow,
        Prim::SleepMs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Prim::Add => "add",
            Prim::Sub => "sub",
            Prim::Mul => "mul",
            Prim::Div => "div",
            Prim::Neg => "neg",
            Prim::Lt => "lt",
            Prim::Le => "le",
            Prim::Gt => "gt",
            Prim::Ge => "ge",
            Prim::Eq => "eq",
            Prim::Ne => "ne",
            Prim::Dot => "dot",
            Prim::Transpose => "transpose",
            Prim::Solve => "solve",
            Prim::Exp => "exp",
            Prim::Log => "log",
            Prim::Sum => "sum",
            Prim::Identity => "identity",
            Prim::Zeros => "zeros",
            Prim::Diag => "diag",
            Prim::Shape => "shape",
            Prim::Random => "random",
            Prim::List => "list",
            Prim::Vector => "vector",
            Prim::Matrix => "matrix",
            Prim::SliceRow => "slice_row",
            Prim::SleepMs => "sleep_ms",
        }
    }

    pub fn from_name(name: &str) -> Option<Prim> {
        Prim::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn arity(self) -> Arity {
        match self {
            Prim::List => Arity::AtLeast(0),
            Prim::Neg
            | Prim::Transpose
            | Prim::Exp
            | Prim::Log
            | Prim::Sum
            | Prim::Identity
            | Prim::Zeros
            | Prim::Diag
            | Prim::Vector
            | Prim::Matrix
            | Prim::SleepMs => Arity::Exactly(1),
            _ => Arity::Exactly(2),
        }
    }

    /// Arithmetic and comparison primitives, the ones constant folding may
    /// evaluate at compile time.
    pub fn is_foldable(self) -> bool {
        matches!(
            self,
            Prim::Add
                | Prim::Sub
                | Prim::Mul
                | Prim::Div
                | Prim::Neg
                | Prim::Lt
                | Prim::Le
                | Prim::Gt
                | Prim::Ge
                | Prim::Eq
                | Prim::Ne
        )
    }
}

fn int_arg(d: &Datum, what: &str) -> Result<i64, ValueError> {
    match d {
        Datum::Int(i) => Ok(*i),
        other => Err(ValueError::type_error(format!(
            "{what} must be an int, got {}",
            other.type_name()
        ))),
    }
}

fn numbers(items: &[Datum]) -> Result<Vec<f64>, ValueError> {
    items
        .iter()
        .map(|d| {
            d.as_f64().ok_or_else(|| {
                ValueError::type_error(format!("expected a number, got {}", d.type_name()))
            })
        })
        .collect()
}

/// Applies a pure primitive to evaluated arguments. Arity has already been
/// checked at compile time.
pub fn apply_prim(prim: Prim, args: &[Datum]) -> Result<Datum, ValueError> {
    let binary = |op| value::broadcast_elementwise(op, &args[0], &args[1]);
    let cmp = |op| value::compare(op, &args[0], &args[1]);
    match prim {
        Prim::Add => binary(BinaryOp::Add),
        Prim::Sub => binary(BinaryOp::Sub),
        Prim::Mul => binary(BinaryOp::Mul),
        Prim::Div => binary(BinaryOp::Div),
        Prim::Neg => value::elementwise_unary(UnaryOp::Neg, &args[0]),
        Prim::Exp => value::elementwise_unary(UnaryOp::Exp, &args[0]),
        Prim::Log => value::elementwise_unary(UnaryOp::Log, &args[0]),
        Prim::Lt => cmp(CompareOp::Lt),
        Prim::Le => cmp(CompareOp::Le),
        Prim::Gt => cmp(CompareOp::Gt),
        Prim::Ge => cmp(CompareOp::Ge),
        Prim::Eq => cmp(CompareOp::Eq),
        Prim::Ne => cmp(CompareOp::Ne),
        Prim::Dot => value::dot(&args[0], &args[1]),
        Prim::Transpose => value::transpose(&args[0]),
        Prim::Solve => value::solve(&args[0], &args[1]),
        Prim::Sum => value::sum(&args[0]),
        Prim::Identity => value::identity(int_arg(&args[0], "identity size")?),
        Prim::Zeros => value::zeros(&args[0]),
        Prim::Diag => value::diag(&args[0]),
        Prim::Shape => value::shape_of(&args[0], int_arg(&args[1], "axis")?),
        Prim::Random => value::random(&args[0], int_arg(&args[1], "seed")?),
        Prim::List => Ok(Datum::list(args.to_vec())),
        Prim::Vector => match &args[0] {
            Datum::List(items) => Ok(Datum::vector(numbers(items)?)),
            Datum::Vector(_) => Ok(args[0].clone()),
            other => Err(ValueError::type_error(format!(
                "vector expects a list, got {}",
                other.type_name()
            ))),
        },
        Prim::Matrix => match &args[0] {
            Datum::List(rows) => {
                let rows = rows
                    .iter()
                    .map(|r| match r {
                        Datum::List(items) => numbers(items),
                        Datum::Vector(v) => Ok(v.as_slice().to_vec()),
                        other => Err(ValueError::type_error(format!(
                            "matrix rows must be lists, got {}",
                            other.type_name()
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Matrix::from_rows(&rows).map(Datum::Matrix)
            }
            Datum::Matrix(_) => Ok(args[0].clone()),
            other => Err(ValueError::type_error(format!(
                "matrix expects a list of lists, got {}",
                other.type_name()
            ))),
        },
        Prim::SliceRow => value::slice_row(&args[0], int_arg(&args[1], "row index")?),
        Prim::SleepMs => {
            let ms = int_arg(&args[0], "sleep duration")?;
            std::thread::sleep(Duration::from_millis(ms.max(0) as u64));
            Ok(Datum::Int(ms))
        }
    }
}

/// Value bound by `store_row(x, i, v)`: a copy of `target` with row `i`
/// replaced.
pub fn store_row_value(target: &Datum, index: &Datum, row: &Datum) -> Result<Datum, ValueError> {
    value::store_row(target, int_arg(index, "row index")?, row)
}

/// Condition coercion for `if` and `while`: Bool, or Int 0/1.
pub fn truthy(cond: &Datum) -> Result<bool, ValueError> {
    match cond {
        Datum::Bool(b) => Ok(*b),
        Datum::Int(0) => Ok(false),
        Datum::Int(1) => Ok(true),
        other => Err(ValueError::type_error(format!(
            "condition must be a bool (or int 0/1), got {}",
            match other {
                Datum::Int(i) => format!("int {i}"),
                d => d.type_name().to_string(),
            }
        ))),
    }
}

/// Variable slots of one kernel invocation. Writes are ordered by the
/// executor's sequencing of binding forms.
pub struct Frame {
    slots: Vec<Mutex<Datum>>,
}

impl Frame {
    pub fn new(size: usize, args: Vec<Datum>) -> Frame {
        let mut slots: Vec<Mutex<Datum>> = args.into_iter().map(Mutex::new).collect();
        slots.resize_with(size.max(slots.len()), || Mutex::new(Datum::Nil));
        Frame { slots }
    }

    pub fn get(&self, slot: usize) -> Datum {
        self.slots[slot]
            .lock()
            .unwrap_or_else(PoisonError::into_inner)
            .clone()
    }

    pub fn set(&self, slot: usize, value: Datum) {
        *self.slots[slot]
            .lock()
            .unwrap_or_else(PoisonError::into_inner) = value;
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }
}
