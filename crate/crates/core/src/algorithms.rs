//! Corpus programs and their synthetic data.

use std::sync::{Arc, OnceLock};

use crate::compiler::{compile, CompileOptions, Program};
use crate::executor::{EvalContext, RuntimeError};
use crate::pyfrontend;
use crate::value::{self, Datum, Matrix, Vector};

/// A corpus program: PyLite source, its golden PhySL, and the expectation
/// file describing how it is run.
#[derive(Clone, Copy, Debug)]
pub struct CorpusProgram {
    pub name: &'static str,
    pub python: &'static str,
    pub physl: &'static str,
    pub expect_json: &'static str,
}

pub const FACTORIAL: CorpusProgram = CorpusProgram {
    name: "fact",
    python: include_str!("../../../corpus/fact.py"),
    physl: include_str!("../../../corpus/fact.physl"),
    expect_json: include_str!("../../../corpus/fact.expect.json"),
};

pub const LRA: CorpusProgram = CorpusProgram {
    name: "lra",
    python: include_str!("../../../corpus/lra.py"),
    physl: include_str!("../../../corpus/lra.physl"),
    expect_json: include_str!("../../../corpus/lra.expect.json"),
};

pub const ALS: CorpusProgram = CorpusProgram {
    name: "als",
    python: include_str!("../../../corpus/als.py"),
    physl: include_str!("../../../corpus/als.physl"),
    expect_json: include_str!("../../../corpus/als.expect.json"),
};

pub const CORPUS: [CorpusProgram; 3] = [FACTORIAL, LRA, ALS];

impl CorpusProgram {
    /// Compiled form of the transpiled source, shared across callers.
    pub fn program(&self) -> Arc<Program> {
        static CACHE: OnceLock<[Arc<Program>; 3]> = OnceLock::new();
        let compiled = CACHE.get_or_init(|| {
            CORPUS.map(|c| {
                let physl = pyfrontend::transpile_ast(c.python).expect("corpus transpiles");
                Arc::new(compile(&physl, &CompileOptions::default()).expect("corpus compiles"))
            })
        });
        let i = CORPUS.iter().position(|c| c.name == self.name).expect("corpus member");
        compiled[i].clone()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LraConfig {
    pub rows: usize,
    pub features: usize,
    pub alpha: f64,
    pub iterations: i64,
    pub seed: u64,
}

impl LraConfig {
    /// 2,000 observations, 200 features, 100 iterations.
    pub fn desk() -> Self {
        LraConfig {
            rows: 2000,
            features: 200,
            alpha: 0.01,
            iterations: 100,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.rows < 1 || self.features < 1 || self.iterations < 1 {
            return Err("rows, features and iterations must be at least 1".into());
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err("alpha must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlsConfig {
    pub users: usize,
    pub items: usize,
    pub factors: usize,
    pub lambda: f64,
    pub alpha_c: f64,
    pub sweeps: i64,
    pub seed: u64,
    /// Fraction of user/item pairs with an observed interaction.
    pub density: f64,
}

impl Default for AlsConfig {
    fn default() -> Self {
        AlsConfig {
            users: 200,
            items: 150,
            factors: 16,
            lambda: 0.1,
            alpha_c: 40.0,
            sweeps: 5,
            seed: 1,
            density: 0.1,
        }
    }
}

impl AlsConfig {
    pub fn desk() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.users < 1 || self.items < 1 || self.factors < 1 || self.sweeps < 1 {
            return Err("users, items, factors and sweeps must be at least 1".into());
        }
        if self.lambda.is_nan() || self.lambda <= 0.0 {
            return Err("lambda must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err("density must lie in [0, 1]".into());
        }
        Ok(())
    }
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let shape = Datum::list(vec![Datum::Int(rows as i64), Datum::Int(cols as i64)]);
    match value::random(&shape, seed as i64) {
        Ok(Datum::Matrix(m)) => m,
        other => unreachable!("random matrix: {other:?}"),
    }
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    match value::random(&Datum::Int(n as i64), seed as i64) {
        Ok(Datum::Vector(v)) => v.as_slice().to_vec(),
        other => unreachable!("random vector: {other:?}"),
    }
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Synthetic binary classification data. Column 0 of X is a constant 1
/// (intercept); the other features and the true weights are uniform on
/// [-0.5, 0.5) drawn from `random` (weights with `seed`, features with
/// `seed + 1`). Row i is labelled 1 when x_i·w* exceeds the median score.
pub fn gen_lra_data(cfg: &LraConfig) -> (Matrix, Vector) {
    let (n, d) = (cfg.rows, cfg.features);
    let w: Vec<f64> = random_vector(d, cfg.seed).into_iter().map(|x| x - 0.5).collect();
    let raw = random_matrix(n, d, cfg.seed.wrapping_add(1));
    let mut data: Vec<f64> = raw.as_slice().iter().map(|x| x - 0.5).collect();
    for row in data.chunks_mut(d) {
        row[0] = 1.0;
    }
    let scores: Vec<f64> = data
        .chunks(d)
        .map(|row| row.iter().zip(&w).map(|(a, b)| a * b).sum())
        .collect();
    let threshold = median(&scores);
    let y: Vec<f64> = scores.iter().map(|&s| f64::from(u8::from(s > threshold))).collect();
    let x = Matrix::new(n, d, data).expect("rectangular");
    (x, Vector::new(y))
}

/// Synthetic implicit-feedback interactions. A pair is observed with
/// probability `density`; observed strengths are integers 1..=5. Returns
/// the strength matrix R and the preference matrix P = [R > 0].
pub fn gen_als_data(cfg: &AlsConfig) -> (Matrix, Matrix) {
    let (m, n) = (cfg.users, cfg.items);
    let mask = random_matrix(m, n, cfg.seed);
    let level = random_matrix(m, n, cfg.seed.wrapping_add(1));
    let r: Vec<f64> = mask
        .as_slice()
        .iter()
        .zip(level.as_slice())
        .map(|(&u, &v)| if u < cfg.density { 1.0 + (v * 5.0).floor() } else { 0.0 })
        .collect();
    let p: Vec<f64> = r.iter().map(|&x| f64::from(u8::from(x > 0.0))).collect();
    (
        Matrix::new(m, n, r).expect("rectangular"),
        Matrix::new(m, n, p).expect("rectangular"),
    )
}

pub fn lra_args(x: &Matrix, y: &Vector, alpha: f64, iterations: i64) -> Vec<Datum> {
    vec![
        Datum::Matrix(x.clone()),
        Datum::Vector(y.clone()),
        Datum::Float(alpha),
        Datum::Int(iterations),
    ]
}

pub fn als_args(r: &Matrix, p: &Matrix, cfg: &AlsConfig) -> Vec<Datum> {
    vec![
        Datum::Matrix(r.clone()),
        Datum::Matrix(p.clone()),
        Datum::Int(cfg.factors as i64),
        Datum::Float(cfg.lambda),
        Datum::Float(cfg.alpha_c),
        Datum::Int(cfg.sweeps),
        Datum::Int(cfg.seed as i64),
    ]
}

/// Trains the corpus logistic regression; returns the weight vector.
pub fn run_lra(ctx: &EvalContext, x: &Matrix, y: &Vector, alpha: f64, iterations: i64) -> Result<Datum, RuntimeError> {
    ctx.eval(&LRA.program(), "lra", lra_args(x, y, alpha, iterations))
}

/// Runs the corpus ALS; returns `list(U, V)`.
pub fn run_als(ctx: &EvalContext, r: &Matrix, p: &Matrix, cfg: &AlsConfig) -> Result<Datum, RuntimeError> {
    ctx.eval(&ALS.program(), "als", als_args(r, p, cfg))
}

pub fn run_fact(ctx: &EvalContext, n: i64) -> Result<Datum, RuntimeError> {
    ctx.eval(&FACTORIAL.program(), "fact", vec![Datum::Int(n)])
}

/// Fraction of rows whose thresholded prediction sigmoid(x·w) > 0.5 matches
/// the label.
pub fn accuracy(x: &Matrix, y: &Vector, w: &[f64]) -> f64 {
    let hits = (0..x.rows())
        .filter(|&i| {
            let z: f64 = x.row(i).iter().zip(w).map(|(a, b)| a * b).sum();
            (z > 0.0) == (y.as_slice()[i] > 0.5)
        })
        .count();
    hits as f64 / x.rows() as f64
}
