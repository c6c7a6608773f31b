use std::path::{Path, PathBuf};

use fut_core::algorithms::{self, AlsConfig, LraConfig, ALS, CORPUS, FACTORIAL, LRA};
use fut_core::executor::{EvalConfig, EvalContext};
use fut_core::pyfrontend;
use fut_core::value::{self, Datum, Matrix};
use serde_json::Value;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn contexts() -> Vec<EvalContext> {
    vec![
        EvalContext::new(EvalConfig::sequential()),
        EvalContext::new(EvalConfig::dataflow(1)),
        EvalContext::new(EvalConfig::dataflow(4)),
    ]
}

fn vector(d: &Datum) -> Vec<f64> {
    match d {
        Datum::Vector(v) => v.as_slice().to_vec(),
        other => panic!("expected a vector, got {other}"),
    }
}

fn matrix(d: &Datum) -> Matrix {
    match d {
        Datum::Matrix(m) => m.clone(),
        other => panic!("expected a matrix, got {other}"),
    }
}

#[test]
fn transpiled_corpus_matches_goldens() {
    for c in CORPUS {
        let text = pyfrontend::transpile(c.python).unwrap();
        assert_eq!(text, c.physl, "{}", c.name);
        let on_disk = std::fs::read_to_string(corpus_dir().join(format!("{}.physl", c.name))).unwrap();
        assert_eq!(text, on_disk);
    }
}

#[test]
fn expectation_cases() {
    let dir = corpus_dir();
    for c in CORPUS {
        let expect: Value = serde_json::from_str(c.expect_json).unwrap();
        let entry = expect["entry"].as_str().unwrap();
        let program = c.program();
        let kernel = program.kernel(entry).unwrap();
        for case in expect["cases"].as_array().unwrap() {
            let bindings: Vec<(String, Datum)> = case["args"]
                .as_array()
                .unwrap()
                .iter()
                .map(|a| value::parse_binding(a.as_str().unwrap(), &dir).unwrap())
                .collect();
            let names: Vec<&str> = bindings.iter().map(|(k, _)| k.as_str()).collect();
            assert_eq!(names, kernel.params.iter().map(String::as_str).collect::<Vec<_>>());
            let args: Vec<Datum> = bindings.into_iter().map(|(_, v)| v).collect();
            for ctx in contexts() {
                let out = ctx.eval(&program, entry, args.clone()).unwrap();
                assert_eq!(out.to_string(), case["stdout"].as_str().unwrap(), "{} {case}", c.name);
            }
        }
    }
}

#[test]
fn factorial_matches_iterative_oracle() {
    for ctx in contexts() {
        for n in 0..=20i64 {
            let expected: i64 = (1..=n).product();
            assert_eq!(algorithms::run_fact(&ctx, n).unwrap(), Datum::Int(expected));
        }
        assert_eq!(algorithms::run_fact(&ctx, 21).unwrap_err().kind_name(), "Overflow");
    }
}

#[test]
fn factorial_depth_limit_boundary() {
    // fact(n) uses n + 1 frames
    for ctx in [
        EvalContext::new(EvalConfig { max_frames: 200, ..EvalConfig::sequential() }),
        EvalContext::new(EvalConfig { max_frames: 200, ..EvalConfig::dataflow(2) }),
    ] {
        let ok = ctx.eval(&FACTORIAL.program(), "fact", vec![Datum::Int(199)]);
        assert_eq!(ok.unwrap_err().kind_name(), "Overflow");
        let err = ctx.eval(&FACTORIAL.program(), "fact", vec![Datum::Int(200)]).unwrap_err();
        assert_eq!(err.kind_name(), "DepthLimit");
    }
}

#[test]
fn lra_single_step_hand_oracle() {
    let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let y = value::Vector::new(vec![1.0, 0.0]);
    for ctx in contexts() {
        let w = vector(&algorithms::run_lra(&ctx, &x, &y, 1.0, 1).unwrap());
        // pred = [0.5, 0.5], grad = [-0.5, 0.5]
        assert!((w[0] - 0.5).abs() <= 1e-12 && (w[1] + 0.5).abs() <= 1e-12, "{w:?}");
    }
}

#[test]
fn lra_zero_rate_keeps_zero_weights() {
    let (x, y) = algorithms::gen_lra_data(&LraConfig {
        rows: 30,
        features: 4,
        alpha: 0.1,
        iterations: 1,
        seed: 3,
    });
    let ctx = EvalContext::new(EvalConfig::dataflow(2));
    for t in [1, 5] {
        let w = vector(&algorithms::run_lra(&ctx, &x, &y, 0.0, t).unwrap());
        assert!(w.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn lra_reaches_training_accuracy() {
    let expect: Value = serde_json::from_str(LRA.expect_json).unwrap();
    let g = &expect["generator"];
    let cfg = LraConfig {
        rows: g["rows"].as_u64().unwrap() as usize,
        features: g["features"].as_u64().unwrap() as usize,
        alpha: g["alpha"].as_f64().unwrap(),
        iterations: g["iterations"].as_i64().unwrap(),
        seed: 1,
    };
    let (x, y) = algorithms::gen_lra_data(&cfg);
    let ctx = EvalContext::new(EvalConfig::dataflow(2));
    let w = vector(&algorithms::run_lra(&ctx, &x, &y, cfg.alpha, cfg.iterations).unwrap());
    let acc = algorithms::accuracy(&x, &y, &w);
    assert!(acc >= expect["min_accuracy"].as_f64().unwrap(), "accuracy {acc}");
}

#[test]
fn lra_generator_golden() {
    let (x, y) = algorithms::gen_lra_data(&LraConfig {
        rows: 4,
        features: 2,
        alpha: 0.1,
        iterations: 1,
        seed: 1,
    });
    let golden = corpus_dir().join("golden");
    let gx = value::read_csv(&golden.join("lra_n4_d2_seed1.X.csv")).unwrap().unwrap();
    let gy = value::read_csv(&golden.join("lra_n4_d2_seed1.y.csv")).unwrap().unwrap();
    assert!(Datum::Matrix(x).bitwise_eq(&gx));
    assert!(Datum::Vector(y).bitwise_eq(&gy));
}

#[test]
fn als_closed_form_1x1() {
    let one = Matrix::new(1, 1, vec![1.0]).unwrap();
    let args = vec![
        Datum::Matrix(one.clone()),
        Datum::Matrix(one),
        Datum::vector(vec![2.0]),
        Datum::vector(vec![1.0]),
        Datum::Float(0.1),
    ];
    for ctx in contexts() {
        let x = vector(&ctx.eval(&ALS.program(), "update_row", args.clone()).unwrap());
        assert!((x[0] - 2.0 / 2.1).abs() <= 1e-12, "{x:?}");
    }
}

/// L = sum c (p - u.v)^2 + lambda (|U|^2 + |V|^2), with p = [r > 0].
fn implicit_loss(r: &Matrix, u: &Matrix, v: &Matrix, lambda: f64, alpha_c: f64) -> f64 {
    let mut loss = 0.0;
    for i in 0..r.rows() {
        for j in 0..r.cols() {
            let c = 1.0 + alpha_c * r.get(i, j);
            let p = if r.get(i, j) > 0.0 { 1.0 } else { 0.0 };
            let pred: f64 = u.row(i).iter().zip(v.row(j)).map(|(a, b)| a * b).sum();
            loss += c * (p - pred) * (p - pred);
        }
    }
    let sq = |m: &Matrix| m.as_slice().iter().map(|x| x * x).sum::<f64>();
    loss + lambda * (sq(u) + sq(v))
}

fn als_factors(out: &Datum) -> (Matrix, Matrix) {
    match out {
        Datum::List(items) if items.len() == 2 => (matrix(&items[0]), matrix(&items[1])),
        other => panic!("expected list(U, V), got {other}"),
    }
}

#[test]
fn als_loss_is_non_increasing() {
    let expect: Value = serde_json::from_str(ALS.expect_json).unwrap();
    let g = &expect["generator"];
    let drift = expect["loss_drift"].as_f64().unwrap();
    let base = AlsConfig {
        users: g["users"].as_u64().unwrap() as usize,
        items: g["items"].as_u64().unwrap() as usize,
        factors: g["factors"].as_u64().unwrap() as usize,
        lambda: g["lambda"].as_f64().unwrap(),
        alpha_c: g["alpha_c"].as_f64().unwrap(),
        sweeps: 1,
        seed: 7,
        density: g["density"].as_f64().unwrap(),
    };
    let (r, p) = algorithms::gen_als_data(&base);
    let ctx = EvalContext::new(EvalConfig::dataflow(2));
    let mut previous = f64::INFINITY;
    for sweeps in 1..=g["sweeps"].as_i64().unwrap() {
        let cfg = AlsConfig { sweeps, ..base };
        let (u, v) = als_factors(&algorithms::run_als(&ctx, &r, &p, &cfg).unwrap());
        let loss = implicit_loss(&r, &u, &v, cfg.lambda, cfg.alpha_c);
        assert!(loss <= previous + drift, "sweep {sweeps}: {loss} > {previous}");
        previous = loss;
    }
}

#[test]
fn als_large_lambda_shrinks_factors() {
    let cfg = AlsConfig {
        users: 12,
        items: 9,
        factors: 3,
        lambda: 1e6,
        sweeps: 1,
        density: 0.3,
        ..Default::default()
    };
    let (r, p) = algorithms::gen_als_data(&cfg);
    let ctx = EvalContext::new(EvalConfig::sequential());
    let (u, _) = als_factors(&algorithms::run_als(&ctx, &r, &p, &cfg).unwrap());
    let norm = u.as_slice().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    assert!(norm < 1e-3, "{norm}");
}

#[test]
fn error_corpus() {
    let dir = corpus_dir().join("errors");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("physl") {
            continue;
        }
        seen += 1;
        let expect: Value =
            serde_json::from_str(&std::fs::read_to_string(path.with_extension("expect.json")).unwrap()).unwrap();
        let source = std::fs::read_to_string(&path).unwrap();
        for ctx in contexts() {
            let result = fut_core::compiler::compile_source(&source, &Default::default())
                .and_then(|p| Ok(ctx.eval(&std::sync::Arc::new(p), expect["entry"].as_str().unwrap(), vec![])?));
            let err = result.unwrap_err();
            assert_eq!(err.kind_name(), expect["error"], "{}", path.display());
            let span = err.span().unwrap();
            assert_eq!(
                (span.line as u64, span.col as u64),
                (expect["line"].as_u64().unwrap(), expect["col"].as_u64().unwrap()),
                "{}",
                path.display()
            );
        }
    }
    assert_eq!(seen, 6);
}
