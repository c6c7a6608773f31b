use std::sync::Arc;

use fut_core::algorithms::{self, AlsConfig, LraConfig};
use fut_core::compiler::{compile, compile_source, fold_program, source_hash, CompileOptions, Program};
use fut_core::executor::{EvalConfig, EvalContext, RuntimeError};
use fut_core::physl;
use fut_core::value::Datum;
use proptest::prelude::*;

const WORKERS: [usize; 4] = [1, 2, 4, 8];

fn same(a: &Result<Datum, RuntimeError>, b: &Result<Datum, RuntimeError>) -> bool {
    match (a, b) {
        (Ok(x), Ok(y)) => x.bitwise_eq(y),
        (Err(x), Err(y)) => x.kind_name() == y.kind_name() && x.span() == y.span(),
        _ => false,
    }
}

#[test]
fn corpus_results_are_bitwise_identical_across_worker_counts() {
    let seq = EvalContext::new(EvalConfig::sequential());
    let pools: Vec<_> = WORKERS.iter().map(|&w| EvalContext::new(EvalConfig::dataflow(w))).collect();
    for seed in 1..=3u64 {
        let lra = LraConfig {
            rows: 120,
            features: 12,
            alpha: 0.05,
            iterations: 15,
            seed,
        };
        let (x, y) = algorithms::gen_lra_data(&lra);
        let als = AlsConfig {
            users: 14,
            items: 11,
            factors: 3,
            sweeps: 2,
            seed,
            density: 0.3,
            ..Default::default()
        };
        let (r, p) = algorithms::gen_als_data(&als);
        let n = 10 + seed as i64;

        let expected = [
            algorithms::run_fact(&seq, n),
            algorithms::run_lra(&seq, &x, &y, lra.alpha, lra.iterations),
            algorithms::run_als(&seq, &r, &p, &als),
        ];
        for (w, ctx) in WORKERS.iter().zip(&pools) {
            let got = [
                algorithms::run_fact(ctx, n),
                algorithms::run_lra(ctx, &x, &y, lra.alpha, lra.iterations),
                algorithms::run_als(ctx, &r, &p, &als),
            ];
            for (name, (a, b)) in ["fact", "lra", "als"].iter().zip(expected.iter().zip(&got)) {
                assert!(a.is_ok(), "{name}: {a:?}");
                assert!(same(a, b), "{name} seed {seed} W={w}");
            }
        }
    }
}

#[test]
fn fib_matches_across_worker_counts() {
    let program = Arc::new(
        compile_source(
            "block(define(fib, n, if(lt(n, 2), n, add(fib(sub(n, 1)), fib(sub(n, 2))))))",
            &CompileOptions::default(),
        )
        .unwrap(),
    );
    for w in WORKERS {
        let ctx = EvalContext::new(EvalConfig::dataflow(w));
        assert_eq!(ctx.eval(&program, "fib", vec![Datum::Int(20)]).unwrap(), Datum::Int(6765));
    }
}

fn arith_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (-20i64..20).prop_map(|i| i.to_string()),
        (-8.0f64..8.0).prop_map(|f| format!("{f:?}")),
        Just("x".to_string()),
        Just("y".to_string()),
    ];
    leaf.prop_recursive(5, 48, 3, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["add", "sub", "mul", "div"]), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| format!("{op}({a}, {b})")),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| format!("if(lt({c}, 0), {a}, {b})")),
            inner.prop_map(|a| format!("neg({a})")),
        ]
    })
}

fn kernel_source(body: &str) -> String {
    format!("block(define(f, x, y, {body}))")
}

fn compiled(src: &str, fold: bool) -> Arc<Program> {
    let ast = physl::parse(src).unwrap();
    let opts = CompileOptions {
        fold_constants: fold,
        ..Default::default()
    };
    Arc::new(compile(&ast, &opts).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dataflow_agrees_with_sequential(body in arith_expr(), x in -5i64..5, y in -3.0f64..3.0, w in 1usize..5) {
        let program = compiled(&kernel_source(&body), false);
        let args = vec![Datum::Int(x), Datum::Float(y)];
        let a = EvalContext::new(EvalConfig::sequential()).eval(&program, "f", args.clone());
        let b = EvalContext::new(EvalConfig::dataflow(w)).eval(&program, "f", args);
        prop_assert!(same(&a, &b), "{a:?} vs {b:?}\n{body}");
    }

    #[test]
    fn folding_preserves_results(body in arith_expr(), x in -5i64..5, y in -3.0f64..3.0) {
        let src = kernel_source(&body);
        let plain = compiled(&src, false);
        let folded = compiled(&src, true);
        prop_assert!(folded.node_count() <= plain.node_count());
        let args = vec![Datum::Int(x), Datum::Float(y)];
        let ctx = EvalContext::new(EvalConfig::sequential());
        let a = ctx.eval(&plain, "f", args.clone());
        let b = ctx.eval(&folded, "f", args);
        match (&a, &b) {
            (Ok(p), Ok(q)) => prop_assert!(p.bitwise_eq(q), "{p} vs {q}\n{body}"),
            (Err(p), Err(q)) => prop_assert_eq!(p.kind_name(), q.kind_name()),
            _ => prop_assert!(false, "{a:?} vs {b:?}\n{body}"),
        }
    }

    #[test]
    fn folding_is_idempotent(body in arith_expr()) {
        let once = compiled(&kernel_source(&body), true);
        let twice = fold_program(&once);
        let (a, b) = (once.kernel("f").unwrap(), twice.kernel("f").unwrap());
        prop_assert!(a.same_structure(b));
    }

    #[test]
    fn compilation_is_deterministic(body in arith_expr()) {
        let src = kernel_source(&body);
        let ast = physl::parse(&src).unwrap();
        let opts = CompileOptions::default();
        let (a, b) = (compiled(&src, false), compiled(&src, false));
        prop_assert!(a.kernel("f").unwrap().same_structure(b.kernel("f").unwrap()));
        prop_assert_eq!(a.source_hash, b.source_hash);
        prop_assert_eq!(a.source_hash, source_hash(&ast, &opts));
        prop_assert_ne!(a.kernel("f").unwrap().id, b.kernel("f").unwrap().id);
    }
}
