use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fut(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fut"))
        .args(args)
        .env_remove("FUT_THREADS")
        .output()
        .expect("spawn fut")
}

fn corpus(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn run_factorial() {
    for file in ["fact.physl", "fact.py"] {
        let o = fut(&["run", &corpus(file), "--entry", "fact", "--arg", "n=int:5"]);
        assert_eq!((code(&o), stdout(&o).as_str()), (0, "120\n"), "{}", stderr(&o));
    }
}

#[test]
fn worker_count_does_not_change_output() {
    let eye = corpus("data/eye2.csv");
    let ys = corpus("data/y10.csv");
    let args = |w: &'static str| {
        vec![
            "run".to_string(),
            corpus("lra.py"),
            "--entry".into(),
            "lra".into(),
            "--arg".into(),
            format!("X=csv:{eye}"),
            "--arg".into(),
            format!("y=csv:{ys}"),
            "--arg".into(),
            "alpha=float:1.0".into(),
            "--arg".into(),
            "iterations=int:3".into(),
            "--threads".into(),
            w.into(),
        ]
    };
    let outs: Vec<Output> = ["1", "4"]
        .into_iter()
        .map(|w| Command::new(env!("CARGO_BIN_EXE_fut")).args(args(w)).output().unwrap())
        .collect();
    assert_eq!(code(&outs[0]), 0, "{}", stderr(&outs[0]));
    assert_eq!(outs[0].stdout, outs[1].stdout);
    let seq = fut(&["run", &corpus("fact.physl"), "--arg", "n=int:10", "--mode", "sequential"]);
    assert_eq!(stdout(&seq), "3628800\n");
}

#[test]
fn transpile_goldens_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fact", "lra", "als"] {
        let out = dir.path().join(format!("{name}.physl"));
        let o = fut(&["transpile", &corpus(&format!("{name}.py")), "-o", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(
            std::fs::read(&out).unwrap(),
            std::fs::read(corpus(&format!("{name}.physl"))).unwrap()
        );
    }
    let bad = dir.path().join("loop.py");
    std::fs::write(&bad, "def f(xs):\n    s = 0\n    for x in xs:\n        s += x\n    return s\n").unwrap();
    let o = fut(&["transpile", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("UnsupportedSyntax") && stderr(&o).contains(":3:"), "{}", stderr(&o));
    let o = fut(&["transpile", dir.path().join("missing.py").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn artifacts_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n).to_string_lossy().into_owned();
    let o = fut(&[
        "run",
        &corpus("fact.physl"),
        "--arg",
        "n=int:5",
        "--threads",
        "2",
        "--counters",
        &p("c.csv"),
        "--trace",
        &p("t.json"),
        "--dump-tree",
        &p("tree.dot"),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = std::fs::read_to_string(p("c.csv")).unwrap();
    let physl = std::fs::read_to_string(corpus("fact.physl")).unwrap();
    let nodes = fut_core::compiler::compile_source(&physl, &Default::default()).unwrap().node_count();
    assert_eq!(csv.lines().count(), nodes + 1);
    let trace: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("t.json")).unwrap()).unwrap();
    assert!(!trace.is_null());
    assert!(std::fs::read_to_string(p("tree.dot")).unwrap().starts_with("digraph"));

    let o = fut(&["run", &corpus("fact.physl"), "--arg", "n=int:2", "--dump-tree", &p("tree.json")]);
    assert_eq!(code(&o), 0);
    let tree: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p("tree.json")).unwrap()).unwrap();
    assert!(tree.to_string().contains("\"count\""));
}

#[test]
fn user_errors_exit_1() {
    let fact = corpus("fact.physl");
    let cases: Vec<Vec<&str>> = vec![
        vec!["run", &fact],
        vec!["run", &fact, "--arg", "n=int:x"],
        vec!["run", &fact, "--arg", "n=5"],
        vec!["run", &fact, "--arg", "n=int:1", "--arg", "m=int:2"],
        vec!["run", &fact, "--arg", "n=int:1", "--arg", "n=int:2"],
        vec!["run", &fact, "--entry", "nope"],
        vec!["run", &fact, "--arg", "n=int:1", "--threads", "0"],
        vec!["run", &fact, "--arg", "n=int:1", "--threads", "2", "--mode", "sequential"],
        vec!["run", &fact, "--arg", "n=int:1", "--mode", "parallel"],
        vec!["run", &fact, "--arg", "n=int:30"],
        vec!["bench", "lra", "--rows", "0"],
        vec!["bench", "als", "--lambda", "0"],
        vec!["bench", "lra", "--threads", "0"],
        vec!["frobnicate"],
        vec![],
    ];
    for args in cases {
        let o = fut(&args);
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
        assert!(args.is_empty() || stderr(&o).contains("error"), "{args:?}");
    }
}

#[test]
fn io_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.physl");
    let o = fut(&["run", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let o = fut(&["run", &corpus("fact.physl"), "--arg", "n=csv:/nonexistent/x.csv"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let unwritable: PathBuf = dir.path().join("no/such/dir/c.csv");
    let o = fut(&["run", &corpus("fact.physl"), "--arg", "n=int:1", "--counters", unwritable.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(code(&fut(&["--help"])), 0);
    assert_eq!(code(&fut(&["--version"])), 0);
    assert_eq!(code(&fut(&["run", "--help"])), 0);
}

#[test]
fn error_corpus_diagnostics() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/errors");
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("physl") {
            continue;
        }
        let expect: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path.with_extension("expect.json")).unwrap()).unwrap();
        let o = fut(&["run", path.to_str().unwrap(), "--entry", expect["entry"].as_str().unwrap()]);
        let err = stderr(&o);
        assert_eq!(code(&o), 1, "{err}");
        assert!(err.contains(&format!("error[{}]", expect["error"].as_str().unwrap())), "{err}");
        assert!(err.contains(&format!(":{}:{}", expect["line"], expect["col"])), "{err}");
    }
}

#[test]
fn bench_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let o = fut(&[
        "bench", "lra", "--threads", "1", "--repeat", "2", "--rows", "100", "--features", "10", "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("algo,threads,run,elapsed_ms"));
    assert_eq!(lines.count(), 2);
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.ends_with("1.00"), "{row}");

    let o = fut(&["bench", "als", "--threads", "1,2", "--repeat", "1", "--users", "8", "--items", "6", "--factors", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 3);
}
