use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn arn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arn")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = arn(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    arn(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TINY_CONFIG: &str = "total_examples = 400\ncheckpoint_every = 200\n";

fn pendulum(dir: &Path) -> PathBuf {
    let p = dir.join("pendulum.csv");
    ok(&["gen-pendulum", "--series", "24", "--steps", "8", "--seed", "3", "--out", s(&p)]);
    p
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn zoo_lists_ten_neurons() {
    let out = ok(&["zoo", "list"]);
    let names: Vec<&str> = out.lines().map(|l| l.split_whitespace().next().unwrap()).collect();
    assert_eq!(
        names,
        ["lstm", "pendulum-small", "rnn-min", "a1-3w", "a2-crop", "a3-pendulum", "a4-fordb", "a5-wingbeat", "a6-lsst", "a7-wisdm"]
    );
    assert!(ok(&["zoo", "show", "rnn-min"]).contains("relu( lc2( cons( lc1( OtherOutputsLC ), InputsLC ) ) )"));
    assert_eq!(code(&["zoo", "show", "nope"]), 1);
}

#[test]
fn compile_shows_the_quadratic_output() {
    let out = ok(&["compile", "--neuron", "zoo:pendulum-small", "--emit", "c"]);
    let y = out.lines().find(|l| l.starts_with("y' = ")).unwrap();
    let rhs = y.trim_start_matches("y' = ").trim_end_matches(';');
    let (v, rest) = rhs.split_once(" - ").unwrap();
    assert_eq!(rest, format!("{v}*{v}"));
    let g = ok(&["compile", "--neuron", "zoo:pendulum-small", "--emit", "graph"]);
    assert!(g.starts_with("digraph"));
    assert_eq!(out, ok(&["compile", "--neuron", "zoo:pendulum-small", "--emit", "c"]));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["compile", "--neuron", "zoo:lstm", "--nodes", "3"]), 1);
    let missing = dir.path().join("missing.csv");
    assert_eq!(code(&["train", "--neuron", "zoo:lstm", "--data", s(&missing), "--out", s(dir.path())]), 2);
    let bad = write(dir.path(), "bad.arn", "( 0.0, 0.0, 0.0, relu( SelfOutput ) )");
    assert_eq!(code(&["compile", "--neuron", s(&bad)]), 2);
    let csv = write(dir.path(), "bad.csv", "series_id,t,x0,y0\n0,0,1,oops\n");
    let out = arn(&["train", "--neuron", "zoo:lstm", "--data", s(&csv), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn train_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = pendulum(dir.path());
    let cfg = write(dir.path(), "train.toml", TINY_CONFIG);
    let out = dir.path().join("run");
    let summary = ok(&["train", "--neuron", "zoo:lstm", "--data", s(&data), "--config", s(&cfg), "--out", s(&out), "--nodes", "4", "--seed", "2"]);
    assert!(summary.contains("updates = 100"));
    for (file, head) in [("history.csv", "# arn-history 1"), ("summary.txt", "# arn-summary 1"), ("config.toml", "# arn-train-config 1")] {
        assert!(fs::read_to_string(out.join(file)).unwrap().starts_with(head), "{file}");
    }
    let model = fs::read_to_string(out.join("model.json")).unwrap();
    assert!(model.starts_with("{\"format\":\"arn-model\",\"version\":1"));

    let preds = dir.path().join("p.csv");
    let row = ok(&["eval", "--model", s(&out), "--data", s(&data), "--split", "test", "--predictions", s(&preds)]);
    let lines: Vec<&str> = row.lines().collect();
    assert_eq!(lines[0], "split,examples,loss,accuracy");
    assert!(lines[1].starts_with("test,6,"));
    let p = fs::read_to_string(&preds).unwrap();
    assert!(p.starts_with("# arn-predictions 1\nseries_id,t,p0,p1,p2,p3\n"));
    assert_eq!(p.lines().count(), 2 + 6 * 8);
    assert_eq!(row, ok(&["eval", "--model", s(&out), "--data", s(&data), "--split", "test"]));

    // same seed, same model
    let again = dir.path().join("run2");
    ok(&["train", "--neuron", "zoo:lstm", "--data", s(&data), "--config", s(&cfg), "--out", s(&again), "--nodes", "4", "--seed", "2"]);
    assert_eq!(model, fs::read_to_string(again.join("model.json")).unwrap());
}

#[test]
fn compare_regression_and_classification() {
    let dir = tempfile::tempdir().unwrap();
    let data = pendulum(dir.path());
    let cfg = write(dir.path(), "train.toml", TINY_CONFIG);
    let mut preds = Vec::new();
    for name in ["lstm", "pendulum-small"] {
        let out = dir.path().join(name);
        ok(&["train", "--neuron", &format!("zoo:{name}"), "--data", s(&data), "--config", s(&cfg), "--out", s(&out), "--nodes", "4"]);
        let p = dir.path().join(format!("{name}.csv"));
        ok(&["eval", "--model", s(&out), "--data", s(&data), "--predictions", s(&p)]);
        preds.push(p);
    }
    let out = ok(&["compare", "--a", s(&preds[0]), "--b", s(&preds[1]), "--targets", s(&data), "--task", "reg"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "# arn-compare 1");
    assert_eq!(lines[1], "examples,mse_a,mse_b,factor_better,test,statistic,p_value");
    assert!(lines[2].starts_with("6,") && lines[2].contains(",wilcoxon,"));
    assert_eq!(code(&["compare", "--a", s(&preds[0]), "--b", s(&preds[1]), "--targets", s(&data), "--task", "cls"]), 2);

    // classification: sign of the first input
    let mut text = String::from("series_id,t,x0,label\n");
    for i in 0..16 {
        let v = if i % 2 == 0 { -0.5 } else { 0.5 } + i as f64 * 0.01;
        for t in 0..4 {
            text.push_str(&format!("{i},{t},{v},{}\n", i % 2));
        }
    }
    let cls = write(dir.path(), "cls.csv", &text);
    let mut cp = Vec::new();
    for name in ["lstm", "rnn-min"] {
        let out = dir.path().join(format!("c-{name}"));
        ok(&["train", "--neuron", &format!("zoo:{name}"), "--data", s(&cls), "--config", s(&cfg), "--out", s(&out), "--nodes", "2"]);
        let p = dir.path().join(format!("c-{name}.csv"));
        ok(&["eval", "--model", s(&out), "--data", s(&cls), "--predictions", s(&p)]);
        cp.push(p);
    }
    let out = ok(&["compare", "--a", s(&cp[0]), "--b", s(&cp[1]), "--targets", s(&cls), "--task", "cls"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[1], "examples,cce_a,cce_b,factor_better,accuracy_a,accuracy_b,test,statistic,p_value");
    assert!(lines[2].contains(",mcnemar,"));
}

#[test]
fn tiny_search_writes_a_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = pendulum(dir.path());
    let out = dir.path().join("best.toml");
    let stdout = ok(&["search", "--data", s(&data), "--budget", "3", "--seed", "4", "--nodes", "2", "--examples", "40", "--out", s(&out)]);
    assert!(stdout.starts_with("best_index = "));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# arn-train-config 1"));
    let again = dir.path().join("again.toml");
    ok(&["search", "--data", s(&data), "--budget", "3", "--seed", "4", "--nodes", "2", "--examples", "40", "--out", s(&again)]);
    assert_eq!(text, fs::read_to_string(&again).unwrap());
    assert_eq!(code(&["search", "--data", s(&data), "--budget", "0", "--out", s(&out)]), 2);
}

#[test]
fn tiny_evolve_writes_front_and_audit() {
    let dir = tempfile::tempdir().unwrap();
    let data = pendulum(dir.path());
    let plan = write(dir.path(), "plan.toml", "[[stages]]\nnodes = 2\nexamples = 200\nlast_timesteps = 5\npass_fraction = 0.5\n");
    let run = |out: &Path, workers: &str| {
        ok(&[
            "evolve", "--data", s(&data), "--plan", s(&plan), "--generations", "2", "--population", "4", "--seed", "1",
            "--workers", workers, "--out", s(out),
        ])
    };
    let a = dir.path().join("a");
    let stdout = run(&a, "1");
    assert!(stdout.contains("evaluations = 9"));
    for g in 0..=2 {
        assert!(a.join(format!("front-gen{g:04}.json")).exists());
    }
    let front = fs::read_to_string(a.join("front.json")).unwrap();
    assert!(front.contains("\"format\": \"arn-front\""));
    assert!(fs::read_to_string(a.join("front.csv")).unwrap().starts_with("# arn-front-scatter 1\ncomplexity_bits,validation_loss,id\n"));
    let audit = fs::read_to_string(a.join("audit.jsonl")).unwrap();
    let lines: Vec<&str> = audit.lines().collect();
    assert_eq!(lines[0], "{\"format\":\"arn-audit\",\"version\":1}");
    assert_eq!(lines.len(), 1 + 9);
    let b = dir.path().join("b");
    run(&b, "2");
    assert_eq!(front, fs::read_to_string(b.join("front.json")).unwrap());
    assert_eq!(audit, fs::read_to_string(b.join("audit.jsonl")).unwrap());
    // resume from the saved front
    let c = dir.path().join("c");
    ok(&[
        "evolve", "--data", s(&data), "--plan", s(&plan), "--generations", "1", "--population", "2", "--seed", "1",
        "--resume", s(&a.join("front.json")), "--out", s(&c),
    ]);
    assert!(c.join("front.json").exists());
}
