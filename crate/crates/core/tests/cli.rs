use std::fs;
use std::process::{Command, Output};

fn fastdqn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fastdqn")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn train_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = fastdqn(&[
            "train", "--seed", "1", "--steps", "5000", "--set", "eval_period=2500", "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ca, cb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ca, cb);
    let text = String::from_utf8(ca).unwrap();
    assert!(text.contains("# seed=1\n"));
    assert!(text.contains("# mode=both\n"));
    assert!(text.contains("2500,eval_mean,"));
    assert_eq!(fs::read(a.with_extension("params")).unwrap(), fs::read(b.with_extension("params")).unwrap());
}

#[test]
fn reference_schedule_matches_threads() {
    let a = fastdqn(&["train", "--seed", "3", "--steps", "2000", "--workers", "2"]);
    let b = fastdqn(&["train", "--seed", "3", "--steps", "2000", "--workers", "2", "--reference"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn eval_reads_saved_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("run.csv");
    let out = fastdqn(&["train", "--steps", "1000", "--out", rec.to_str().unwrap()]);
    assert!(out.status.success());
    let params = rec.with_extension("params");
    let out = fastdqn(&["eval", "--params", params.to_str().unwrap(), "--episodes", "4", "--epsilon", "0"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("episodes,epsilon,mean,std\n4,0,"));

    let out = fastdqn(&["eval", "--params", params.to_str().unwrap(), "--preset", "bench"]);
    assert!(!out.status.success());
    let out = fastdqn(&["eval", "--params", dir.path().join("missing").to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn score_reports_threshold_counts() {
    let out = fastdqn(&["score"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("DQN >= 75%: 29\n"));
    assert!(text.contains("Ours >= 75%: 33\n"));
    assert!(text.contains("**1327.2%**"));
    assert!(!text.contains("mismatch"));

    let out = fastdqn(&["score", "--format", "csv"]);
    let text = stdout(&out);
    assert!(text.contains("Breakout,1.7,31.8,401.2,373.4,1327.2,1234.9,DQN\n"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "name,random,human,dqn,ours\nG,3,3,1,1\n").unwrap();
    assert!(!fastdqn(&["score", "--input", bad.to_str().unwrap()]).status.success());
}

#[test]
fn bench_emits_fourteen_cells() {
    let out = fastdqn(&[
        "bench", "--trials", "1", "--format", "csv", "--set", "total_steps=400", "--set", "env_latency_us=5",
        "--set", "inference_latency_us=2", "--set", "train_latency_us=5", "--set", "prepopulate=64",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 14);
    assert!(rows[0].starts_with("1,standard,1,"));
    assert!(rows[0].ends_with(",100.0,1.00"));
    assert!(text.contains("# worker_counts=1,2,4,8\n"));
}

#[test]
fn predict_with_supplied_model() {
    let out = fastdqn(&["predict", "--model", "200,100,10,400,0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("- standard/W=1: 0.160000"));
    assert!(text.contains("- concurrent/W=1: 0.120000"));
    assert!(!fastdqn(&["predict", "--model", "1,2,3"]).status.success());
}

#[test]
fn errors_exit_nonzero() {
    let out = fastdqn(&["train", "--preset", "atari-paper", "--set", "C=999"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("F must divide C"));
    assert!(!fastdqn(&["train", "--set", "bogus=1"]).status.success());
    assert!(!fastdqn(&["train", "--preset", "nope"]).status.success());
    assert!(!fastdqn(&["train", "--mode", "synchronized", "--workers", "1"]).status.success());
}
