use std::process::{Command, Output};

fn magnus(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magnus"))
        .args(args)
        .env_remove("MAGNUS_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_exit_codes() {
    let ok = magnus(&["verify", "--cases", "3", "--filter", "random"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(stdout(&ok).lines().count(), 4);

    let bad = magnus(&["verify", "--cases", "3", "--filter", "random", "--inject-fault", "random-001"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("FAIL random-001"));

    let none = magnus(&["verify", "--cases", "1", "--filter", "no-such-case"]);
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(magnus(&["spgemm", "--a", "rmat:scale=4", "--algo", "nope"]).status.code(), Some(2));
    assert_eq!(magnus(&["spgemm", "--a", "/no/such/file.mtx"]).status.code(), Some(2));
    assert_eq!(magnus(&["spgemm", "--a", "rmat:scale=4", "--reps", "0"]).status.code(), Some(2));
    assert_eq!(magnus(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        magnus(&["bound", "--n-a", "1", "--nnz-a", "1", "--n-inter-prod", "1", "--n-c", "1", "--nnz-c", "1", "--bandwidth", "0"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn generated_files_feed_spgemm() {
    let dir = tempfile::tempdir().unwrap();
    for ext in ["mtx", "csrb"] {
        let path = dir.path().join(format!("a.{ext}"));
        let path = path.to_str().unwrap();
        let g = magnus(&["--seed", "3", "gen", "rmat", "--scale", "6", "--edge-factor", "4", "-o", path]);
        assert_eq!(g.status.code(), Some(0), "{}", String::from_utf8_lossy(&g.stderr));
        let csv = dir.path().join(format!("{ext}.csv"));
        let s = magnus(&[
            "spgemm", "--a", path, "--algo", "magnus", "--reps", "2", "--csv", csv.to_str().unwrap(), "--l2-bytes",
            "4096", "--cache-line", "64", "--mem-budget", "65536",
        ]);
        assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stderr));
        let text = std::fs::read_to_string(&csv).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("input,algo,threads,rep,"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.ends_with(",PASS")));
    }
}

#[test]
fn json_output_and_env_override() {
    let o = Command::new(env!("CARGO_BIN_EXE_magnus"))
        .args(["--json", "spgemm", "--a", "banded:n=64,hw=3", "--algo", "esc", "--reps", "1"])
        .env("MAGNUS_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let records = v.as_array().unwrap();
    assert_eq!(records.len(), 4);
    assert_eq!(records[0]["algo"], "esc");
    assert_eq!(records[0]["threads"], 2);
}

#[test]
fn bound_matches_hand_count() {
    let o = magnus(&[
        "bound", "--n-a", "2", "--nnz-a", "3", "--n-inter-prod", "5", "--n-c", "2", "--nnz-c", "4", "--s-val", "4",
        "--bandwidth", "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("240,"));
}
