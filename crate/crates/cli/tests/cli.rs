use std::path::Path;
use std::process::{Command, Output};

fn planecode(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_planecode")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_then_verify_ternary_c0() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c0.txt");
    let b = planecode(&["build", "c0", "--q", "3", "--out", path(&file)]);
    assert_eq!(b.status.code(), Some(0));
    let v = planecode(&["verify", path(&file)]);
    assert_eq!(v.status.code(), Some(0));
    assert_eq!(stdout(&v).trim(), "size=6801 t2=OK");
}

#[test]
fn params_binary() {
    let o = planecode(&["params", "--q", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    for want in ["planes=381", "per_point=21", "f0=6096", "f1=5715"] {
        assert!(s.contains(want), "{s}");
    }
}

#[test]
fn verify_reports_shared_line() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.txt");
    let text = "subspacecode v1 q=2 n=7 k=3 count=2\n1000000 0100000 0010000\n1000000 0100000 0001000\n";
    std::fs::write(&file, text).unwrap();
    let o = planecode(&["verify", path(&file)]);
    assert_eq!(o.status.code(), Some(1));
    let s = stdout(&o);
    assert!(s.starts_with("size=2 t2=FAIL"), "{s}");
    assert_eq!(s.matches("shared-line plane:").count(), 2);
    assert!(s.contains("1000000 0100000 0010000") && s.contains("1000000 0100000 0001000"));
}

#[test]
fn usage_and_input_errors() {
    assert_eq!(planecode(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(planecode(&["build", "nope"]).status.code(), Some(2));
    assert_eq!(planecode(&["verify", "/nonexistent/code.txt"]).status.code(), Some(2));
    assert_eq!(planecode(&["field-info", "--q", "7"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let choice = dir.path().join("choice.txt");
    std::fs::write(&choice, "0 1 2\n").unwrap();
    assert_eq!(planecode(&["build", "c", "--choice-file", path(&choice)]).status.code(), Some(2));
}

#[test]
fn binary_builds_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for (name, size) in [("lmrd", 256), ("almrd", 291), ("rspace", 268), ("rspace-aug", 303), ("c", 301), ("c-ext", 306)] {
        let file = dir.path().join(format!("{name}.txt"));
        let b = planecode(&["build", name, "--q", "2", "--out", path(&file)]);
        assert_eq!(b.status.code(), Some(0), "{name}");
        assert!(stdout(&b).contains(&format!("size={size} t2=OK")), "{name}: {}", stdout(&b));
        let v = planecode(&["verify", path(&file)]);
        assert_eq!(stdout(&v).trim(), format!("size={size} t2=OK"));
    }
}

#[test]
fn stdout_build_is_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let o = planecode(&["build", "c0", "--q", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let file = dir.path().join("c0.txt");
    std::fs::write(&file, &o.stdout).unwrap();
    assert_eq!(stdout(&planecode(&["verify", path(&file)])).trim(), "size=286 t2=OK");
}

#[test]
fn choice_file_selects_trivial_planes() {
    let dir = tempfile::tempdir().unwrap();
    let choice = dir.path().join("choice.txt");
    std::fs::write(&choice, "# r index\n0 1\n7 1\n").unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    planecode(&["build", "c", "--out", path(&a)]);
    let o = planecode(&["build", "c", "--choice-file", path(&choice), "--out", path(&b)]);
    assert_eq!(o.status.code(), Some(0));
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn extend_q2_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("q2.txt");
    let o = planecode(&["extend-q2", "--out", path(&file)]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("bad_points=11") && s.contains("size=329 t2=OK"), "{s}");
    let sp = planecode(&["spectrum", path(&file), "--report-format", "tsv"]);
    assert_eq!(stdout(&sp).trim(), "S\t136,164,29,0\ttrue");
    let all = planecode(&["spectrum", path(&file), "--all-solids", "--report-format", "tsv"]);
    assert_eq!(all.status.code(), Some(0));
    let total: u64 = stdout(&all).lines().skip(1).map(|l| l.split('\t').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 11811);
}

#[test]
fn field_info_and_invariants_are_deterministic() {
    let f = stdout(&planecode(&["field-info", "--q", "2"]));
    assert!(f.contains("q=2") && f.contains("W=0,1,2,4,5,8,10"), "{f}");
    let a = planecode(&["invariants", "--q", "2", "--report-format", "tsv"]);
    let b = planecode(&["invariants", "--q", "2", "--report-format", "tsv"]);
    assert_eq!(a.stdout, b.stdout);
    let s = stdout(&a);
    assert!(s.contains("coclique\t2\t0\t0,2,7,9"), "{s}");
    assert!(s.contains("orbit\t2\t0,1,4\t2\tfalse\t1,3,4,11,12,14"));
}

#[test]
fn extend_search_ternary_short_budget() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.txt");
    let o = Command::new(env!("CARGO_BIN_EXE_planecode"))
        .args(["extend-search", "--q", "3", "--seed", "7", "--budget-secs", "2", "--restarts", "2", "--out", path(&file)])
        .env("SUBSPACE_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let best: Vec<usize> = s
        .lines()
        .filter_map(|l| l.strip_prefix("best="))
        .map(|l| l.split_whitespace().next().unwrap().parse().unwrap())
        .collect();
    assert!(!best.is_empty() && best.windows(2).all(|w| w[0] < w[1]));
    assert!(*best.last().unwrap() >= 6915);
    let v = stdout(&planecode(&["verify", path(&file)]));
    assert_eq!(v.trim(), format!("size={} t2=OK", best.last().unwrap()));
}
