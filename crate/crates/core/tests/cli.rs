use std::path::Path;
use std::process::{Command, Output};

fn trifactor(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trifactor")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_solve_verify() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.tri3");
    let c = dir.path().join("c.json");
    assert!(trifactor(&["gen", "--family", "random", "--n", "9", "--min-deg-frac", "0.7", "--seed", "4", "--out", p(&g)]).status.success());
    let out = trifactor(&["solve", "--input", p(&g), "--out", p(&c)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stderr).trim(), "cover");
    let out = trifactor(&["verify", "--input", p(&g), "--cover", p(&c)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "accept");
}

#[test]
fn verify_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.tri3");
    let c = dir.path().join("c.json");
    assert!(trifactor(&["gen", "--family", "theta3x2", "--t", "2", "--out", p(&g)]).status.success());
    std::fs::write(&c, "[[0,0,0],[1,1,1],[2,2,2],[3,3,3]]").unwrap();
    assert_eq!(trifactor(&["verify", "--input", p(&g), "--cover", p(&c)]).status.code(), Some(2));
}

#[test]
fn parse_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("bad.tri3");
    std::fs::write(&g, "tri3 2\ne 0 0 3 1\n").unwrap();
    let out = trifactor(&["solve", "--input", p(&g)]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "nonsense = 1\n").unwrap();
    let ok = dir.path().join("ok.tri3");
    std::fs::write(&ok, "tri3 1\ne 0 0 1 0\n").unwrap();
    assert_eq!(trifactor(&["solve", "--input", p(&ok), "--config", p(&cfg)]).status.code(), Some(3));
}

#[test]
fn gamma_witness_and_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.tri3");
    let w = dir.path().join("w.json");
    assert!(trifactor(&["gen", "--family", "gamma3", "--t", "3", "--out", p(&g)]).status.success());
    let out = trifactor(&["solve", "--input", p(&g), "--witness", p(&w)]);
    assert_eq!(String::from_utf8_lossy(&out.stderr).trim(), "nofactor");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&w).unwrap()).unwrap();
    assert_eq!(doc["model"], "gamma3");
    assert_eq!(doc["assignment"].as_array().unwrap().len(), 27);

    let text = std::fs::read_to_string(&g).unwrap();
    let out = trifactor(&["roundtrip", "--input", p(&g)]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), text);
}

#[test]
fn sweep_is_reproducible() {
    let args = ["sweep", "--n", "6,9", "--fractions", "0.7,1.0", "--trials", "3", "--seed", "11"];
    let a = trifactor(&args);
    let b = trifactor(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("# trifactor-sweep v1\nn,fraction,seed,outcome,cover_size,oracle_confirmed\n"));
    assert_eq!(text.lines().count(), 2 + 12);
}

#[test]
fn conjecture_small_scan() {
    let dir = tempfile::tempdir().unwrap();
    let wd = dir.path().join("wit");
    let out = trifactor(&["conjecture", "--max-base-n", "1", "--t", "1,2", "--witness-dir", p(&wd)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("counterexamples 0"));
    assert!(!wd.exists());
}
