use std::path::PathBuf;
use std::process::{Command, Output};

fn dipsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dipsim")).args(args).output().expect("binary runs")
}

fn golden(name: &str, args: &[&str]) {
    let out = dipsim(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("DIPSIM_BLESS").is_some() {
        std::fs::write(&path, &out.stdout).unwrap();
    }
    let want = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
    assert_eq!(String::from_utf8_lossy(&out.stdout), want, "{name} drifted");
}

#[test]
fn golden_clique_run() {
    golden("run_clique.json", &["run", "clique", "--gen", "planted_clique:8,4", "--K", "4", "--trials", "50", "--seed", "7"]);
}

#[test]
fn golden_distinctness_csv() {
    golden(
        "run_distinctness.csv",
        &["run", "distinctness", "--gen", "cycle:10", "--prover", "sum-forge", "--param", "instance=no", "--trials", "200", "--seed", "3", "--format", "csv"],
    );
}

#[test]
fn golden_sweep() {
    golden("sweep_set_equality.csv", &["sweep", "set-equality", "16,64,256", "--trials", "5", "--seed", "1"]);
}

#[test]
fn golden_sweep_json() {
    golden(
        "sweep_o1_tree.json",
        &["sweep", "o1-tree", "9,12", "--gen", "cycle", "--prover", "cycle", "--trials", "40", "--format", "json"],
    );
}

#[test]
fn honest_set_equality_on_k8() {
    let out = dipsim(&["run", "set-equality", "--gen", "clique:8", "--prover", "honest", "--trials", "1000"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["accept_rate"].as_f64().unwrap() >= 0.95, "{v}");
    for key in ["protocol", "n", "trials", "accept_rate", "max_bits_per_node_per_round", "rounds", "seed"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn planted_clique_always_accepts() {
    let out = dipsim(&["run", "clique", "--gen", "planted_clique:8,4", "--K", "4", "--prover", "honest"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["accept_rate"].as_f64(), Some(1.0));
}

#[test]
fn rejecting_verdicts_still_exit_zero() {
    let out = dipsim(&["run", "set-equality", "--param", "instance=no", "--trials", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["accept_rate"].as_f64(), Some(0.0));
}

#[test]
fn config_errors_exit_2() {
    for args in [
        &["run", "set-equality", "--prover", "no-such"][..],
        &["run", "no-such-protocol"],
        &["sweep", "set-equality", ""],
        &["sweep", "set-equality", "64,16"],
        &["run", "set-equality", "--param", "zzz=1"],
        &["run", "set-equality", "--gen", "wheel:5"],
        &["run", "clique", "--gen", "cycle:5"],
        &["run", "set-equality", "--trials", "0"],
        &["run", "set-equality", "--format", "xml"],
    ] {
        assert_eq!(dipsim(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn io_errors_exit_3() {
    assert_eq!(dipsim(&["run", "set-equality", "--graph", "/no/such/file"]).status.code(), Some(3));
}

#[test]
fn graph_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c4.txt");
    std::fs::write(&path, "# a square\nn=4\n0 1\n1 2\n2 3\n3 0\n").unwrap();
    let out = dipsim(&["run", "tree-labeling", "--graph", path.to_str().unwrap(), "--trials", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 4);
    assert_eq!(v["accept_rate"].as_f64(), Some(1.0));
    std::fs::write(&path, "n=4\n0 1\n").unwrap();
    assert_eq!(dipsim(&["run", "tree-labeling", "--graph", path.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sweep_is_deterministic() {
    let args = ["sweep", "set-equality-loglog", "64,256", "--trials", "4", "--seed", "5"];
    assert_eq!(dipsim(&args).stdout, dipsim(&args).stdout);
}
