use std::path::Path;
use std::process::{Command, Output};

fn rmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmt-lab"))
        .args(args)
        .env_remove("RMT_LAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn catalan_table() {
    let o = rmt(&["tables", "--catalan", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[11], "10,16796");
}

#[test]
fn variance_and_beta_tables() {
    let text = stdout(&rmt(&["tables", "--variance", "6"]));
    let row: Vec<_> = text.lines().last().unwrap().split(',').collect();
    assert_eq!(row[0], "6");
    assert_eq!(row[5], row[6], "A2_direct = A2_closed");

    let text = stdout(&rmt(&["tables", "--beta", "1,5"]));
    for line in text.lines().skip(1) {
        let f: Vec<_> = line.split(',').collect();
        assert_eq!(f[2], f[4]);
    }
}

#[test]
fn enumerate_and_oracles() {
    assert_eq!(stdout(&rmt(&["enumerate", "--l", "3"])).lines().count(), 6);
    let w = stdout(&rmt(&["oracle", "--wigner", "2,4", "--law", "rademacher"]));
    assert_eq!(w.lines().nth(1).unwrap().split(',').nth(5), Some("3"));
    let g = stdout(&rmt(&["oracle", "--wigner", "4,3", "--law", "gaussian"]));
    assert_eq!(g.lines().nth(1).unwrap().split(',').nth(5), Some("0"));
}

#[test]
fn exit_codes() {
    assert_eq!(
        rmt(&["oracle", "--wigner", "2,2", "--law", "cauchy"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(rmt(&["enumerate", "--l", "50"]).status.code(), Some(3));
    assert_eq!(rmt(&["tables"]).status.code(), Some(2));
}

#[test]
fn spectral_residuals() {
    let text = stdout(&rmt(&["spectral", "--gamma", "1/2,2", "--k", "4"]));
    assert!(text.starts_with("gamma,check,argument,value,reference,residual"));
    for line in text.lines().skip(1) {
        let r: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert!(r < 1e-5, "{line}");
    }
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn bad_config_lists_fields_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"seed": 1, "experiments": [
            {"name": "x", "kind": "trace", "n": 5, "p": 2, "law": {"kind": "cauchy"}, "replicates": 5}
        ]}"#,
    );
    let out = dir.path().join("out");
    let o = rmt(&[
        "mc",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("experiments[0].law.kind"), "{err}");
    assert!(err.contains("experiments[0].replicates"), "{err}");
    assert!(!out.exists());
}

#[test]
fn mc_is_byte_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"seed": 3, "experiments": [
            {"name": "t", "kind": "trace", "n": 10, "p": 4, "law": "gaussian", "replicates": 200},
            {"name": "o", "kind": "entry_offdiag", "n": 10, "p": 2, "law": "rademacher", "replicates": 200,
             "histogram": {"bins": 8, "lo": -3, "hi": 3}}
        ]}"#,
    );
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("out{threads}"));
        let o = rmt(&[
            "mc",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(matches!(o.status.code(), Some(0 | 1)));
        outputs.push(out);
    }
    for name in [
        "results.csv",
        "checks.csv",
        "results.json",
        "manifest.json",
        "hist_o.csv",
    ] {
        let a = std::fs::read(outputs[0].join(name)).unwrap();
        let b = std::fs::read(outputs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn threads_env_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"seed": 3, "experiments": [{"name": "t", "kind": "trace", "n": 4, "p": 2, "law": "gaussian", "replicates": 100}]}"#,
    );
    let o = Command::new(env!("CARGO_BIN_EXE_rmt-lab"))
        .args([
            "mc",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .env("RMT_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn quick_verify_writes_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let o = rmt(&[
        "verify",
        "--quick",
        "--out",
        out.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert!(matches!(o.status.code(), Some(0 | 1)));
    let crit = std::fs::read_to_string(out.join("criteria.csv")).unwrap();
    assert_eq!(crit.lines().count(), 18);
    assert!(crit.lines().nth(17).unwrap().starts_with("17,"));
    assert!(stdout(&o).contains("17 pass"), "{}", stdout(&o));
}
