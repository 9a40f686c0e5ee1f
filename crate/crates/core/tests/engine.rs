use rmtlab::mcengine::{render_run, run_config, run_experiment, ExperimentKind, RunConfig};
use rmtlab::Error;

fn config(body: &str) -> RunConfig {
    RunConfig::from_json_str(&format!(r#"{{"seed": 99, "experiments": [{body}]}}"#)).unwrap()
}

fn one(body: &str) -> rmtlab::mcengine::ExperimentResult {
    let cfg = config(body);
    run_experiment(&cfg.experiments[0], &cfg.tolerances).unwrap()
}

#[test]
fn offdiag_raw_variance_matches_oracle() {
    let r = one(
        r#"{"name": "o", "kind": "entry_offdiag", "n": 2, "p": 2, "law": "rademacher",
            "replicates": 100000, "oracle": true}"#,
    );
    let s = r.summary.as_ref().unwrap();
    assert_eq!(s.exact_variance.as_deref(), Some("1/2"));
    assert!((s.moments.variance - 0.5).abs() <= 4.0 * s.moments.se_variance);
    assert!(r.pass, "{:?}", r.checks);
}

#[test]
fn wishart_oracle_and_first_power() {
    let r = one(
        r#"{"name": "w", "kind": "wishart_trace", "n": 2, "N": 4, "p": 2, "law": "rademacher",
            "replicates": 100000, "oracle": true}"#,
    );
    assert_eq!(
        r.summary.as_ref().unwrap().exact_mean.as_deref(),
        Some("5/2")
    );
    assert!(r.pass, "{:?}", r.checks);

    let r = one(
        r#"{"name": "w1", "kind": "wishart_trace", "n": 20, "N": 30, "p": 1, "law": "gaussian", "replicates": 500}"#,
    );
    let s = r.summary.unwrap();
    assert_eq!(s.target_mean, Some(20.0));
    assert!((s.moments.mean - 20.0).abs() <= 4.0 * s.moments.se_mean);
}

#[test]
fn odd_trace_is_centred() {
    let r = one(
        r#"{"name": "t", "kind": "trace", "n": 40, "p": 3, "law": "rademacher", "replicates": 400}"#,
    );
    assert_eq!(r.summary.as_ref().unwrap().target_mean, Some(0.0));
    assert!(r.pass, "{:?}", r.checks);
}

#[test]
fn charfn_zero_theta_has_zero_gap() {
    let r = one(
        r#"{"name": "c", "kind": "charfn_probe", "n": 8, "p": 2, "law": "gaussian", "replicates": 200,
            "theta": {"count": 4, "norm": 1.0}}"#,
    );
    let rows = &r.charfn.unwrap().rows;
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0].gap, 0.0);
    assert_eq!(rows[0].theta_norm, 0.0);
    assert!(rows[1..]
        .iter()
        .all(|row| (row.theta_norm - 1.0).abs() < 1e-12));
}

#[test]
fn exploratory_runs_have_no_gating_checks() {
    let r = one(
        r#"{"name": "d", "kind": "entry_diag", "n": 30, "p": 3, "law": "gaussian", "replicates": 200,
            "exploratory": true}"#,
    );
    assert!(r.checks.iter().all(|c| !c.gating));
    assert!(r.pass);
    assert_eq!(r.kind, ExperimentKind::EntryDiag);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let cfg = config(
        r#"{"name": "a", "kind": "trace", "n": 12, "p": 4, "law": "gaussian", "replicates": 300,
            "histogram": {"bins": 10, "lo": 0.0, "hi": 40.0}},
           {"name": "b", "kind": "entry_offdiag", "n": 12, "p": 3, "law": "uniform", "replicates": 300},
           {"name": "c", "kind": "eigenvector", "n": 10, "p": 1, "law": "rademacher", "replicates": 30}"#,
    );
    let (a, _) = render_run(&run_config(&cfg, 1).unwrap(), b"x").unwrap();
    let (b, _) = render_run(&run_config(&cfg, 4).unwrap(), b"x").unwrap();
    assert_eq!(a, b);
    assert!(a.get("hist_a.csv").is_some());
}

#[test]
fn manifest_digest_tracks_config_bytes() {
    let cfg = config(
        r#"{"name": "a", "kind": "trace", "n": 4, "p": 2, "law": "gaussian", "replicates": 100}"#,
    );
    let res = run_config(&cfg, 1).unwrap();
    let (_, m1) = render_run(&res, b"one").unwrap();
    let (_, m2) = render_run(&res, b"one").unwrap();
    let (_, m3) = render_run(&res, b"one ").unwrap();
    assert_eq!(m1.config_sha256, m2.config_sha256);
    assert_ne!(m1.config_sha256, m3.config_sha256);
}

#[test]
fn oversized_runs_hit_the_guard() {
    let cfg = config(
        r#"{"name": "big", "kind": "trace", "n": 4096, "p": 64, "law": "gaussian", "replicates": 100000}"#,
    );
    assert!(matches!(
        run_config(&cfg, 1),
        Err(Error::ResourceGuard { .. })
    ));
}

#[test]
fn bundle_writes_everything() {
    let cfg = config(
        r#"{"name": "a", "kind": "trace", "n": 4, "p": 2, "law": "gaussian", "replicates": 100}"#,
    );
    let (files, _) = render_run(&run_config(&cfg, 1).unwrap(), b"x").unwrap();
    let dir = tempfile::tempdir().unwrap();
    files.write_to(dir.path()).unwrap();
    for name in ["results.csv", "checks.csv", "results.json", "manifest.json"] {
        assert_eq!(
            std::fs::read(dir.path().join(name)).unwrap(),
            files.get(name).unwrap()
        );
    }
    let leftovers = std::fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .ends_with(".partial")
        })
        .count();
    assert_eq!(leftovers, 0);
}
