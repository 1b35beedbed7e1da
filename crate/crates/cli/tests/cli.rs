use std::path::Path;
use std::process::{Command, Output};

use qwalk_cli::report::Aggregate;
use qwalk_cli::{run, ExperimentConfig, ExperimentKind, ExperimentReport, SCHEMA_VERSION};

fn qwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(kind);
    c.n = 80;
    c.trials = 4;
    c.seed = 17;
    match kind {
        ExperimentKind::Mixing => c.trials = 2000,
        ExperimentKind::Pathology => c.trials = 30,
        ExperimentKind::Preservation => {
            c.params.insert("disc_trials".into(), 100.0);
        }
        _ => {}
    }
    c
}

#[test]
fn reports_are_byte_identical_on_rerun() {
    for kind in ExperimentKind::ALL {
        let c = small(kind);
        let a = run(&c).unwrap().to_json();
        let b = run(&c).unwrap().to_json();
        assert_eq!(a, b, "{}", kind.name());
    }
}

#[test]
fn aggregates_recompute_from_trials_and_flags_match_checks() {
    for kind in ExperimentKind::ALL {
        let json = run(&small(kind)).unwrap().to_json();
        let r: ExperimentReport = serde_json::from_str(&json).unwrap();
        assert_eq!(r.schema_version, SCHEMA_VERSION);
        assert!(r.code_version.starts_with("qwalk-cli/"));
        assert_eq!(r.config, small(kind));
        for (name, agg) in &r.aggregates {
            assert_eq!(
                &Aggregate::from_values(&r.column(name)).unwrap(),
                agg,
                "{name}"
            );
        }
        for c in &r.checks {
            assert_eq!(c.pass, c.relation.holds(c.observed, c.threshold));
        }
        assert_eq!(r.pass, r.checks.iter().all(|c| c.pass));
        assert!(r.predicted.iter().all(|p| !p.formula.is_empty()));
        let indices: Vec<u64> = r.trials.iter().map(|t| t.index).collect();
        assert!(indices.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn report_json_has_stable_top_level_fields() {
    let v: serde_json::Value =
        serde_json::from_str(&run(&small(ExperimentKind::Density)).unwrap().to_json()).unwrap();
    for key in [
        "schema_version",
        "code_version",
        "config",
        "host",
        "trials",
        "aggregates",
        "predicted",
        "derived",
        "checks",
        "notes",
        "pass",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn generate_then_certify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt.gz");
    let g = graph.to_str().unwrap();
    let out = qwalk(&[
        "generate", "--kind", "gnp", "--n", "40", "--p", "0.5", "--seed", "3", "--out", g,
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report = dir.path().join("cert.json");
    let out = qwalk(&[
        "certify",
        "--graph",
        g,
        "--eps",
        "0.3",
        "--trials",
        "300",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["method"], "sampled");
    assert!(v["discrepancy"].as_f64().unwrap() >= 0.0);
    assert_eq!(
        out.status.code() == Some(0),
        v["discrepancy"].as_f64().unwrap() <= 0.3,
        "exit code follows the certificate"
    );
}

#[test]
fn exhaustive_certify_on_small_graph() {
    let out = qwalk(&[
        "certify",
        "--kind",
        "cycle",
        "--n",
        "5",
        "--eps",
        "0.2",
        "--exhaustive",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["method"], "exhaustive");
    // C5 at ε = 0.2: a single vertex against itself deviates by the full density.
    assert!((v["discrepancy"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn walk_writes_trace_and_subgraph() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.txt");
    let sub = dir.path().join("s.txt");
    let out = qwalk(&[
        "walk",
        "--n",
        "30",
        "--steps",
        "200",
        "--walk-seed",
        "5",
        "--trace-out",
        trace.to_str().unwrap(),
        "--subgraph-out",
        sub.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["steps"], 200);
    let host = qwalk_core::gen_gnp(30, 0.5, 1).unwrap();
    let t = qwalk_core::io::read_trace(qwalk_core::io::open(&trace).unwrap(), &host).unwrap();
    assert_eq!(t.steps(), 200);
    let s = qwalk_core::io::read_graph(qwalk_core::io::open(&sub).unwrap()).unwrap();
    assert_eq!(s.edge_count(), v["walk_edges"].as_u64().unwrap());
}

#[test]
fn tree_with_decomposition() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.txt");
    let map = dir.path().join("map.txt");
    let out = qwalk(&[
        "tree",
        "--n",
        "40",
        "--alpha",
        "0.1",
        "--decompose",
        "7",
        "--tree-out",
        tree.to_str().unwrap(),
        "--map-out",
        map.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["tree_edges"], 160);
    assert!(v["decomposition"]["violations"]
        .as_array()
        .unwrap()
        .is_empty());
    let t = qwalk_core::io::read_tree(qwalk_core::io::open(&tree).unwrap()).unwrap();
    assert_eq!(t.edge_count(), 160);
    assert_eq!(std::fs::read_to_string(&map).unwrap().lines().count(), 161);
}

#[test]
fn experiment_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = qwalk(&[
        "experiment",
        "density",
        "--n",
        "200",
        "--trials",
        "3",
        "--alpha",
        "0.3",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let mut cfg = small(ExperimentKind::Density);
    cfg.tolerances.insert("edges_relative_error".into(), 0.0);
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let report = dir.path().join("r.json");
    let out = qwalk(&[
        "experiment",
        "density",
        "--config",
        path.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(Path::new(&report).exists());

    assert_eq!(
        qwalk(&["experiment", "no-such-thing"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qwalk(&["experiment", "density", "--eps", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(qwalk(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        qwalk(&["experiment", "density", "--format", "xml"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn cli_output_matches_library() {
    let out = qwalk(&[
        "experiment",
        "visits",
        "--n",
        "70",
        "--trials",
        "2",
        "--seed",
        "4",
        "--alpha",
        "0.4",
    ]);
    let mut cfg = ExperimentConfig::preset(ExperimentKind::Visits);
    cfg.n = 70;
    cfg.trials = 2;
    cfg.seed = 4;
    cfg.alpha = 0.4;
    let expected = run(&cfg).unwrap().to_json();
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim_end(), expected);
}
