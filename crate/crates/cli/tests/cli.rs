use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn cxgvar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cxgvar"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Synthetic inputs plus their config under `dir/in`.
fn fixture(dir: &Path) -> PathBuf {
    let input = dir.join("in");
    let out = cxgvar(&["synth", "--out", s(&input)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    input.join("cxgvar.toml")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn pipeline(config: &Path, run: &Path, steps: &[&str], extra: &[&str]) {
    for step in steps {
        let mut args = vec![*step, "--config", s(config), "--run-dir", s(run)];
        args.extend(extra);
        let o = cxgvar(&args);
        assert!(o.status.success(), "{step}: {}", stderr(&o));
        assert_eq!(stdout(&o).lines().count(), 1, "{step} prints one summary line");
        assert!(stdout(&o).starts_with(step));
    }
}

#[test]
fn evaluate_weighted_f_matches_confusion_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let run = dir.path().join("run");
    // Early-stage country models on this fixture make real errors.
    let flags = ["--granularity", "country", "--stage", "early"];
    pipeline(
        &config,
        &run,
        &["areas", "sample", "features", "train", "evaluate"],
        &flags,
    );

    let confusion: Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("confusion/country-early.json")).unwrap()).unwrap();
    let m: Vec<Vec<f64>> = confusion["confusion"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect();
    let total: f64 = m.iter().flatten().sum();
    let mut weighted = 0.0;
    for (c, row) in m.iter().enumerate() {
        let tp = row[c];
        let predicted: f64 = m.iter().map(|r| r[c]).sum();
        let actual: f64 = row.iter().sum();
        let p = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let r = if actual > 0.0 { tp / actual } else { 0.0 };
        let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        weighted += f * actual / total;
    }

    let split: Value = serde_json::from_str(&std::fs::read_to_string(run.join("split.json")).unwrap()).unwrap();
    assert_eq!(total as usize, split["test"].as_array().unwrap().len());

    let csv = std::fs::read_to_string(run.join("metrics/country-early.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let fields: Vec<&str> = last.split(',').collect();
    assert_eq!(fields[0], "weighted_avg");
    let reported: f64 = fields[3].parse().unwrap();
    assert!((reported - weighted).abs() < 5e-7, "{reported} vs {weighted}");
    assert!(weighted < 1.0, "fixture should produce some errors: {csv}");
}

#[test]
fn full_run_writes_every_artifact_family() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let run = dir.path().join("run");
    let o = cxgvar(&["all", "--config", s(&config), "--run-dir", s(&run), "--stage", "late"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 9);

    let expected = [
        "metrics/region-late.csv",
        "confusion/region-late.json",
        "nodes/region-late.csv",
        "unmasking.csv",
        "similarity/region-late-nodes.csv",
        "run_meta.json",
        "plots/nodes-region-late.svg",
        "plots/nodes-region-late.csv",
        "plots/unmasking.svg",
        "plots/unmasking.csv",
        "plots/correlation-region-late.svg",
        "plots/correlation-region-late.csv",
    ];
    for f in expected {
        assert!(run.join(f).is_file(), "missing {f}");
    }
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(run.join("run_meta.json")).unwrap()).unwrap();
    for key in ["config_hash", "grammar_hash", "split_hash"] {
        assert!(meta[key].as_str().is_some_and(|h| h.len() == 64), "{key}: {meta}");
    }
    assert!(meta["versions"]["cxgvar-cli"].is_string());
    let text = std::fs::read_to_string(run.join("run_meta.json")).unwrap();
    assert!(!text.contains(s(dir.path())), "run metadata must not embed local paths");
}

#[test]
fn missing_artifacts_exit_3_and_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let run = dir.path().join("run");
    for (step, artifact) in [
        ("sample", "areas.csv"),
        ("features", "samples.jsonl"),
        ("train", "features/matrix.f64"),
        ("node-scan", "features/matrix.f64"),
        ("error-corr", "nodes/region-all.json"),
    ] {
        let o = cxgvar(&[step, "--config", s(&config), "--run-dir", s(&run)]);
        assert_eq!(o.status.code(), Some(3), "{step}");
        assert!(stderr(&o).contains(artifact), "{step}: {}", stderr(&o));
    }
    pipeline(&config, &run, &["areas", "sample", "features"], &[]);
    let o = cxgvar(&["evaluate", "--config", s(&config), "--run-dir", s(&run)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("models/region-all.json"));
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let text = std::fs::read_to_string(&config).unwrap();
    let run = dir.path().join("run");
    let cases = [
        ("unknown key", format!("{text}\n[classifier]\nkernel = \"rbf\"\n")),
        ("missing file", text.replace("grammar.tsv", "absent.tsv")),
        ("bad value", format!("{text}\n[classifier]\nc = -1.0\n")),
        ("syntax", "seed = \n".to_string()),
    ];
    for (what, body) in cases {
        let bad = dir.path().join("bad.toml");
        std::fs::write(&bad, body).unwrap();
        let o = cxgvar(&["areas", "--config", s(&bad), "--run-dir", s(&run)]);
        assert_eq!(o.status.code(), Some(2), "{what}: {}", stderr(&o));
        assert!(stderr(&o).contains("invalid configuration"), "{what}");
    }
    let o = cxgvar(&["areas", "--config", s(&config), "--granularity", "planet"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cxgvar(&[
        "node-scan",
        "--config",
        s(&config),
        "--run-dir",
        s(&run),
        "--granularity",
        "local",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_without_node_results_writes_empty_scatter() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let run = dir.path().join("run");
    let o = cxgvar(&["report", "--config", s(&config), "--run-dir", s(&run)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svg = std::fs::read_to_string(run.join("plots/nodes-region-all.svg")).unwrap();
    assert!(svg.starts_with("<svg") && !svg.contains("<circle"));
    let csv = std::fs::read_to_string(run.join("plots/nodes-region-all.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn rerunning_a_step_overwrites_identically() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let run = dir.path().join("run");
    pipeline(
        &config,
        &run,
        &["areas", "sample", "features", "node-scan"],
        &["--granularity", "country"],
    );
    let before = std::fs::read(run.join("nodes/country-all.json")).unwrap();
    let meta_before = std::fs::read(run.join("run_meta.json")).unwrap();
    pipeline(
        &config,
        &run,
        &["node-scan"],
        &["--granularity", "country", "--threads", "2"],
    );
    assert_eq!(before, std::fs::read(run.join("nodes/country-all.json")).unwrap());
    assert_eq!(meta_before, std::fs::read(run.join("run_meta.json")).unwrap());
}

#[test]
fn local_granularity_trains_one_model_per_region() {
    let dir = tempfile::tempdir().unwrap();
    let config = fixture(dir.path());
    let run = dir.path().join("run");
    pipeline(
        &config,
        &run,
        &["areas", "sample", "features", "train", "evaluate"],
        &["--granularity", "local"],
    );
    let models: Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("models/local-all.json")).unwrap()).unwrap();
    let names: Vec<&str> = models
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["local-Europe", "local-North America", "local-Oceania"]);
    for slug in ["local-europe-all", "local-north-america-all", "local-oceania-all"] {
        assert!(run.join(format!("metrics/{slug}.csv")).is_file(), "{slug}");
    }
}
