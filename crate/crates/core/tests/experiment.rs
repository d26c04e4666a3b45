use std::fs;

use slastream::experiment::{run_experiment, ExperimentConfig, RunOptions};
use slastream::tracegen::{
    read_trace, synthesize_trace, write_trace, LoadPattern, LoadShape, TestbedProfile,
};
use slastream::Error;

fn config(body: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(body).unwrap()
}

const TABLE_II: &str = r#"{
    "seed": 3,
    "traces": [
        {"name": "A", "source": "generated", "pattern": "periodic", "profile": "profile-a", "duration": "20m"},
        {"name": "B", "source": "generated", "pattern": "periodic", "profile": "profile-b", "duration": "20m"},
        {"name": "C", "source": "generated", "pattern": "flashcrowd", "profile": "profile-a", "duration": "20m"}
    ],
    "runs": [{"learner": {"method": "random_forest", "n_trees": 10}, "protocol": "holdout", "traces": ["A", "B", "C"]}]
}"#;

#[test]
fn holdout_matrix_gives_one_row_per_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_experiment(&config(TABLE_II), &RunOptions::new(dir.path())).unwrap();
    assert_eq!(out.records.len(), 3);
    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].starts_with("run_id,method,protocol,train_trace,test_trace"));
    assert!(lines[1].starts_with("random_forest-holdout-A,random_forest,holdout,A,A,"));
    let txt = fs::read_to_string(dir.path().join("metrics.txt")).unwrap();
    assert!(txt.contains("[holdout]"));
    for t in ["A", "B", "C"] {
        assert!(dir.path().join(format!("traces/{t}.csv")).exists());
        assert!(dir.path().join(format!("traces/{t}.meta.json")).exists());
    }
    for r in &out.records {
        let m = r.report;
        let ba = (m.tpr.unwrap() + m.tnr.unwrap()) / 2.0;
        assert!((m.ba.unwrap() - ba).abs() < 1e-12);
    }
}

#[test]
fn concat_prequential_records_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        r#"{
        "traces": [
            {"name": "A", "source": "generated", "pattern": "periodic", "profile": "profile-a", "duration": 1200},
            {"name": "B", "source": "generated", "pattern": "periodic", "profile": "profile-b", "duration": 1200}
        ],
        "concat": [{"name": "A+B", "parts": ["A", "B"]}],
        "runs": [{"learner": {"method": "oaue", "block_size": 200}, "protocol": "prequential", "traces": ["A+B"]}]
    }"#,
    );
    let out = run_experiment(&cfg, &RunOptions::new(dir.path())).unwrap();
    let rec = &out.records[0];
    assert_eq!(rec.series_boundaries, vec![1200 - 500]);
    let series = fs::read_to_string(dir.path().join(rec.series.as_ref().unwrap())).unwrap();
    assert_eq!(
        series.lines().next(),
        Some("index,cumulative,win_5000,win_1000")
    );
    assert_eq!(series.lines().count(), 1 + 2400 - 500);
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run-metadata.json")).unwrap())
            .unwrap();
    let cat = meta["traces"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["name"] == "A+B")
        .unwrap();
    assert_eq!(cat["boundaries"], serde_json::json!([1200]));
    assert_eq!(
        meta["runs"][0]["series_boundaries"],
        serde_json::json!([700])
    );
}

#[test]
fn failing_run_is_named_and_partial_results_kept() {
    let dir = tempfile::tempdir().unwrap();
    // 400 rows is shorter than the 500-sample bootstrap
    let cfg = config(
        r#"{
        "traces": [
            {"name": "short", "source": "generated", "pattern": "periodic", "profile": "profile-a", "duration": 400},
            {"name": "ok", "source": "generated", "pattern": "periodic", "profile": "profile-a", "duration": 1500}
        ],
        "runs": [
            {"learner": {"method": "hoeffding_tree"}, "protocol": "prequential", "traces": ["short", "ok"]}
        ]
    }"#,
    );
    let err = run_experiment(&cfg, &RunOptions::new(dir.path())).unwrap_err();
    match &err {
        Error::RunsFailed {
            failed,
            first,
            message,
        } => {
            assert_eq!(
                failed,
                &vec!["hoeffding_tree-prequential-short".to_string()]
            );
            assert_eq!(first, "hoeffding_tree-prequential-short");
            assert!(message.contains("insufficient bootstrap"));
        }
        other => panic!("{other:?}"),
    }
    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.contains("hoeffding_tree-prequential-ok"));
    let meta = fs::read_to_string(dir.path().join("run-metadata.json")).unwrap();
    assert!(meta.contains("\"failures\""));
    assert!(meta.contains("insufficient bootstrap"));
}

#[test]
fn file_traces_resolve_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let trace = synthesize_trace(
        &LoadPattern::new(LoadShape::periodic(), 1500, 5),
        &TestbedProfile::default_profile(),
    )
    .unwrap();
    fs::create_dir(dir.path().join("data")).unwrap();
    write_trace(&trace, &dir.path().join("data/ext.csv")).unwrap();
    let cfg_path = dir.path().join("exp.json");
    fs::write(
        &cfg_path,
        r#"{
        "traces": [{"name": "ext", "source": "file", "path": "data/ext.csv"}],
        "runs": [{"learner": {"method": "cart"}, "protocol": "holdout", "traces": ["ext"]},
                 {"learner": {"method": "sgd_logistic"}, "protocol": "prequential", "traces": ["ext"]}]
    }"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&cfg_path).unwrap();
    let out_dir = dir.path().join("out");
    let out = run_experiment(&cfg, &RunOptions::new(&out_dir)).unwrap();
    assert_eq!(out.records.len(), 2);
    let copied = read_trace(&out_dir.join("traces/ext.csv")).unwrap();
    assert_eq!(copied.rows, trace.rows);
}

#[test]
fn outputs_are_determined_by_config_and_seed() {
    let run = |workers| {
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions {
            workers: Some(workers),
            stride: 7,
            ..RunOptions::new(dir.path())
        };
        let cfg = config(
            r#"{
            "traces": [{"name": "A", "source": "generated", "pattern": "flashcrowd", "profile": "profile-a", "duration": 1500}],
            "runs": [{"learner": {"method": "oaue"}, "protocol": "prequential", "traces": ["A"]},
                     {"learner": {"method": "random_forest", "n_trees": 8}, "protocol": "holdout", "traces": ["A"]}]
        }"#,
        );
        run_experiment(&cfg, &opts).unwrap();
        let mut files = Vec::new();
        for sub in ["", "series", "traces"] {
            let mut names: Vec<_> = fs::read_dir(dir.path().join(sub))
                .unwrap()
                .map(|e| e.unwrap().path())
                .filter(|p| p.is_file())
                .collect();
            names.sort();
            for p in names {
                files.push((p.file_name().unwrap().to_owned(), fs::read(&p).unwrap()));
            }
        }
        files
    };
    assert_eq!(run(1), run(4));
}
