//! End-to-end pipeline behaviour: artifact totality, stage composition,
//! determinism, overrides, and failure handling.

mod common;

use std::fs;

use commtrace::config::Detector;
use commtrace::stages;

#[test]
fn full_run_produces_every_artifact_with_ok_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::planted_config(dir.path());
    let manifest = stages::run_pipeline(&config).unwrap();
    assert_eq!(manifest.status, "ok");
    assert_eq!(manifest.windows.len(), 3);

    let out = &config.out;
    for idx in 0..3 {
        assert!(stages::edges_path(out, idx).is_file());
        assert!(stages::partition_path(out, idx).is_file());
        assert!(stages::layout_path(out, idx).is_file());
    }
    assert!(stages::lineage_path(out).is_file());
    assert!(stages::centroids_path(out).is_file());
    assert!(stages::profiles_path(out).is_file());
    assert!(stages::assessment_path(out).is_file());
    assert!(stages::events_path(out).is_file());
    assert!(stages::diagrams_dir(out).join("evolution.dot").is_file());
    assert!(stages::manifest_path(out).is_file());

    let manifest_json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(stages::manifest_path(out)).unwrap()).unwrap();
    assert_eq!(manifest_json["status"], "ok");
    assert!(manifest_json["timings_ms"].is_object());
    assert_eq!(manifest_json["load"]["missing_cited_meta"], 0);
}

#[test]
fn stage_composition_equals_monolithic_run() {
    let dir = tempfile::tempdir().unwrap();
    let mono = common::planted_config(dir.path());
    stages::run_pipeline(&mono).unwrap();

    let mut staged = mono.clone();
    staged.out = dir.path().join("staged");
    stages::stage_build(&staged).unwrap();
    stages::stage_detect(&staged).unwrap();
    stages::stage_track(&staged).unwrap();
    stages::stage_topics(&staged).unwrap();
    stages::stage_measures(&staged).unwrap();
    stages::stage_events(&staged).unwrap();
    stages::stage_layout(&staged).unwrap();
    stages::stage_diagram(&staged, &stages::DiagramOptions::default()).unwrap();

    let mono_files: Vec<_> = common::file_tree(&mono.out)
        .into_iter()
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .collect();
    let staged_files = common::file_tree(&staged.out);
    assert_eq!(mono_files, staged_files);
    for rel in &mono_files {
        let a = fs::read(mono.out.join(rel)).unwrap();
        let b = fs::read(staged.out.join(rel)).unwrap();
        assert_eq!(a, b, "stage composition differs in {}", rel.display());
    }
}

#[test]
fn repeated_stage_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::planted_config(dir.path());
    stages::run_pipeline(&config).unwrap();
    let first = fs::read(stages::events_path(&config.out)).unwrap();
    stages::stage_events(&config).unwrap();
    let second = fs::read(stages::events_path(&config.out)).unwrap();
    assert_eq!(first, second);
}

#[test]
fn raising_topic_threshold_only_removes_events() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::planted_config(dir.path());
    stages::run_pipeline(&config).unwrap();
    let baseline: Vec<String> = common::read_events(&config.out)
        .iter()
        .filter(|e| e["kind"] == "topic_change")
        .map(|e| e.to_string())
        .collect();

    let mut strict = config.clone();
    strict.theta_topic = 0.9;
    strict.out = dir.path().join("out_strict");
    stages::run_pipeline(&strict).unwrap();
    let restricted: Vec<String> = common::read_events(&strict.out)
        .iter()
        .filter(|e| e["kind"] == "topic_change")
        .map(|e| e.to_string())
        .collect();

    assert!(restricted.len() <= baseline.len());
    for e in &restricted {
        assert!(baseline.contains(e), "new event appeared under a stricter threshold");
    }
}

#[test]
fn imported_partitions_flow_through_assessment() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::planted_config(dir.path());
    stages::run_pipeline(&config).unwrap();

    // Re-use the detected partitions as an external import.
    let import_dir = dir.path().join("external");
    fs::create_dir_all(&import_dir).unwrap();
    for idx in 0..3 {
        fs::copy(
            stages::partition_path(&config.out, idx),
            stages::external_partition_path(&import_dir, idx),
        )
        .unwrap();
    }
    let mut imported = config.clone();
    imported.detector = Detector::Imported;
    imported.partitions = Some(import_dir);
    imported.out = dir.path().join("out_imported");
    let manifest = stages::run_pipeline(&imported).unwrap();
    assert_eq!(manifest.status, "ok");
    assert_eq!(manifest.community_counts, vec![3, 5, 5]);
    // Identical partitions give identical downstream artifacts.
    let a = fs::read(stages::assessment_path(&config.out)).unwrap();
    let b = fs::read(stages::assessment_path(&imported.out)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn validation_failure_reports_missing_keywords_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = common::planted_config(dir.path());
    config.keywords = dir.path().join("nope.tsv");
    let errors = config.validate();
    assert!(
        errors.iter().any(|e| e.contains("nope.tsv")),
        "validation must name the missing path: {errors:?}"
    );
    assert!(stages::run_pipeline(&config).is_err());
}

#[test]
fn failed_run_writes_failed_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::planted_config(dir.path());
    // Corrupt the docs file after validation would pass.
    fs::write(&config.docs, "D1\tnot_a_year\ta\n").unwrap();
    let err = stages::run_pipeline(&config);
    assert!(err.is_err());
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(stages::manifest_path(&config.out)).unwrap())
            .unwrap();
    assert_eq!(manifest["status"], "failed");
    assert!(!manifest["errors"].as_array().unwrap().is_empty());
}

#[test]
fn focused_diagram_selects_a_neighborhood() {
    let dir = tempfile::tempdir().unwrap();
    let config = common::planted_config(dir.path());
    stages::run_pipeline(&config).unwrap();
    let opts = stages::DiagramOptions {
        focus: vec![stages::parse_community_ref("w1:c3").unwrap()],
        min_fraction: Some(0.2),
        name: None,
    };
    let path = stages::stage_diagram(&config, &opts).unwrap();
    assert!(path.file_name().unwrap().to_string_lossy().contains("w1_c3"));
    let dot = fs::read_to_string(&path).unwrap();
    common::parse_dot(&dot).expect("focused diagram must parse");
    // The planted topic-change line (t-authors) passes through w1:c3.
    assert!(dot.contains("w1_c3"));
    // Unrelated lines are not reachable from the focus.
    assert!(!dot.contains("w1_c0"));
}

#[test]
fn empty_middle_window_flows_through() {
    // No cited documents in 2001: the middle snapshot has no nodes and
    // every stage must still complete.
    let dir = tempfile::tempdir().unwrap();
    let plants = vec![
        common::Plant {
            year: 2000,
            members: common::names("a", 0..6),
            keywords: vec!["alpha".into()],
        },
        common::Plant {
            year: 2000,
            members: common::names("b", 0..5),
            keywords: vec!["beta".into()],
        },
        common::Plant {
            year: 2002,
            members: common::names("a", 0..6),
            keywords: vec!["alpha".into()],
        },
        common::Plant {
            year: 2002,
            members: common::names("b", 0..5),
            keywords: vec!["beta".into()],
        },
    ];
    let config = common::write_corpus(dir.path(), &plants, "out");
    let manifest = stages::run_pipeline(&config).unwrap();
    assert_eq!(manifest.status, "ok");
    assert_eq!(manifest.community_counts, vec![2, 0, 2]);
    assert_eq!(manifest.event_count, Some(0));
    let empty_edges = fs::read(stages::edges_path(&config.out, 1)).unwrap();
    assert!(empty_edges.is_empty());
}

#[test]
fn parse_community_ref_syntax() {
    assert!(stages::parse_community_ref("w3:c15").is_ok());
    assert!(stages::parse_community_ref("3:15").is_err());
    assert!(stages::parse_community_ref("w3c15").is_err());
}
