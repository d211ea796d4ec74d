mod support;

use std::collections::BTreeMap;
use std::process::Command;
use std::sync::Arc;

use ideograph::config::Config;
use ideograph::pipeline::{self, GraphSummary, Skipped};
use ideograph_core::eval::EvalReport;
use ideograph_core::{BaselineKind, Paradigm, PredictionSet, PromptMode, Subgraph};
use support::fixtures::{fixture_dir, read};

fn sink() -> std::io::Sink {
    std::io::sink()
}

/// Counts labels and relations straight from the dump lines.
fn count_lines(nodes: &str, edges: &str) -> GraphSummary {
    let mut labels = BTreeMap::new();
    let mut relations = BTreeMap::new();
    let (mut n, mut e) = (0, 0);
    for line in nodes.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        *labels
            .entry(v["label"].as_str().unwrap().to_string())
            .or_insert(0) += 1;
        n += 1;
    }
    for line in edges.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        *relations
            .entry(v["relation"].as_str().unwrap().to_string())
            .or_insert(0) += 1;
        e += 1;
    }
    GraphSummary {
        nodes: n,
        edges: e,
        labels,
        relations,
    }
}

#[test]
fn ingest_counts_match_the_dump_and_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = support::toy_config(dir.path());
    let summary = pipeline::ingest(&cfg, &mut sink()).unwrap();
    let oracle = count_lines(&read("toy", "nodes.jsonl"), &read("toy", "edges.jsonl"));
    assert_eq!(summary, oracle);
    let manifest: GraphSummary = serde_json::from_str(&read("toy", "manifest.json")).unwrap();
    assert_eq!(summary, manifest);
    assert!(dir.path().join("manifests/ingest.manifest.json").exists());
}

#[test]
fn ingest_of_an_empty_dump_has_zero_counts_and_corrupt_lines_are_named() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = dir.path().join("n.jsonl");
    let edges = dir.path().join("e.jsonl");
    std::fs::write(&nodes, "").unwrap();
    std::fs::write(&edges, "").unwrap();
    let cfg = Config {
        nodes: Some(nodes.clone()),
        edges: Some(edges.clone()),
        out: dir.path().join("out"),
        ..Config::default()
    };
    let s = pipeline::ingest(&cfg, &mut sink()).unwrap();
    assert_eq!(
        (s.nodes, s.edges, s.labels.len(), s.relations.len()),
        (0, 0, 0, 0)
    );

    std::fs::write(
        &nodes,
        "{\"id\": \"a\", \"label\": \"Person\", \"properties\": {}}\n{not json\n",
    )
    .unwrap();
    let err = format!("{:#}", pipeline::ingest(&cfg, &mut sink()).unwrap_err());
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn extract_writes_one_file_per_mp_and_reports_the_absent() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = support::toy_config(dir.path());
    cfg.paradigm = Some(Paradigm::MpCentric);
    let summaries = pipeline::extract(&cfg, &mut sink()).unwrap();
    assert_eq!(summaries.len(), 1);
    assert_eq!(summaries[0].written, 7);
    let sg_dir = pipeline::subgraph_dir(&cfg, Paradigm::MpCentric);
    let skipped: Vec<Skipped> = ideograph::io::read_json(&sg_dir.join("skipped.json")).unwrap();
    assert_eq!(skipped.len(), 1);
    assert_eq!(skipped[0].uid, "999");

    let sg: Subgraph = ideograph::io::read_json(&sg_dir.join("74.json")).unwrap();
    let mut labels: Vec<&str> = sg
        .triplets
        .iter()
        .map(|t| t.far_node.label.as_str())
        .collect();
    labels.sort_unstable();
    labels.dedup();
    assert_eq!(labels.len(), 6, "{labels:?}");
}

#[test]
fn extract_samples_and_is_independent_of_jobs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut cfg = support::toy_config(a.path());
    cfg.sample_n = Some(3);
    cfg.seed = 11;
    pipeline::extract(&cfg, &mut sink()).unwrap();
    for p in Paradigm::ALL {
        for file in ideograph::io::json_files(&pipeline::subgraph_dir(&cfg, p)).unwrap() {
            let name = file.file_name().unwrap().to_str().unwrap();
            if name == "settings.json" || name == "skipped.json" {
                continue;
            }
            let sg: Subgraph = ideograph::io::read_json(&file).unwrap();
            assert!(sg.triplets.len() <= 3, "{name}: {}", sg.triplets.len());
        }
    }
    let mut cfg_b = cfg.clone();
    cfg_b.out = b.path().to_path_buf();
    cfg_b.jobs = 4;
    pipeline::extract(&cfg_b, &mut sink()).unwrap();
    assert_eq!(support::snapshot(a.path()), support::snapshot(b.path()));
}

#[test]
fn predict_with_a_fixed_stub_and_rerun_from_cache() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = support::toy_config(dir.path());
    cfg.paradigm = Some(Paradigm::PursuitCentric);
    pipeline::extract(&cfg, &mut sink()).unwrap();

    let stub = Arc::new(support::Recording::new("4.2"));
    let set = pipeline::predict_with(&cfg, Arc::new(stub.clone()), &mut sink()).unwrap();
    assert!(set.entries.values().all(|v| *v == 4.2));
    assert_eq!(set.entries.len(), 7);
    assert_eq!(set.excluded.len(), 1);
    assert_eq!(stub.prompts().len(), 7);
    let path = pipeline::prediction_path(&cfg, &cfg.method_name());
    let first = std::fs::read(&path).unwrap();

    let again = Arc::new(support::Recording::new("4.2"));
    pipeline::predict_with(&cfg, Arc::new(again.clone()), &mut sink()).unwrap();
    assert_eq!(again.prompts().len(), 0, "rerun reached the provider");
    assert_eq!(std::fs::read(&path).unwrap(), first);
}

#[test]
fn bloc_mean_stub_equals_the_party_bloc_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let records = support::cohort(40, 9);
    let mut cfg = support::cohort_config(dir.path(), &records);
    cfg.provider = "bloc-mean".into();
    let stub = pipeline::predict(&cfg, &mut sink()).unwrap();
    let base = pipeline::baseline(&cfg, BaselineKind::PartyBlocMean, false, &mut sink()).unwrap();
    let oracle = support::bloc_mean_oracle(&records);
    assert_eq!(stub.entries, base.entries);
    for r in &records {
        let want = oracle[&r.bloc];
        assert!((stub.entries[&r.uid] - want).abs() < 1e-12, "{}", r.uid);
    }
}

#[test]
fn bloc_mean_stub_reads_a_bloc_table() {
    let dir = tempfile::tempdir().unwrap();
    let records = support::cohort(10, 2);
    let mut cfg = support::cohort_config(dir.path(), &records);
    let table = dir.path().join("blocs.csv");
    std::fs::write(
        &table,
        "bloc,score\nGreens,9.5\nSocial Democrats,8.25\nCenter,5\nLiberals,3.75\nSVP,1\n",
    )
    .unwrap();
    cfg.provider = "bloc-mean".into();
    cfg.bloc_table = Some(table);
    let set = pipeline::predict(&cfg, &mut sink()).unwrap();
    let expect: BTreeMap<&str, f64> = [
        ("Greens", 9.5),
        ("Social Democrats", 8.25),
        ("Center", 5.0),
        ("Liberals", 3.75),
        ("SVP", 1.0),
    ]
    .into();
    for r in &records {
        assert_eq!(set.entries[&r.uid], expect[r.bloc.as_str()]);
    }
}

#[test]
fn few_shot_prompts_exclude_the_target_and_carry_example_contexts() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = support::toy_config(dir.path());
    cfg.paradigm = Some(Paradigm::MpCentric);
    cfg.mode = PromptMode::FewShot;
    cfg.example_context = true;
    pipeline::extract(&cfg, &mut sink()).unwrap();
    let stub = Arc::new(support::Recording::new("5"));
    pipeline::predict_with(&cfg, Arc::new(stub.clone()), &mut sink()).unwrap();
    let prompts = stub.prompts();
    assert_eq!(prompts.len(), 7);
    for p in &prompts {
        let target = p.lines().rev().find(|l| l.starts_with("Name: ")).unwrap();
        let examples: Vec<&str> = p
            .lines()
            .filter(|l| l.starts_with("Name: ") && l.contains("Score: ") && *l != target)
            .collect();
        assert_eq!(examples.len(), 3, "{p}");
        let name = target.split(", Party").next().unwrap();
        assert!(examples.iter().all(|e| !e.starts_with(&format!("{name},"))));
        assert!(p.matches("MP background information:").count() >= 2, "{p}");
    }
}

#[test]
fn predict_refuses_subgraphs_from_other_settings() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = support::toy_config(dir.path());
    cfg.paradigm = Some(Paradigm::SpeechCentric);
    pipeline::extract(&cfg, &mut sink()).unwrap();
    cfg.window_start = "2016-01-01".into();
    let err = pipeline::predict(&cfg, &mut sink())
        .unwrap_err()
        .to_string();
    assert!(err.contains("run extract again"), "{err}");
    cfg.paradigm = Some(Paradigm::MpCentric);
    let err = pipeline::predict(&cfg, &mut sink())
        .unwrap_err()
        .to_string();
    assert!(err.contains("run extract first"), "{err}");
}

#[test]
fn evaluate_perfect_and_stub_predictors() {
    let dir = tempfile::tempdir().unwrap();
    let records = support::cohort(25, 3);
    let mut cfg = support::cohort_config(dir.path(), &records);

    cfg.provider = "gt-plus-noise:0:1".into();
    cfg.method = Some("perfect".into());
    pipeline::predict(&cfg, &mut sink()).unwrap();
    cfg.provider = "fixed:5".into();
    cfg.method = Some("five".into());
    pipeline::predict(&cfg, &mut sink()).unwrap();
    cfg.provider = "gt-plus-noise:1:3".into();
    cfg.method = Some("noisy".into());
    let noisy = pipeline::predict(&cfg, &mut sink()).unwrap();

    cfg.reference = Some("five".into());
    let reports = pipeline::evaluate(&cfg, &[], None, &mut sink()).unwrap();
    let by: BTreeMap<&str, &EvalReport> = reports.iter().map(|r| (r.method.as_str(), r)).collect();
    let perfect = by["perfect"];
    assert!(perfect.mae.abs() < 1e-3 && perfect.rmse.abs() < 1e-3);
    assert!((perfect.spearman.unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(by["five"].spearman, None);

    let rmse = |preds: &BTreeMap<String, f64>| {
        let sq: f64 = records
            .iter()
            .map(|r| (preds[&r.uid] - r.ground_truth.unwrap()).powi(2))
            .sum();
        (sq / records.len() as f64).sqrt()
    };
    let five: BTreeMap<String, f64> = records.iter().map(|r| (r.uid.clone(), 5.0)).collect();
    let hand = 100.0 * (rmse(&five) - rmse(&noisy.entries)) / rmse(&five);
    let csv = std::fs::read_to_string(dir.path().join("out/reports/improvement.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("noisy,")).unwrap();
    let pct: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((pct - hand).abs() < 1e-9, "{pct} vs {hand}");

    let comparison =
        std::fs::read_to_string(dir.path().join("out/reports/comparison.txt")).unwrap();
    for m in ["perfect", "five", "noisy"] {
        assert!(comparison.contains(m));
        assert!(dir
            .path()
            .join(format!("out/reports/scatter/{m}.csv"))
            .exists());
    }
}

#[test]
fn evaluate_counts_uids_without_ground_truth_overlap() {
    let dir = tempfile::tempdir().unwrap();
    let records = support::cohort(10, 5);
    let cfg = support::cohort_config(dir.path(), &records);
    let mut set = PredictionSet::new("partial");
    for r in records.iter().take(6) {
        set.entries.insert(r.uid.clone(), 5.0);
    }
    set.entries.insert("not-a-member".into(), 5.0);
    set.exclude(&records[6].uid, "no number");
    let path = dir.path().join("partial.json");
    ideograph::io::write_json(&path, &set).unwrap();
    let reports = pipeline::evaluate(&cfg, &[path], None, &mut sink()).unwrap();
    assert_eq!(reports[0].n, 6);
    assert!(reports[0].exclusions >= 1);
}

#[test]
fn irt_writes_rescaled_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = support::toy_config(dir.path());
    cfg.irt_min_responses = 5;
    let fit = pipeline::irt(&cfg, &mut sink()).unwrap();
    assert!(fit.converged);
    let scored = ideograph::io::read_records(&dir.path().join("irt/records_scored.csv")).unwrap();
    let scores: Vec<f64> = scored.iter().filter_map(|r| r.ground_truth).collect();
    assert_eq!(scores.len(), 7);
    assert!(scores.iter().all(|s| (0.0..=10.0).contains(s)));
    assert!(scores.contains(&0.0) && scores.contains(&10.0));
    let by_uid: BTreeMap<&str, f64> = scored
        .iter()
        .filter_map(|r| Some((r.uid.as_str(), r.ground_truth?)))
        .collect();
    assert!(
        by_uid["101"] > by_uid["102"],
        "Social Democrat must sit left of SVP"
    );
    assert!(scored
        .iter()
        .any(|r| r.uid == "999" && r.ground_truth.is_none()));

    cfg.irt_max_iter = 1;
    assert!(pipeline::irt(&cfg, &mut sink()).is_err());
    cfg.allow_unconverged = true;
    let fit = pipeline::irt(&cfg, &mut sink()).unwrap();
    assert!(!fit.converged && fit.rescaled.is_empty());
}

#[test]
fn manifests_differ_exactly_when_settings_or_inputs_do() {
    let a = tempfile::tempdir().unwrap();
    let mut cfg = support::toy_config(a.path());
    pipeline::baseline(&cfg, BaselineKind::PartyMean, false, &mut sink()).unwrap();
    let path = a.path().join("manifests/baseline-pm.manifest.json");
    let first = std::fs::read(&path).unwrap();
    cfg.out = a.path().join("elsewhere");
    pipeline::baseline(&cfg, BaselineKind::PartyMean, false, &mut sink()).unwrap();
    assert_eq!(
        std::fs::read(cfg.out.join("manifests/baseline-pm.manifest.json")).unwrap(),
        first
    );
    cfg.seed = 99;
    pipeline::baseline(&cfg, BaselineKind::PartyMean, false, &mut sink()).unwrap();
    assert_ne!(
        std::fs::read(cfg.out.join("manifests/baseline-pm.manifest.json")).unwrap(),
        first
    );
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ideograph"))
}

#[test]
fn binary_runs_the_pipeline_from_a_config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let toy = fixture_dir("toy");
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "nodes = {:?}\nedges = {:?}\nrecords = {:?}\nout = {:?}\nparadigm = \"sp\"\nprovider = \"fixed:1\"\n",
            toy.join("nodes.jsonl"),
            toy.join("edges.jsonl"),
            toy.join("records.csv"),
            dir.path().join("out"),
        ),
    )
    .unwrap();
    let run = |args: &[&str]| {
        let out = bin()
            .arg("--config")
            .arg(&config)
            .args(args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };
    assert!(run(&["ingest"]).contains("nodes: 42"));
    run(&["extract", "--paradigm", "mp"]);
    let out = run(&[
        "predict",
        "--paradigm",
        "mp",
        "--provider",
        "fixed:4.2",
        "--jobs",
        "3",
    ]);
    assert!(
        out.contains("zero-mp-r: 7 predictions, 1 excluded"),
        "{out}"
    );
    run(&["baseline", "--kind", "pbm"]);
    let table = run(&["evaluate", "--reference", "pbm"]);
    assert!(
        table.contains("zero-mp-r") && table.contains("pbm"),
        "{table}"
    );
    assert_eq!(run(&["report"]).lines().next(), table.lines().next());

    let set: PredictionSet =
        ideograph::io::read_json(&dir.path().join("out/predictions/zero-mp-r.json")).unwrap();
    assert!(set.entries.values().all(|v| *v == 4.2));
}

#[test]
fn binary_reports_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["predict", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("records is not configured"));

    let out = bin()
        .args([
            "ingest",
            "--nodes",
            "/nonexistent.jsonl",
            "--edges",
            "/nonexistent2.jsonl",
        ])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));

    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "paradigm = \"mp\"\ntypo_key = 1\n").unwrap();
    let out = bin()
        .arg("--config")
        .arg(&config)
        .arg("report")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("typo_key"));
}

#[test]
fn summarization_contexts_come_from_the_summarizer_and_are_reused() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = support::toy_config(dir.path());
    cfg.paradigm = Some(Paradigm::MpCentric);
    cfg.encoding = ideograph_core::EncodingMode::Summarization;
    cfg.summarizer_provider = Some("echo-prefix:60".into());
    pipeline::extract(&cfg, &mut sink()).unwrap();
    assert_eq!(pipeline::encode(&cfg, &mut sink()).unwrap(), 7);

    let stored: pipeline::StoredContext =
        ideograph::io::read_json(&dir.path().join("contexts/mp-s/74.json")).unwrap();
    let sg: Subgraph = ideograph::io::read_json(
        &pipeline::subgraph_dir(&cfg, Paradigm::MpCentric).join("74.json"),
    )
    .unwrap();
    let prompt = ideograph_core::encode::summarize_prompt(&sg, &cfg.encode_options());
    let want: String = prompt.chars().take(60).collect();
    assert_eq!(stored.context.text, want.trim());
    assert_eq!(
        stored.context.mode,
        ideograph_core::EncodingMode::Summarization
    );

    let stub = Arc::new(support::Recording::new("3"));
    pipeline::predict_with(&cfg, Arc::new(stub.clone()), &mut sink()).unwrap();
    let prompts = stub.prompts();
    assert!(prompts.iter().any(|p| p.contains(want.trim())));

    // a different summarizer invalidates the stored contexts
    cfg.summarizer_provider = Some("echo-prefix:30".into());
    pipeline::encode(&cfg, &mut sink()).unwrap();
    let stored: pipeline::StoredContext =
        ideograph::io::read_json(&dir.path().join("contexts/mp-s/74.json")).unwrap();
    assert_eq!(
        stored.context.text.chars().count(),
        prompt
            .chars()
            .take(30)
            .collect::<String>()
            .trim()
            .chars()
            .count()
    );
}
