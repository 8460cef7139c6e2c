use msr_core::dataset::generate;
use msr_core::ingest::ExtractionMode;
use msr_core::{run, Error, Execution, GeneratorConfig, Modality, PerModality, RunConfig, RunOptions};

fn data(n: usize, p: Option<f64>) -> msr_core::Dataset {
    let mut cfg = GeneratorConfig { n_per_modality: n, ..GeneratorConfig::default() };
    if let Some(p) = p {
        cfg.label_noise = PerModality { visual: p, auditory: p, tactile: p };
    }
    generate(&cfg, Execution::Parallel).unwrap()
}

fn outputs(cfg: &RunConfig, d: &msr_core::Dataset, exec: Execution) -> (String, Vec<String>) {
    let out = run(cfg, d, &RunOptions { exec, ..RunOptions::new(42) }).unwrap();
    (out.trace(), out.reports().unwrap().iter().map(|r| r.to_csv()).collect())
}

#[test]
fn identical_across_strategies_and_worker_counts() {
    let d = data(1500, None);
    let base = outputs(&RunConfig::default(), &d, Execution::Sequential);
    for workers in [1, 2, 4] {
        let cfg = RunConfig { workers: Some(workers), ..RunConfig::default() };
        assert_eq!(outputs(&cfg, &d, Execution::Parallel), base, "workers {workers}");
    }
    let other = run(&RunConfig::default(), &d, &RunOptions::new(43)).unwrap();
    assert_ne!(other.trace(), base.0);
}

#[test]
fn one_command_per_surviving_record() {
    let d = data(800, None);
    let cfg = RunConfig::default();
    let out = run(&cfg, &d, &RunOptions::new(1)).unwrap();
    for r in &out.runs {
        let survivors: Vec<u64> = d.records_for(r.modality).filter(|x| x.trust > cfg.tau).map(|x| x.id).collect();
        let commands: Vec<u64> = r.commands.iter().map(|c| c.record).collect();
        assert_eq!(commands, survivors);
        assert_eq!(r.trace.lines().count(), 2 * survivors.len());
        assert!(r.commands.iter().all(|c| c.action < 4 && (0.0..=1.0).contains(&c.confidence)));
        assert_eq!(r.confusions[0].total() as usize, d.records_for(r.modality).count());
        assert!(r.confusions[1..].iter().all(|c| c.total() as usize == survivors.len()));
    }
    let first: serde_json::Value = serde_json::from_str(out.trace().lines().next().unwrap()).unwrap();
    assert_eq!(first["type"], "action");
    assert_eq!(first["modality"], "visual");
    assert!(first["semantic_features"].as_array().unwrap().len() == 8);
}

#[test]
fn noiseless_data_scores_perfectly() {
    let d = data(1000, Some(0.0));
    let out = run(&RunConfig::default(), &d, &RunOptions::new(42)).unwrap();
    for r in out.reports().unwrap() {
        for (i, m) in r.steps.iter().enumerate() {
            for v in m.as_array() {
                assert_eq!(v, Some(1.0), "{} step {}", r.modality, i + 1);
            }
        }
    }
}

#[test]
fn modality_filter_runs_only_that_modality() {
    let d = data(300, None);
    let opts = RunOptions { modalities: vec![Modality::Tactile], ..RunOptions::new(42) };
    let out = run(&RunConfig::default(), &d, &opts).unwrap();
    assert_eq!(out.runs.len(), 1);
    assert_eq!(out.runs[0].modality, Modality::Tactile);
    assert!(!out.trace().contains("\"visual\""));
}

#[test]
fn writes_all_report_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = data(200, None);
    let out = run(&RunConfig::default(), &d, &RunOptions::new(42)).unwrap();
    let files = out.write(dir.path()).unwrap();
    let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names, ["trace.jsonl", "report_visual.csv", "report_auditory.csv", "report_tactile.csv", "report.md"]);
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    for title in ["Visual", "Auditory", "Tactile"] {
        assert!(md.contains(&format!("## {title} performance metrics")));
    }
}

#[test]
fn dimension_errors_surface_as_config_errors() {
    let d = data(50, None);
    let narrow = RunConfig { extraction: ExtractionMode::Summary { window: 8 }, ..RunConfig::default() };
    assert!(matches!(run(&narrow, &d, &RunOptions::new(1)), Err(Error::Config { .. })));
    let wide = RunConfig { extraction: ExtractionMode::Summary { window: 4 }, ..RunConfig::default() };
    run(&wide, &d, &RunOptions::new(1)).unwrap();
    let bad_channel = RunConfig { internal_state: vec![0.0; 3], ..RunConfig::default() };
    match run(&bad_channel, &d, &RunOptions::new(1)) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "internal_state"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn everything_filtered_is_an_error() {
    let d = data(50, None);
    let cfg = RunConfig { tau: 1.0, ..RunConfig::default() };
    assert!(matches!(run(&cfg, &d, &RunOptions::new(1)), Err(Error::InvalidInput(_))));
}
