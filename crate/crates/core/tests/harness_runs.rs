use cyclic_condensation::harness::{read_records, run_grid, run_threshold_sweep, summarize, GridConfig, Summary, SweepConfig};
use cyclic_condensation::io::read_json;
use cyclic_condensation::Regime;

fn small_grid() -> GridConfig {
    GridConfig {
        d: 5,
        kappas: vec![2],
        lambdas: vec![0.5],
        regimes: vec![Regime::Stable, Regime::Unstable],
        sample_sizes: vec![500, 2000],
        seeds: vec![0, 1, 2],
        ..GridConfig::default()
    }
}

#[test]
fn rerun_leaves_results_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = (dir.path().join("r.csv"), dir.path().join("r.summary.json"));
    let first = run_grid(&small_grid(), &csv, &json).unwrap();
    assert_eq!(first.records.len(), 12);
    let bytes = std::fs::read(&csv).unwrap();
    let second = run_grid(&small_grid(), &csv, &json).unwrap();
    assert_eq!(std::fs::read(&csv).unwrap(), bytes);
    assert_eq!(first, second);
}

#[test]
fn fresh_runs_agree_except_timing() {
    let dir = tempfile::tempdir().unwrap();
    let a = run_grid(&small_grid(), &dir.path().join("a.csv"), &dir.path().join("a.json")).unwrap();
    let b = run_grid(&small_grid(), &dir.path().join("b.csv"), &dir.path().join("b.json")).unwrap();
    let strip = |rs: &[cyclic_condensation::harness::ExperimentRecord]| {
        rs.iter()
            .cloned()
            .map(|mut r| {
                r.fit_ms = None;
                r
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a.records), strip(&b.records));
}

#[test]
fn interrupted_run_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = (dir.path().join("r.csv"), dir.path().join("r.summary.json"));
    let full = run_grid(&small_grid(), &csv, &json).unwrap();
    // keep the header and four rows, then append a torn line
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut partial: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
    partial += "5,2,0.5,stab";
    std::fs::write(&csv, partial).unwrap();
    let resumed = run_grid(&small_grid(), &csv, &json).unwrap();
    assert_eq!(resumed.records.len(), full.records.len());
    for (x, y) in resumed.records.iter().zip(&full.records) {
        assert_eq!(x.key(), y.key());
        assert_eq!(x.ari, y.ari);
    }
}

#[test]
fn summary_file_matches_records() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = (dir.path().join("s.csv"), dir.path().join("s.summary.json"));
    let cfg = SweepConfig {
        d: 6,
        kappa: 2,
        taus: vec![0.05, 0.5],
        sample_sizes: vec![1000],
        seeds: vec![0, 1, 2, 3],
        ..SweepConfig::default()
    };
    let out = run_threshold_sweep(&cfg, &csv, &json).unwrap();
    assert_eq!(out.records.len(), 8);
    let written: Summary = read_json(&json).unwrap();
    assert_eq!(written, summarize(&read_records(&csv).unwrap()));
    assert_eq!(written, out.summary);
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = GridConfig {
        sample_sizes: vec![1000, 500],
        ..small_grid()
    };
    assert!(run_grid(&cfg, &dir.path().join("x.csv"), &dir.path().join("x.json")).is_err());
}
