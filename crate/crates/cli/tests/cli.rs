use std::path::Path;
use std::process::{Command, Output};

use compmc_cli::artifacts::{
    histogram_file, read_csv, read_histogram, read_json, read_jsonl, stats_file, trace_file, write_histogram, GeneratedLine,
    HistogramRow, OracleRow, ScoreBinRow, StatsRow, TraceLine,
};
use compmc_cli::commands::{DemoReport, SampleManifest};

fn compmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_compmc")).args(args).output().expect("binary runs")
}

fn out_arg(dir: &Path) -> String {
    dir.to_str().unwrap().to_string()
}

#[test]
fn sample_writes_consistent_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = compmc(&[
        "sample", "--bins", "10", "--total", "5", "--prior", "uniform{2,5}", "--sampler", "accelerated", "--sampler",
        "gibbs", "--iters", "5000", "--burn-in", "500", "--chains", "3", "--seed", "4", "--trace", "--out", &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("accelerated") && stdout.contains("gibbs"));

    let stats: Vec<StatsRow> = read_csv(&stats_file(dir.path())).unwrap();
    // three chains plus mean and stdev, for each sampler
    assert_eq!(stats.len(), 2 * 5);
    let gibbs_mean = stats.iter().find(|r| r.sampler == "gibbs" && r.chain == "mean").unwrap();
    assert_eq!(gibbs_mean.accepted_pct, 100.0);

    let manifest: SampleManifest = read_json(&dir.path().join("run.json")).unwrap();
    assert_eq!((manifest.bins, manifest.total, manifest.chains, manifest.iterations), (10, 5, 3, 5000));
    let slug = "uniform_2_5";
    let hist = read_histogram(&histogram_file(dir.path(), slug, "accelerated"))
        .unwrap_or_else(|e| panic!("{e:#}; files: {:?}", std::fs::read_dir(dir.path()).unwrap().collect::<Vec<_>>()));
    assert_eq!(hist.len(), 5);
    assert!(hist.iter().all(|r| r.chains.len() == 3));
    assert!((hist.iter().map(|r| r.target).sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(hist[0].target, 0.0);

    let trace: Vec<TraceLine> = read_jsonl(&trace_file(dir.path(), slug, "accelerated")).unwrap();
    assert_eq!(trace.len(), 3 * 5000);
    for line in &trace {
        assert_eq!(line.x.iter().map(|&(_, v)| v).sum::<u32>(), 5);
        assert!((2..=5).contains(&line.x.len()));
    }
}

#[test]
fn histogram_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.csv");
    let rows = vec![
        HistogramRow { n: 1, target: 0.25, mean: 0.2, stdev: 0.01, chains: vec![0.19, 0.21] },
        HistogramRow { n: 2, target: 0.75, mean: 0.8, stdev: 0.01, chains: vec![0.81, 0.79] },
    ];
    write_histogram(&path, &rows).unwrap();
    assert_eq!(read_histogram(&path).unwrap(), rows);
}

#[test]
fn oracle_check_passes_on_small_space() {
    let dir = tempfile::tempdir().unwrap();
    let out = out_arg(dir.path());
    let o = compmc(&["oracle-check", "--bins", "3", "--total", "3", "--iters", "100000", "--seed", "1", "--out", &out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let rows: Vec<OracleRow> = read_csv(&dir.path().join("oracle.csv")).unwrap();
    assert_eq!(rows.len(), 3 * 5);
    assert!(rows.iter().all(|r| r.passed));
}

#[test]
fn corrupted_acceptance_is_caught() {
    let o = compmc(&["oracle-check", "--bins", "3", "--total", "3", "--sampler", "accelerated", "--iters", "1000", "--corrupt-acceptance", "1.1"]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.starts_with("FAIL") && l.contains("detailed-balance")), "{stdout}");
}

#[test]
fn oracle_check_refuses_huge_spaces() {
    let o = compmc(&["oracle-check", "--bins", "2000", "--total", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8(o.stderr).unwrap().starts_with("error:"));
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(!compmc(&["sample", "--bins", "10", "--total", "5", "--prior", "triangle{1}", "--iters", "10", "--out", "x"]).status.success());
    assert!(!compmc(&["sample", "--bins", "10", "--total", "5", "--prior", "uniform{2,5}", "--sampler", "hmc", "--iters", "10", "--out", "x"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let o = compmc(&["sample", "--bins", "3", "--total", "2", "--prior", "uniform{1,9}", "--iters", "10", "--out", &out_arg(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn synth_data_feeds_the_demo() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = compmc(&["synth-data", "--seed", "3", "--out", &out_arg(&data)]);
    assert!(o.status.success());

    let demo = dir.path().join("demo");
    let o = compmc(&[
        "demo", "--data", &out_arg(&data.join("recipes.csv")), "--units", &out_arg(&data.join("units.txt")), "--taste",
        "Boozy", "--timing", "All day", "--trees", "15", "--depth", "5", "--iters", "3000", "--burn-in", "300",
        "--baseline-repeats", "2", "--seed", "3", "--out", &out_arg(&demo),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let generated: Vec<GeneratedLine> = read_jsonl(&demo.join("generated.jsonl")).unwrap();
    assert_eq!(generated.len(), 3000);
    for g in &generated {
        assert_eq!(g.composition.iter().map(|a| a.amount).sum::<u32>(), 1000);
        assert!((g.joint_score - g.taste_score * g.timing_score).abs() < 1e-12);
        assert!(g.nearest.len() <= 3);
    }
    let bins: Vec<ScoreBinRow> = read_csv(&demo.join("score_histogram.csv")).unwrap();
    assert_eq!(bins.len(), 10);
    assert!((bins.iter().map(|b| b.mcmc).sum::<f64>() - 1.0).abs() < 1e-9);
    let report: DemoReport = read_json(&demo.join("summary.json")).unwrap();
    assert_eq!(report.summary.samples, 3000);
    assert!(std::fs::read_to_string(demo.join("top10.txt")).unwrap().contains("joint"));

    let o = compmc(&["demo", "--data", &out_arg(&data.join("recipes.csv")), "--taste", "Umami", "--iters", "10", "--out", &out_arg(&demo)]);
    assert_eq!(o.status.code(), Some(2));
}
