//! Every file the tool writes, with a reader for each so outputs round-trip.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

/// One row of `stats.csv`: a chain, or the `mean` / `stdev` over chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub prior: String,
    pub sampler: String,
    pub chain: String,
    pub accepted_pct: f64,
    pub updated_pct: f64,
}

/// One row of a nonzero-count histogram: target probability, mean and
/// standard deviation over chains, then each chain's frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramRow {
    pub n: usize,
    pub target: f64,
    pub mean: f64,
    pub stdev: f64,
    pub chains: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub chain: usize,
    pub t: usize,
    /// `(bin, amount)` for each nonzero bin.
    pub x: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub sampler: String,
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Amount {
    pub ingredient: String,
    pub amount: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighbor {
    pub name: String,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedLine {
    pub sample: usize,
    pub composition: Vec<Amount>,
    pub taste_score: f64,
    pub timing_score: f64,
    pub joint_score: f64,
    pub nearest: Vec<Neighbor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreBinRow {
    pub lo: f64,
    pub hi: f64,
    pub mcmc: f64,
    pub baseline_mean: f64,
    pub baseline_std: f64,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, &item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(k, line)| serde_json::from_str(&line?).with_context(|| format!("{} line {}", path.display(), k + 1)))
        .collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_histogram(path: &Path, rows: &[HistogramRow]) -> Result<()> {
    let chains = rows.first().map_or(0, |r| r.chains.len());
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["n".to_string(), "target".into(), "mean".into(), "stdev".into()];
    header.extend((0..chains).map(|c| format!("chain_{c}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.n.to_string(), r.target.to_string(), r.mean.to_string(), r.stdev.to_string()];
        rec.extend(r.chains.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_histogram(path: &Path) -> Result<Vec<HistogramRow>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.clone();
    if header.len() < 4 || &header[0] != "n" || &header[3] != "stdev" {
        bail!("{}: not a histogram file", path.display());
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> { Ok(rec[k].parse()?) };
        rows.push(HistogramRow {
            n: rec[0].parse()?,
            target: num(1)?,
            mean: num(2)?,
            stdev: num(3)?,
            chains: (4..rec.len()).map(num).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}

pub fn stats_file(dir: &Path) -> std::path::PathBuf {
    dir.join("stats.csv")
}

pub fn histogram_file(dir: &Path, prior_slug: &str, sampler: &str) -> std::path::PathBuf {
    dir.join(format!("hist_{prior_slug}_{sampler}.csv"))
}

pub fn trace_file(dir: &Path, prior_slug: &str, sampler: &str) -> std::path::PathBuf {
    dir.join(format!("trace_{prior_slug}_{sampler}.jsonl"))
}
