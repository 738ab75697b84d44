//! Report files: one CSV row per cell, a JSON summary echoing the config, and
//! whitespace-separated two-column `.dat` files for plotting.
//!
//! Output is byte-deterministic: no timestamps, sorted JSON keys, and
//! shortest round-trip float formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{MatchReport, NoiseTable, ProbabilityTable, SweepReport, TraceStudy};
use crate::error::Result;

/// What produced a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub study: String,
    pub seed: u64,
    pub config: Value,
}

impl Provenance {
    pub fn new(study: &str, seed: u64, config: Value) -> Self {
        Self { study: study.to_string(), seed, config }
    }
}

/// Hex SHA-256 of the canonical (key-sorted, compact) JSON of `config`,
/// hashed as a git blob: `"blob <len>\0<json>"`.
pub fn config_hash(config: &Value) -> String {
    let body = serde_json::to_string(config).expect("JSON values always serialize");
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", body.len()).as_bytes());
    h.update(body.as_bytes());
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_summary(dir: &Path, prov: &Provenance, results: Value) -> Result<PathBuf> {
    let doc = json!({
        "study": prov.study,
        "seed": prov.seed,
        "config_hash": config_hash(&prov.config),
        "config": prov.config,
        "results": results,
    });
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}

fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<PathBuf> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path.to_path_buf())
}

fn write_dat(path: &Path, header: &str, rows: impl IntoIterator<Item = (f64, f64)>) -> Result<PathBuf> {
    let mut text = format!("# {header}\n");
    for (x, y) in rows {
        let _ = writeln!(text, "{x} {y}");
    }
    fs::write(path, text)?;
    Ok(path.to_path_buf())
}

fn tag(v: f64) -> String {
    v.to_string()
}

#[derive(Serialize)]
struct MatchRow {
    k: usize,
    rmse: f64,
    rmse_relative: f64,
    slope: f64,
    intercept: f64,
    r2: f64,
}

pub fn write_match(dir: &Path, rep: &MatchReport, prov: &Provenance) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![write_csv(
        &dir.join("rmse.csv"),
        rep.records.iter().map(|r| MatchRow {
            k: r.k,
            rmse: r.rmse,
            rmse_relative: r.rmse_relative,
            slope: r.fit.slope,
            intercept: r.fit.intercept,
            r2: r.fit.r2,
        }),
    )?];
    files.push(write_dat(&dir.join("rmse.dat"), "K rmse", rep.records.iter().map(|r| (r.k as f64, r.rmse)))?);
    for r in &rep.records {
        files.push(write_dat(
            &dir.join(format!("scatter_k{}.dat", r.k)),
            "hrv hamiltonian",
            r.scatter.iter().copied(),
        )?);
    }
    let mut results = serde_json::to_value(rep)?;
    if let Some(records) = results.get_mut("records").and_then(Value::as_array_mut) {
        for r in records {
            if let Some(o) = r.as_object_mut() {
                o.remove("scatter");
            }
        }
    }
    files.push(write_summary(dir, prov, results)?);
    Ok(files)
}

#[derive(Serialize)]
struct SweepRow {
    n: usize,
    k: usize,
    k_over_n: f64,
    mean_rmse: f64,
    se_rmse: f64,
    mean_rmse_relative: f64,
    se_rmse_relative: f64,
}

/// One CSV and one `.dat` per graph size; all sizes share a summary.
pub fn write_sweeps(dir: &Path, sweeps: &[SweepReport], prov: &Provenance) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let rows = sweeps.iter().flat_map(|s| {
        s.points.iter().map(move |p| SweepRow {
            n: s.graph.n(),
            k: p.k,
            k_over_n: p.k_over_n,
            mean_rmse: p.mean_rmse,
            se_rmse: p.se_rmse,
            mean_rmse_relative: p.mean_rmse_relative,
            se_rmse_relative: p.se_rmse_relative,
        })
    });
    let mut files = vec![write_csv(&dir.join("rmse_sweep.csv"), rows)?];
    for s in sweeps {
        files.push(write_dat(
            &dir.join(format!("rmse_n{}.dat", s.graph.n())),
            "K/N mean_rmse",
            s.points.iter().map(|p| (p.k_over_n, p.mean_rmse)),
        )?);
    }
    files.push(write_summary(dir, prov, serde_json::to_value(sweeps)?)?);
    Ok(files)
}

pub fn write_probability(dir: &Path, t: &ProbabilityTable, prov: &Provenance) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![write_csv(&dir.join("probability.csv"), &t.cells)?];
    for (si, spec) in t.schedules.iter().enumerate() {
        files.push(write_dat(
            &dir.join(format!("probability_s{si}_rate{}.dat", tag(spec.rate))),
            "K probability",
            t.cells.iter().filter(|c| c.schedule == si).map(|c| (c.k as f64, c.probability)),
        )?);
    }
    files.push(write_summary(dir, prov, serde_json::to_value(t)?)?);
    Ok(files)
}

pub fn write_noise(dir: &Path, t: &NoiseTable, prov: &Provenance) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![write_csv(&dir.join("noise.csv"), &t.cells)?];
    for &level in &t.levels {
        files.push(write_dat(
            &dir.join(format!("noise_level{}.dat", tag(level))),
            "K probability",
            t.cells.iter().filter(|c| c.level == level).map(|c| (c.k as f64, c.probability)),
        )?);
    }
    files.push(write_summary(dir, prov, serde_json::to_value(t)?)?);
    Ok(files)
}

#[derive(Serialize)]
struct TraceRow {
    k: usize,
    iter: usize,
    mean_hrv: f64,
    mean_cut: f64,
}

#[derive(Serialize)]
struct FinalRow {
    k: usize,
    final_cut_mean: f64,
    final_cut_se: f64,
    final_hrv_mean: f64,
    final_hrv_se: f64,
    optimal_runs: usize,
}

pub fn write_trace(dir: &Path, t: &TraceStudy, prov: &Provenance) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let rows = t.traces.iter().flat_map(|tr| {
        tr.mean_hrv.iter().zip(&tr.mean_cut).enumerate().map(move |(i, (&h, &c))| TraceRow {
            k: tr.k,
            iter: i,
            mean_hrv: h,
            mean_cut: c,
        })
    });
    let mut files = vec![write_csv(&dir.join("trace.csv"), rows)?];
    files.push(write_csv(
        &dir.join("final.csv"),
        t.traces.iter().map(|tr| FinalRow {
            k: tr.k,
            final_cut_mean: tr.final_cut_mean,
            final_cut_se: tr.final_cut_se,
            final_hrv_mean: tr.final_hrv_mean,
            final_hrv_se: tr.final_hrv_se,
            optimal_runs: tr.optimal_runs,
        }),
    )?);
    for tr in &t.traces {
        files.push(write_dat(
            &dir.join(format!("trace_cut_k{}.dat", tr.k)),
            "iter mean_cut",
            tr.mean_cut.iter().enumerate().map(|(i, &c)| (i as f64, c)),
        )?);
        files.push(write_dat(
            &dir.join(format!("trace_hrv_k{}.dat", tr.k)),
            "iter mean_hrv",
            tr.mean_hrv.iter().enumerate().map(|(i, &h)| (i as f64, h)),
        )?);
    }
    files.push(write_dat(
        &dir.join("final_cut.dat"),
        "K final_cut_mean",
        t.traces.iter().map(|tr| (tr.k as f64, tr.final_cut_mean)),
    )?);
    // the per-iteration series live in the CSV; keep the summary small
    let mut results = serde_json::to_value(t)?;
    if let Some(traces) = results.get_mut("traces").and_then(Value::as_array_mut) {
        for tr in traces {
            if let Some(o) = tr.as_object_mut() {
                o.remove("mean_hrv");
                o.remove("mean_cut");
            }
        }
    }
    files.push(write_summary(dir, prov, results)?);
    Ok(files)
}
