//! Optimal-solution probability versus `K`, noise sweeps, and averaged
//! annealing traces.
//!
//! Runs are grouped in batches. With [`WeightResampling`] each batch keeps the
//! graph structure but draws fresh edge weights, so a table reflects a family
//! of random-weight instances rather than one lucky or unlucky draw. Every
//! batch gets its own exhaustive optimum, eigendecomposition and temperature.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_ks, intervals_overlap, mean, std_error, wilson_interval, Z95};
use crate::anneal::{anneal, count_optimal, Schedule, DEFAULT_ITERS, DEFAULT_RATE};
use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::ising::{brute_force_maxcut, IsingModel};
use crate::optics::{estimate_span, Backend, HrvEvaluator, NoiseModel, DEFAULT_SPAN_SAMPLES};
use crate::rng::derived_rng;
use crate::spectral::{eigendecompose, EigenBundle};

/// A cooling schedule whose initial temperature may be left to the instance:
/// `t0 = None` means the HRV span of the full-rank machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    #[serde(default)]
    pub t0: Option<f64>,
    pub rate: f64,
    #[serde(default = "default_iters")]
    pub iters: usize,
    #[serde(default = "default_floor")]
    pub flip_floor: usize,
}

fn default_iters() -> usize {
    DEFAULT_ITERS
}

fn default_floor() -> usize {
    1
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self { t0: None, rate: DEFAULT_RATE, iters: DEFAULT_ITERS, flip_floor: 1 }
    }
}

impl ScheduleSpec {
    pub fn with_rate(rate: f64) -> Self {
        Self { rate, ..Self::default() }
    }

    pub fn resolve(&self, span: f64) -> Result<Schedule> {
        Schedule::new(self.t0.unwrap_or(span), self.rate, self.iters, self.flip_floor)
    }
}

/// Fresh i.i.d. `U[low, high)` weights every `batch_runs` runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightResampling {
    pub batch_runs: usize,
    pub low: f64,
    pub high: f64,
}

/// One concrete problem: graph, its spectrum, optimum and full-rank HRV span.
#[derive(Debug, Clone)]
pub struct Instance {
    pub graph: WeightedGraph<f64>,
    pub bundle: EigenBundle<f64>,
    pub optimum: f64,
    pub span: f64,
    span_seed: u64,
    span_index: u64,
}

impl Instance {
    /// The span is estimated on the stream `(seed, "span", index)`.
    pub fn new(graph: WeightedGraph<f64>, seed: u64, index: u64) -> Result<Self> {
        let optimum = brute_force_maxcut(&graph)?.best_cut;
        let bundle = eigendecompose(&IsingModel::from_graph(&graph))?;
        let mut inst = Self { graph, bundle, optimum, span: 0.0, span_seed: seed, span_index: index };
        inst.span = inst.span_at(inst.graph.n())?;
        Ok(inst)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn evaluator(&self, k: usize) -> Result<HrvEvaluator<f64>> {
        HrvEvaluator::new(self.bundle.build_ensemble(k, 1.0)?, Backend::Analytic)
    }

    /// HRV span of the rank-`k` machine, on the instance's fixed span stream.
    pub fn span_at(&self, k: usize) -> Result<f64> {
        let ens = self.bundle.build_ensemble(k, 1.0)?;
        let mut rng = derived_rng(self.span_seed, "span", self.span_index);
        Ok(estimate_span(&ens, &Backend::Analytic, DEFAULT_SPAN_SAMPLES, &mut rng))
    }
}

struct Batch {
    first_run: usize,
    runs: usize,
    instance: Instance,
}

fn batches(g: &WeightedGraph<f64>, runs: usize, seed: u64, resampling: Option<WeightResampling>) -> Result<Vec<Batch>> {
    if runs == 0 {
        return Err(Error::invalid("need at least one run"));
    }
    let size = match resampling {
        None => runs,
        Some(w) => {
            if w.batch_runs == 0 {
                return Err(Error::invalid("batch_runs must be at least 1"));
            }
            if !(w.low < w.high) {
                return Err(Error::invalid(format!("weight range [{}, {}) is empty", w.low, w.high)));
            }
            w.batch_runs
        }
    };
    let count = runs.div_ceil(size);
    (0..count)
        .into_par_iter()
        .map(|b| {
            let graph = match resampling {
                None => g.clone(),
                Some(w) => {
                    let mut rng = derived_rng(seed, "weights", b as u64);
                    let ws: Vec<f64> = (0..g.edge_count()).map(|_| rng.random_range(w.low..w.high)).collect();
                    g.with_weights(&ws)?
                }
            };
            let first_run = b * size;
            Ok(Batch { first_run, runs: size.min(runs - first_run), instance: Instance::new(graph, seed, b as u64)? })
        })
        .collect()
}

fn with_full_k(ks: &[usize], n: usize) -> Vec<usize> {
    let mut out = ks.to_vec();
    if !out.contains(&n) {
        out.push(n);
    }
    out
}

/// Successes over all batches for one `(schedule, K, noise level)` cell.
/// Run `r` (counted across batches) uses anneal seed `seed + r`.
fn count_cell(batches: &[Batch], spec: &ScheduleSpec, k: usize, level: f64, seed: u64) -> Result<usize> {
    let mut hits = 0;
    for b in batches {
        let inst = &b.instance;
        let schedule = spec.resolve(inst.span)?;
        let mut ev = inst.evaluator(k)?;
        if level > 0.0 {
            ev = ev.with_noise(NoiseModel::from_span(level, inst.span_at(k)?, DEFAULT_SPAN_SAMPLES)?);
        }
        let est =
            count_optimal(&ev, &inst.graph, &schedule, b.runs, seed.wrapping_add(b.first_run as u64), inst.optimum)?;
        hits += est.successes;
    }
    Ok(hits)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityCell {
    pub schedule: usize,
    pub rate: f64,
    pub k: usize,
    pub successes: usize,
    pub runs: usize,
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Wilson interval overlaps the `K = N` cell of the same schedule.
    pub overlaps_full: bool,
}

impl ProbabilityCell {
    fn new(schedule: usize, rate: f64, k: usize, successes: usize, runs: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, runs, Z95);
        Self {
            schedule,
            rate,
            k,
            successes,
            runs,
            probability: successes as f64 / runs as f64,
            ci_low,
            ci_high,
            overlaps_full: false,
        }
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.ci_low, self.ci_high)
    }
}

/// Per-batch facts, echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub first_run: usize,
    pub runs: usize,
    pub optimum: f64,
    pub span: f64,
}

fn summaries(batches: &[Batch]) -> Vec<BatchSummary> {
    batches
        .iter()
        .map(|b| BatchSummary {
            first_run: b.first_run,
            runs: b.runs,
            optimum: b.instance.optimum,
            span: b.instance.span,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub n: usize,
    pub ks: Vec<usize>,
    pub schedules: Vec<ScheduleSpec>,
    pub runs: usize,
    pub seed: u64,
    pub resampling: Option<WeightResampling>,
    pub batches: Vec<BatchSummary>,
    /// Schedule-major, then in `ks` order.
    pub cells: Vec<ProbabilityCell>,
}

impl ProbabilityTable {
    pub fn cell(&self, schedule: usize, k: usize) -> Option<&ProbabilityCell> {
        self.cells.iter().find(|c| c.schedule == schedule && c.k == k)
    }
}

/// Optimal-solution probability for every `(schedule, K)`; the `K = N`
/// reference row is always included.
pub fn probability_vs_k(
    g: &WeightedGraph<f64>,
    ks: &[usize],
    schedules: &[ScheduleSpec],
    runs: usize,
    seed: u64,
    resampling: Option<WeightResampling>,
) -> Result<ProbabilityTable> {
    let n = g.n();
    check_ks(ks, n, false)?;
    if schedules.is_empty() {
        return Err(Error::invalid("no schedules given"));
    }
    let ks = with_full_k(ks, n);
    let batches = batches(g, runs, seed, resampling)?;

    let mut cells = Vec::with_capacity(schedules.len() * ks.len());
    for (si, spec) in schedules.iter().enumerate() {
        let row_start = cells.len();
        for &k in &ks {
            let hits = count_cell(&batches, spec, k, 0.0, seed)?;
            cells.push(ProbabilityCell::new(si, spec.rate, k, hits, runs));
        }
        let full = cells[row_start..].iter().find(|c| c.k == n).map(|c| c.interval());
        if let Some(full) = full {
            for c in &mut cells[row_start..] {
                c.overlaps_full = intervals_overlap(c.interval(), full);
            }
        }
    }

    Ok(ProbabilityTable {
        n,
        ks,
        schedules: schedules.to_vec(),
        runs,
        seed,
        resampling,
        batches: summaries(&batches),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseCell {
    pub level: f64,
    pub k: usize,
    pub successes: usize,
    pub runs: usize,
    pub probability: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Probability over the noiseless probability at the same `K`, if that
    /// is nonzero and level 0 is part of the sweep.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseTable {
    pub n: usize,
    pub ks: Vec<usize>,
    pub levels: Vec<f64>,
    pub schedule: ScheduleSpec,
    pub runs: usize,
    pub seed: u64,
    pub resampling: Option<WeightResampling>,
    pub batches: Vec<BatchSummary>,
    /// Level-major, then in `ks` order.
    pub cells: Vec<NoiseCell>,
}

impl NoiseTable {
    pub fn cell(&self, level: f64, k: usize) -> Option<&NoiseCell> {
        self.cells.iter().find(|c| c.level == level && c.k == k)
    }
}

/// Probability per `(level, K)` with Gaussian HRV noise of standard deviation
/// `level × span` of the rank-`K` machine. Level 0 reproduces
/// [`probability_vs_k`] exactly for the same arguments.
pub fn noise_sweep(
    g: &WeightedGraph<f64>,
    ks: &[usize],
    levels: &[f64],
    schedule: ScheduleSpec,
    runs: usize,
    seed: u64,
    resampling: Option<WeightResampling>,
) -> Result<NoiseTable> {
    let n = g.n();
    check_ks(ks, n, false)?;
    if levels.is_empty() {
        return Err(Error::invalid("no noise levels given"));
    }
    if let Some(l) = levels.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::invalid(format!("noise level {l} must be a finite value >= 0")));
    }
    let batches = batches(g, runs, seed, resampling)?;

    let mut cells = Vec::with_capacity(levels.len() * ks.len());
    for &level in levels {
        for &k in ks {
            let hits = count_cell(&batches, &schedule, k, level, seed)?;
            let (ci_low, ci_high) = wilson_interval(hits, runs, Z95);
            cells.push(NoiseCell {
                level,
                k,
                successes: hits,
                runs,
                probability: hits as f64 / runs as f64,
                ci_low,
                ci_high,
                ratio: None,
            });
        }
    }
    let baseline: Vec<Option<usize>> =
        ks.iter().map(|&k| cells.iter().find(|c| c.level == 0.0 && c.k == k).map(|c| c.successes)).collect();
    for c in &mut cells {
        let i = ks.iter().position(|&k| k == c.k).expect("k from ks");
        c.ratio = baseline[i].filter(|&b| b > 0).map(|b| c.successes as f64 / b as f64);
    }

    Ok(NoiseTable {
        n,
        ks: ks.to_vec(),
        levels: levels.to_vec(),
        schedule,
        runs,
        seed,
        resampling,
        batches: summaries(&batches),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KTrace {
    pub k: usize,
    pub mean_hrv: Vec<f64>,
    pub mean_cut: Vec<f64>,
    pub final_cut_mean: f64,
    pub final_cut_se: f64,
    pub final_hrv_mean: f64,
    pub final_hrv_se: f64,
    pub optimal_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStudy {
    pub n: usize,
    pub schedule: ScheduleSpec,
    pub t0: f64,
    pub optimum: f64,
    pub runs: usize,
    pub seed: u64,
    pub traces: Vec<KTrace>,
}

impl TraceStudy {
    pub fn trace(&self, k: usize) -> Option<&KTrace> {
        self.traces.iter().find(|t| t.k == k)
    }
}

/// Per-iteration HRV and cut averaged over `runs` chains (seeds `seed + r`)
/// for each `K`, on a fixed instance.
pub fn anneal_trace_study(
    g: &WeightedGraph<f64>,
    ks: &[usize],
    schedule: ScheduleSpec,
    runs: usize,
    seed: u64,
) -> Result<TraceStudy> {
    check_ks(ks, g.n(), false)?;
    if runs == 0 {
        return Err(Error::invalid("need at least one run"));
    }
    let inst = Instance::new(g.clone(), seed, 0)?;
    let s = schedule.resolve(inst.span)?;

    let traces = ks
        .iter()
        .map(|&k| {
            let ev = inst.evaluator(k)?;
            let chains = (0..runs as u64)
                .into_par_iter()
                .map(|r| anneal(&ev, g, &s, seed.wrapping_add(r)))
                .collect::<Result<Vec<_>>>()?;
            let mut mean_hrv = vec![0.0; s.iters];
            let mut mean_cut = vec![0.0; s.iters];
            for c in &chains {
                for (i, rec) in c.records.iter().enumerate() {
                    mean_hrv[i] += rec.hrv;
                    mean_cut[i] += rec.cut;
                }
            }
            for v in mean_hrv.iter_mut().chain(mean_cut.iter_mut()) {
                *v /= runs as f64;
            }
            let cuts: Vec<f64> = chains.iter().map(|c| c.final_cut).collect();
            let hrvs: Vec<f64> = chains.iter().map(|c| c.final_hrv).collect();
            Ok(KTrace {
                k,
                mean_hrv,
                mean_cut,
                final_cut_mean: mean(&cuts),
                final_cut_se: std_error(&cuts),
                final_hrv_mean: mean(&hrvs),
                final_hrv_se: std_error(&hrvs),
                optimal_runs: cuts.iter().filter(|&&c| (c - inst.optimum).abs() <= 1e-9).count(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TraceStudy { n: g.n(), schedule, t0: s.t0, optimum: inst.optimum, runs, seed, traces })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> WeightedGraph<f64> {
        WeightedGraph::gen_regular(8, 3, 0.0, 1.0, 5).unwrap()
    }

    fn quick() -> ScheduleSpec {
        ScheduleSpec { iters: 400, ..ScheduleSpec::with_rate(0.99) }
    }

    #[test]
    fn full_k_row_is_added() {
        let t = probability_vs_k(&small(), &[2], &[quick()], 20, 1, None).unwrap();
        assert_eq!(t.ks, vec![2, 8]);
        assert_eq!(t.cells.len(), 2);
        let full = t.cell(0, 8).unwrap();
        assert!(full.overlaps_full);
        assert!(full.ci_low <= full.probability && full.probability <= full.ci_high);
    }

    #[test]
    fn fixed_instance_matches_direct_count() {
        let g = small();
        let t = probability_vs_k(&g, &[8], &[quick()], 30, 7, None).unwrap();
        let inst = Instance::new(g.clone(), 7, 0).unwrap();
        let s = quick().resolve(inst.span).unwrap();
        let direct = count_optimal(&inst.evaluator(8).unwrap(), &g, &s, 30, 7, inst.optimum).unwrap();
        assert_eq!(t.cell(0, 8).unwrap().successes, direct.successes);
    }

    #[test]
    fn resampling_changes_weights_per_batch() {
        let w = WeightResampling { batch_runs: 4, low: 0.0, high: 1.0 };
        let t = probability_vs_k(&small(), &[8], &[quick()], 10, 3, Some(w)).unwrap();
        assert_eq!(t.batches.len(), 3);
        assert_eq!(t.batches.iter().map(|b| b.runs).collect::<Vec<_>>(), vec![4, 4, 2]);
        assert_ne!(t.batches[0].optimum, t.batches[1].optimum);
    }

    #[test]
    fn noiseless_level_reproduces_probability_table() {
        let g = small();
        let w = Some(WeightResampling { batch_runs: 5, low: 0.0, high: 1.0 });
        let p = probability_vs_k(&g, &[3, 8], &[quick()], 15, 2, w).unwrap();
        let z = noise_sweep(&g, &[3, 8], &[0.0, 0.05], quick(), 15, 2, w).unwrap();
        for k in [3, 8] {
            assert_eq!(z.cell(0.0, k).unwrap().successes, p.cell(0, k).unwrap().successes);
        }
        assert_eq!(z.cells.len(), 4);
    }

    #[test]
    fn negative_noise_level_rejected() {
        assert!(noise_sweep(&small(), &[8], &[-0.1], quick(), 5, 0, None).is_err());
    }

    #[test]
    fn single_run_trace_is_the_chain() {
        let g = small();
        let study = anneal_trace_study(&g, &[8], quick(), 1, 13).unwrap();
        let inst = Instance::new(g.clone(), 13, 0).unwrap();
        let s = quick().resolve(inst.span).unwrap();
        let chain = anneal(&inst.evaluator(8).unwrap(), &g, &s, 13).unwrap();
        let t = &study.traces[0];
        assert_eq!(t.mean_cut, chain.records.iter().map(|r| r.cut).collect::<Vec<_>>());
        assert_eq!(t.mean_hrv, chain.records.iter().map(|r| r.hrv).collect::<Vec<_>>());
        assert_eq!(t.final_cut_mean, chain.final_cut);
        assert_eq!(t.final_cut_se, 0.0);
    }

    #[test]
    fn schedule_spec_defaults() {
        let s: ScheduleSpec = serde_json::from_str(r#"{"rate":0.99}"#).unwrap();
        assert_eq!(s, ScheduleSpec::with_rate(0.99));
        assert_eq!(s.resolve(4.0).unwrap().t0, 4.0);
        let fixed = ScheduleSpec { t0: Some(1.5), ..s };
        assert_eq!(fixed.resolve(4.0).unwrap().t0, 1.5);
    }
}
