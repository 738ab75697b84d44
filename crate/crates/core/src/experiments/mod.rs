//! Studies of how truncation and noise affect the machine: HRV/Hamiltonian
//! matching and RMSE decay, annealing traces, optimal-solution probability
//! versus `K`, and noise sweeps.
//!
//! Everything here runs in `f64` and is a pure function of its inputs and
//! seed. Work is split into cells that each own a derived RNG stream, and
//! results are assembled by cell index, so output never depends on thread
//! scheduling.

mod matching;
mod probability;
pub mod report;

pub use matching::{
    fit_exponential, linear_fit, rmse_sweep, rmse_vs_k, ExpFit, KMatch, LinearFit, MatchReport, SweepPoint, SweepReport,
};
pub use probability::{
    anneal_trace_study, noise_sweep, probability_vs_k, BatchSummary, Instance, KTrace, NoiseCell, NoiseTable,
    ProbabilityCell, ProbabilityTable, ScheduleSpec, TraceStudy, WeightResampling,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `n` trials.
pub fn wilson_interval(successes: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn intervals_overlap(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 <= b.1 && b.0 <= a.1
}

/// How to generate study graphs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphSpec {
    Regular { n: usize, degree: usize },
    Density { n: usize, density: f64 },
}

impl GraphSpec {
    pub fn n(&self) -> usize {
        match *self {
            GraphSpec::Regular { n, .. } | GraphSpec::Density { n, .. } => n,
        }
    }

    pub fn generate(&self, low: f64, high: f64, seed: u64) -> Result<WeightedGraph<f64>> {
        match *self {
            GraphSpec::Regular { n, degree } => WeightedGraph::gen_regular(n, degree, low, high, seed),
            GraphSpec::Density { n, density } => WeightedGraph::gen_density(n, density, low, high, seed),
        }
    }
}

pub(crate) fn check_ks(ks: &[usize], n: usize, allow_zero: bool) -> Result<()> {
    if ks.is_empty() {
        return Err(Error::invalid("no K values given"));
    }
    for &k in ks {
        if k > n || (k == 0 && !allow_zero) {
            return Err(Error::invalid(format!("K = {k} outside 1..={n}")));
        }
    }
    Ok(())
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Sample standard error of the mean.
pub(crate) fn std_error(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
    (var / v.len() as f64).sqrt()
}
