//! Simulated annealing on spin states with the HRV as the objective.
//!
//! Energy is `-HRV`. Each iteration flips a temperature-dependent number of
//! distinct spins, `max(flip_floor, round(n T / t0))`, so moves shrink to
//! single flips as the chain cools.

use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::ising::{brute_force_maxcut, cut_value, IsingModel, SpinState};
use crate::optics::HrvEvaluator;
use crate::rng::{derived_rng, rng_from_seed};
use crate::scalar::Real;

/// Default iteration count.
pub const DEFAULT_ITERS: usize = 3000;
/// Cooling rate used for the noise studies.
pub const DEFAULT_RATE: f64 = 0.995;
/// Absolute tolerance when comparing a final cut with the optimum.
pub const OPTIMUM_TOL: f64 = 1e-9;

/// Anything that can score a spin state the way the machine does.
pub trait HrvSource<T: Real>: Sync {
    fn n(&self) -> usize;
    fn hrv<R: Rng + ?Sized>(&self, x: &SpinState, rng: &mut R) -> T;
}

impl<T: Real> HrvSource<T> for HrvEvaluator<T> {
    fn n(&self) -> usize {
        HrvEvaluator::n(self)
    }

    fn hrv<R: Rng + ?Sized>(&self, x: &SpinState, rng: &mut R) -> T {
        HrvEvaluator::hrv(self, x, rng)
    }
}

/// The exact objective `xᵀJx`, i.e. an ideal machine.
impl<T: Real> HrvSource<T> for IsingModel<T> {
    fn n(&self) -> usize {
        IsingModel::n(self)
    }

    fn hrv<R: Rng + ?Sized>(&self, x: &SpinState, _rng: &mut R) -> T {
        self.quadratic_form(x)
    }
}

/// Geometric cooling schedule `T_k = t0 · rate^k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub t0: f64,
    pub rate: f64,
    pub iters: usize,
    pub flip_floor: usize,
}

impl Schedule {
    pub fn new(t0: f64, rate: f64, iters: usize, flip_floor: usize) -> Result<Self> {
        let s = Self { t0, rate, iters, flip_floor };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(Error::invalid(format!("initial temperature {} must be positive", self.t0)));
        }
        if !(self.rate > 0.0 && self.rate < 1.0) {
            return Err(Error::invalid(format!("cooling rate {} outside (0, 1)", self.rate)));
        }
        if self.flip_floor == 0 {
            return Err(Error::invalid("flip floor must be at least 1"));
        }
        Ok(())
    }

    pub fn temperature(&self, k: usize) -> f64 {
        self.t0 * self.rate.powi(k as i32)
    }

    /// Spins flipped at iteration `k` on an `n`-spin problem.
    pub fn flips(&self, k: usize, n: usize) -> usize {
        let scaled = (n as f64 * self.temperature(k) / self.t0).round() as usize;
        scaled.max(self.flip_floor).min(n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord<T> {
    pub iter: usize,
    pub temperature: f64,
    pub flips: usize,
    /// HRV of the current state after the accept/reject decision.
    pub hrv: T,
    /// True cut value of the current state.
    pub cut: T,
    pub accepted: bool,
    /// `E_candidate - E_current`.
    pub delta_e: T,
    /// Uniform draw for an uphill move, if one was made.
    pub draw: Option<f64>,
    /// Spins flipped by the proposal.
    pub flipped: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnealTrace<T> {
    pub initial_state: SpinState,
    pub records: Vec<IterRecord<T>>,
    pub final_state: SpinState,
    pub final_hrv: T,
    pub final_cut: T,
}

impl<T: Real> AnnealTrace<T> {
    /// CSV with columns `iter,temperature,flips,hrv,cut,accepted`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["iter", "temperature", "flips", "hrv", "cut", "accepted"])?;
        for r in &self.records {
            w.write_record([
                r.iter.to_string(),
                r.temperature.to_string(),
                r.flips.to_string(),
                r.hrv.to_string(),
                r.cut.to_string(),
                (r.accepted as u8).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Replays the accepted moves from the initial state.
    pub fn replay(&self) -> SpinState {
        let mut x = self.initial_state.clone();
        for r in self.records.iter().filter(|r| r.accepted) {
            for &i in &r.flipped {
                x.flip(i);
            }
        }
        x
    }
}

/// Runs one annealing chain. Moves come from a stream seeded with `seed`;
/// HRV noise uses a separate stream derived from it, so noise never perturbs
/// the proposal sequence.
pub fn anneal<T: Real, S: HrvSource<T>>(
    source: &S,
    g: &WeightedGraph<T>,
    s: &Schedule,
    seed: u64,
) -> Result<AnnealTrace<T>> {
    let n = source.n();
    if n != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), found: n });
    }
    s.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut noise_rng = derived_rng(seed, "hrv-noise", 0);

    let initial_state = SpinState::random(n, &mut rng);
    let mut x = initial_state.clone();
    let mut hrv = source.hrv(&x, &mut noise_rng);
    let mut cut = cut_value(g, &x)?;
    let mut records = Vec::with_capacity(s.iters);

    for k in 0..s.iters {
        let temperature = s.temperature(k);
        let flips = s.flips(k, n);
        let flipped = index::sample(&mut rng, n, flips).into_vec();
        let mut cand = x.clone();
        for &i in &flipped {
            cand.flip(i);
        }
        let cand_hrv = source.hrv(&cand, &mut noise_rng);
        let delta_e = hrv - cand_hrv;
        let (accepted, draw) = if delta_e <= T::zero() {
            (true, None)
        } else {
            let u: f64 = rng.random();
            (u < (-delta_e.as_f64() / temperature).exp(), Some(u))
        };
        if accepted {
            x = cand;
            hrv = cand_hrv;
            cut = cut_value(g, &x)?;
        }
        records.push(IterRecord { iter: k, temperature, flips, hrv, cut, accepted, delta_e, draw, flipped });
    }

    Ok(AnnealTrace { initial_state, records, final_state: x, final_hrv: hrv, final_cut: cut })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityEstimate {
    pub successes: usize,
    pub runs: usize,
}

impl ProbabilityEstimate {
    pub fn probability(&self) -> f64 {
        self.successes as f64 / self.runs as f64
    }
}

/// Counts runs (seeds `master_seed + r`) whose final cut is within
/// [`OPTIMUM_TOL`] of `optimum`. Runs execute in parallel.
pub fn count_optimal<T: Real, S: HrvSource<T>>(
    source: &S,
    g: &WeightedGraph<T>,
    s: &Schedule,
    runs: usize,
    master_seed: u64,
    optimum: f64,
) -> Result<ProbabilityEstimate> {
    if runs == 0 {
        return Err(Error::invalid("need at least one run"));
    }
    let hits = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let t = anneal(source, g, s, master_seed.wrapping_add(r))?;
            Ok((t.final_cut.as_f64() - optimum).abs() <= OPTIMUM_TOL)
        })
        .collect::<Result<Vec<bool>>>()?;
    Ok(ProbabilityEstimate { successes: hits.iter().filter(|&&h| h).count(), runs })
}

/// Fraction of `runs` independent chains that end on a maximum cut, with the
/// optimum found by exhaustive search.
pub fn estimate_optimal_probability<T: Real, S: HrvSource<T>>(
    source: &S,
    g: &WeightedGraph<T>,
    s: &Schedule,
    runs: usize,
    master_seed: u64,
) -> Result<ProbabilityEstimate> {
    let best = brute_force_maxcut(g)?;
    count_optimal(source, g, s, runs, master_seed, best.best_cut.as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::Backend;
    use crate::spectral::eigendecompose;

    type G = WeightedGraph<f64>;

    fn square() -> G {
        G::new(4, [(0, 1, 0.7), (1, 2, 0.2), (2, 3, 0.9), (0, 3, 0.4), (0, 2, 0.3)]).unwrap()
    }

    fn full_evaluator(g: &G) -> HrvEvaluator<f64> {
        let b = eigendecompose(&IsingModel::from_graph(g)).unwrap();
        HrvEvaluator::new(b.build_ensemble(g.n(), 1.0).unwrap(), Backend::Analytic).unwrap()
    }

    #[test]
    fn schedule_laws() {
        let s = Schedule::new(10.0, 0.9, 100, 1).unwrap();
        assert_eq!(s.temperature(0), 10.0);
        assert!((s.temperature(2) - 8.1).abs() < 1e-12);
        assert_eq!(s.flips(0, 20), 20);
        let f: Vec<usize> = (0..100).map(|k| s.flips(k, 20)).collect();
        assert!(f.windows(2).all(|w| w[0] >= w[1]));
        assert_eq!(*f.last().unwrap(), 1);
        assert_eq!(Schedule::new(10.0, 0.9, 100, 3).unwrap().flips(99, 20), 3);
        assert!(Schedule::new(10.0, 1.0, 1, 1).is_err());
        assert!(Schedule::new(0.0, 0.5, 1, 1).is_err());
        assert!(Schedule::new(1.0, 0.5, 1, 0).is_err());
    }

    #[test]
    fn tiny_graph_finds_optimum() {
        // K4 with U(0,1) weights; optimum from the exhaustive oracle
        for gs in 0..5 {
            let g = G::gen_regular(4, 3, 0.0, 1.0, gs).unwrap();
            let ev = full_evaluator(&g);
            let t0 = ev.estimate_span(1000, &mut rng_from_seed(1));
            let s = Schedule::new(t0, 0.995, 3000, 1).unwrap();
            let p = estimate_optimal_probability(&ev, &g, &s, 100, 0).unwrap();
            assert!(p.successes >= 95, "graph seed {gs}: {p:?}");
        }
    }

    #[test]
    fn exact_source_on_single_edge() {
        let g = G::new(2, [(0, 1, 1.0)]).unwrap();
        let m = IsingModel::from_graph(&g);
        let s = Schedule::new(1.0, 0.99, 200, 1).unwrap();
        let p = estimate_optimal_probability(&m, &g, &s, 20, 0).unwrap();
        assert_eq!(p.probability(), 1.0);
    }

    #[test]
    fn same_seed_same_trace() {
        let g = G::gen_regular(12, 3, 0.0, 1.0, 2).unwrap();
        let ev = full_evaluator(&g);
        let s = Schedule::new(3.0, 0.99, 500, 1).unwrap();
        let a = anneal(&ev, &g, &s, 42).unwrap();
        let b = anneal(&ev, &g, &s, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 500);
        assert_eq!(a.replay(), a.final_state);
    }

    #[test]
    fn frozen_chain_is_greedy() {
        let g = G::gen_regular(12, 3, 0.0, 1.0, 8).unwrap();
        let ev = full_evaluator(&g);
        let s = Schedule::new(1.0, 1e-300, 300, 1).unwrap();
        let t = anneal(&ev, &g, &s, 5).unwrap();
        let hrvs: Vec<f64> = t.records.iter().map(|r| r.hrv).collect();
        assert!(hrvs.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        assert!(t.records[1..].iter().all(|r| r.flips == 1));
        assert!(t.records.iter().skip(1).all(|r| !r.accepted || r.delta_e <= 0.0));
    }

    #[test]
    fn uphill_moves_are_justified() {
        let g = G::gen_regular(10, 3, 0.0, 1.0, 1).unwrap();
        let ev = full_evaluator(&g);
        let s = Schedule::new(2.0, 0.998, 1000, 1).unwrap();
        let t = anneal(&ev, &g, &s, 9).unwrap();
        let mut uphill = 0;
        for r in &t.records {
            if r.accepted && r.delta_e > 0.0 {
                uphill += 1;
                let u = r.draw.expect("uphill move has a draw");
                assert!(u < (-r.delta_e / r.temperature).exp());
            }
        }
        assert!(uphill > 0);
    }

    #[test]
    fn trace_csv_columns() {
        let g = square();
        let ev = full_evaluator(&g);
        let s = Schedule::new(1.0, 0.9, 5, 1).unwrap();
        let t = anneal(&ev, &g, &s, 0).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "iter,temperature,flips,hrv,cut,accepted");
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn dimension_mismatch() {
        let g = square();
        let other = G::new(5, [(0, 1, 1.0)]).unwrap();
        let ev = full_evaluator(&g);
        let s = Schedule::new(1.0, 0.9, 5, 1).unwrap();
        assert!(anneal(&ev, &other, &s, 0).is_err());
        assert!(count_optimal(&ev, &g, &s, 0, 0, 1.0).is_err());
    }
}
