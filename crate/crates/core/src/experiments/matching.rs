//! HRV against Hamiltonian over random states, and the RMSE decay in `K`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_ks, mean, std_error, GraphSpec};
use crate::error::{Error, Result};
use crate::ising::{IsingModel, SpinState};
use crate::optics::{Backend, HrvEvaluator};
use crate::rng::{derive_seed, derived_rng};
use crate::spectral::eigendecompose;

/// Least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares. A constant `x` gives slope 0 through the mean of
/// `y`; a constant `y` that is fitted exactly has `r2 = 1`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), found: ys.len() });
    }
    if xs.is_empty() {
        return Err(Error::invalid("cannot fit an empty sample"));
    }
    let mx = mean(xs);
    let my = mean(ys);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(LinearFit { slope, intercept, r2 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMatch {
    pub k: usize,
    pub rmse: f64,
    /// `rmse / span`.
    pub rmse_relative: f64,
    /// `H` regressed on `-hrv_K`.
    pub fit: LinearFit,
    /// `(hrv_K, H)` per sampled state.
    pub scatter: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    /// `max - min` of the exact HRV `xᵀJx` over the sample.
    pub span: f64,
    pub records: Vec<KMatch>,
}

impl MatchReport {
    pub fn record(&self, k: usize) -> Option<&KMatch> {
        self.records.iter().find(|r| r.k == k)
    }
}

/// Compares the truncated, noiseless HRV with `H = -xᵀJx` on `samples`
/// uniform random states, drawn once and shared by every `K`. `K = 0` is
/// allowed and means `hrv ≡ 0`.
pub fn rmse_vs_k(m: &IsingModel<f64>, ks: &[usize], samples: usize, seed: u64) -> Result<MatchReport> {
    let n = m.n();
    if samples < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {samples}")));
    }
    check_ks(ks, n, true)?;
    let bundle = eigendecompose(m)?;

    let mut rng = derived_rng(seed, "rmse-states", 0);
    let states: Vec<SpinState> = (0..samples).map(|_| SpinState::random(n, &mut rng)).collect();
    let exact: Vec<f64> = states.iter().map(|x| m.quadratic_form(x)).collect();
    let h: Vec<f64> = exact.iter().map(|v| -v).collect();
    let span =
        exact.iter().copied().fold(f64::NEG_INFINITY, f64::max) - exact.iter().copied().fold(f64::INFINITY, f64::min);

    let records = ks
        .iter()
        .map(|&k| {
            let hrv: Vec<f64> = if k == 0 {
                vec![0.0; samples]
            } else {
                let ev = HrvEvaluator::new(bundle.build_ensemble(k, 1.0)?, Backend::Analytic)?;
                states.iter().map(|x| ev.noiseless(x)).collect()
            };
            let mse = hrv.iter().zip(&h).map(|(a, b)| (-a - b).powi(2)).sum::<f64>() / samples as f64;
            let rmse = mse.sqrt();
            let neg: Vec<f64> = hrv.iter().map(|v| -v).collect();
            Ok(KMatch {
                k,
                rmse,
                rmse_relative: if span > 0.0 { rmse / span } else { 0.0 },
                fit: linear_fit(&neg, &h)?,
                scatter: hrv.into_iter().zip(h.iter().copied()).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(MatchReport { n, samples, seed, span, records })
}

/// `rmse = A · exp(-B·(K/N - D))` with `D` pinned to 0 (`A` and `D` are not
/// separately identifiable).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    /// Goodness of fit of `ln rmse`.
    pub r2: f64,
    pub decaying: bool,
    pub points_used: usize,
}

impl ExpFit {
    pub fn eval(&self, k_over_n: f64) -> f64 {
        self.a * (-self.b * (k_over_n - self.d)).exp()
    }
}

/// Log-linear least squares over `(K/N, rmse)`. Points at or below
/// `1e-9 × max rmse` (the exact tail) are dropped first.
pub fn fit_exponential(points: &[(f64, f64)]) -> Result<ExpFit> {
    let top = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let kept: Vec<(f64, f64)> =
        points.iter().copied().filter(|&(x, y)| x.is_finite() && y.is_finite() && y > 1e-9 * top && y > 0.0).collect();
    if kept.len() < 3 {
        return Err(Error::invalid(format!("exponential fit needs 3 points with nonzero rmse, have {}", kept.len())));
    }
    let xs: Vec<f64> = kept.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    let line = linear_fit(&xs, &ys)?;
    let b = -line.slope;
    Ok(ExpFit { a: line.intercept.exp(), b, d: 0.0, r2: line.r2, decaying: b > 1e-9, points_used: kept.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub k: usize,
    pub k_over_n: f64,
    pub mean_rmse: f64,
    pub se_rmse: f64,
    pub mean_rmse_relative: f64,
    pub se_rmse_relative: f64,
}

/// RMSE-vs-`K` averaged over random graphs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub graph: GraphSpec,
    pub weight_low: f64,
    pub weight_high: f64,
    pub graph_seeds: usize,
    pub samples: usize,
    pub seed: u64,
    pub mean_density: f64,
    pub points: Vec<SweepPoint>,
    /// Fit of the mean absolute RMSE; `None` if too few nonzero points.
    pub fit: Option<ExpFit>,
    pub fit_relative: Option<ExpFit>,
}

/// Runs [`rmse_vs_k`] on `graph_seeds` generated graphs and averages.
/// Graph `s` uses generator seed `derive_seed(seed, "graph", s)`.
pub fn rmse_sweep(
    spec: GraphSpec,
    weight_low: f64,
    weight_high: f64,
    ks: &[usize],
    graph_seeds: usize,
    samples: usize,
    seed: u64,
) -> Result<SweepReport> {
    if graph_seeds == 0 {
        return Err(Error::invalid("need at least one graph seed"));
    }
    let n = spec.n();
    check_ks(ks, n, true)?;
    let per_graph = (0..graph_seeds as u64)
        .into_par_iter()
        .map(|s| {
            let g = spec.generate(weight_low, weight_high, derive_seed(seed, "graph", s))?;
            let m = IsingModel::from_graph(&g);
            let rep = rmse_vs_k(&m, ks, samples, derive_seed(seed, "rmse", s))?;
            Ok((g.density()?, rep))
        })
        .collect::<Result<Vec<_>>>()?;

    let mean_density = mean(&per_graph.iter().map(|p| p.0).collect::<Vec<_>>());
    let points: Vec<SweepPoint> = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let abs: Vec<f64> = per_graph.iter().map(|p| p.1.records[i].rmse).collect();
            let rel: Vec<f64> = per_graph.iter().map(|p| p.1.records[i].rmse_relative).collect();
            SweepPoint {
                k,
                k_over_n: k as f64 / n as f64,
                mean_rmse: mean(&abs),
                se_rmse: std_error(&abs),
                mean_rmse_relative: mean(&rel),
                se_rmse_relative: std_error(&rel),
            }
        })
        .collect();
    let fit = fit_exponential(&points.iter().map(|p| (p.k_over_n, p.mean_rmse)).collect::<Vec<_>>()).ok();
    let fit_relative =
        fit_exponential(&points.iter().map(|p| (p.k_over_n, p.mean_rmse_relative)).collect::<Vec<_>>()).ok();

    Ok(SweepReport {
        graph: spec,
        weight_low,
        weight_high,
        graph_seeds,
        samples,
        seed,
        mean_density,
        points,
        fit,
        fit_relative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;

    fn pair() -> IsingModel<f64> {
        IsingModel::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap()
    }

    #[test]
    fn full_rank_matches_exactly() {
        let g = WeightedGraph::<f64>::gen_regular(12, 3, 0.0, 1.0, 3).unwrap();
        let m = IsingModel::from_graph(&g);
        let rep = rmse_vs_k(&m, &[12], 300, 9).unwrap();
        let r = &rep.records[0];
        assert!(r.rmse <= 1e-9 * rep.span);
        assert!((r.fit.slope - 1.0).abs() < 1e-9);
        assert!(r.fit.intercept.abs() < 1e-9 * rep.span);
        assert!((r.fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_components_is_rms_hamiltonian() {
        let g = WeightedGraph::<f64>::gen_regular(10, 3, 0.0, 1.0, 1).unwrap();
        let m = IsingModel::from_graph(&g);
        let rep = rmse_vs_k(&m, &[0, 10], 200, 4).unwrap();
        let r0 = rep.record(0).unwrap();
        let rms = (r0.scatter.iter().map(|p| p.1 * p.1).sum::<f64>() / 200.0).sqrt();
        assert!((r0.rmse - rms).abs() < 1e-12);
        assert!(r0.scatter.iter().all(|p| p.0 == 0.0));
        assert_eq!(r0.fit.slope, 0.0);
        assert!(r0.fit.r2.is_finite());
    }

    #[test]
    fn states_are_shared_across_k() {
        let m = pair();
        let rep = rmse_vs_k(&m, &[1, 2], 50, 0).unwrap();
        // H depends only on the state, so equal H columns mean equal states
        let h1: Vec<f64> = rep.records[0].scatter.iter().map(|p| p.1).collect();
        let h2: Vec<f64> = rep.records[1].scatter.iter().map(|p| p.1).collect();
        assert_eq!(h1, h2);
        assert_eq!(rep.span, 2.0);
    }

    #[test]
    fn rejects_bad_arguments() {
        let m = pair();
        assert!(rmse_vs_k(&m, &[1], 1, 0).is_err());
        assert!(rmse_vs_k(&m, &[3], 10, 0).is_err());
    }

    #[test]
    fn exact_exponential_is_recovered() {
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let k = i as f64 / 10.0;
                (k, 2.0 * (-3.0 * k).exp())
            })
            .collect();
        let f = fit_exponential(&pts).unwrap();
        assert!((f.a - 2.0).abs() < 1e-12);
        assert!((f.b - 3.0).abs() < 1e-12);
        assert_eq!(f.d, 0.0);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(f.decaying);
        assert!((f.eval(0.5) - 2.0 * (-1.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn constant_data_is_not_decaying() {
        let pts = [(0.1, 0.4), (0.2, 0.4), (0.3, 0.4), (0.4, 0.4)];
        let f = fit_exponential(&pts).unwrap();
        assert!(f.b.abs() < 1e-12);
        assert!(!f.decaying);
    }

    #[test]
    fn exact_tail_is_dropped() {
        let pts = [(0.25, 1.0), (0.5, 0.5), (0.75, 0.25), (1.0, 1e-16)];
        let f = fit_exponential(&pts).unwrap();
        assert_eq!(f.points_used, 3);
        assert!(fit_exponential(&pts[1..]).is_err());
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = GraphSpec::Regular { n: 10, degree: 3 };
        let a = rmse_sweep(spec, 0.0, 1.0, &[2, 5, 8, 10], 4, 100, 11).unwrap();
        let b = rmse_sweep(spec, 0.0, 1.0, &[2, 5, 8, 10], 4, 100, 11).unwrap();
        assert_eq!(a, b);
        assert!((a.mean_density - 3.0 / 9.0).abs() < 1e-12);
        assert!(a.points[3].mean_rmse < 1e-9);
    }
}
