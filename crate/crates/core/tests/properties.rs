#![allow(clippy::needless_range_loop)]

use gsim::ising::cut_value;
use gsim::optics::{analytic_intensity, field_intensity, MacropixelConfig};
use gsim::rng::rng_from_seed;
use gsim::scalar::rel_diff;
use gsim::spectral::eigendecompose;
use gsim::{anneal, Backend, Graph, HrvEvaluator, Model, Schedule, SpinState};
use proptest::collection::vec;
use proptest::prelude::*;

fn spins(n: usize) -> impl Strategy<Value = SpinState> {
    vec(prop_oneof![Just(1i8), Just(-1i8)], n).prop_map(|s| SpinState::new(s).unwrap())
}

fn model_and_state() -> impl Strategy<Value = (Model, SpinState)> {
    (2usize..12).prop_flat_map(|n| {
        (vec(-1.0f64..1.0, n * (n - 1) / 2), spins(n)).prop_map(move |(upper, x)| {
            let mut rows = vec![vec![0.0; n]; n];
            let mut it = upper.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    let v = it.next().unwrap();
                    rows[i][j] = v;
                    rows[j][i] = v;
                }
            }
            (Model::from_rows(&rows).unwrap(), x)
        })
    })
}

fn graph_and_state() -> impl Strategy<Value = (Graph, SpinState)> {
    (2usize..12).prop_flat_map(|n| {
        (vec(proptest::option::of(-1.0f64..1.0), n * (n - 1) / 2), spins(n)).prop_map(move |(mask, x)| {
            let mut edges = Vec::new();
            let mut it = mask.into_iter();
            for u in 0..n {
                for v in u + 1..n {
                    if let Some(w) = it.next().unwrap() {
                        edges.push((u, v, w));
                    }
                }
            }
            (Graph::new(n, edges).unwrap(), x)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn cut_is_half_weight_minus_half_energy((g, x) in graph_and_state()) {
        let h = Model::from_graph(&g).hamiltonian(&x).unwrap();
        let w = g.total_weight();
        prop_assert!(rel_diff(cut_value(&g, &x).unwrap(), w / 2.0 - h / 2.0, 1.0) <= 1e-12);
    }

    #[test]
    fn global_flip_changes_nothing((g, x) in graph_and_state()) {
        let m = Model::from_graph(&g);
        let y = x.negated();
        prop_assert_eq!(m.hamiltonian(&x).unwrap(), m.hamiltonian(&y).unwrap());
        prop_assert_eq!(cut_value(&g, &x).unwrap(), cut_value(&g, &y).unwrap());
    }

    #[test]
    fn single_flip_delta_matches_recompute((m, x) in model_and_state(), i in 0usize..12) {
        let i = i % m.n();
        let mut y = x.clone();
        y.flip(i);
        let direct = m.hamiltonian(&y).unwrap() - m.hamiltonian(&x).unwrap();
        prop_assert!(rel_diff(m.delta_hamiltonian(&x, i).unwrap(), direct, 1.0) <= 1e-12);
    }

    #[test]
    fn full_rank_hrv_is_the_quadratic_form((m, x) in model_and_state()) {
        let b = eigendecompose(&m).unwrap();
        let ev = HrvEvaluator::new(b.build_ensemble(m.n(), 1.0).unwrap(), Backend::Analytic).unwrap();
        prop_assert!(rel_diff(ev.noiseless(&x), m.quadratic_form(&x), m.frobenius_norm()) <= 1e-10);
    }

    #[test]
    fn amplitude_scale_enters_squared((m, x) in model_and_state(), p in 0.1f64..5.0) {
        let b = eigendecompose(&m).unwrap();
        let k = m.n().div_ceil(2);
        let one = HrvEvaluator::new(b.build_ensemble(k, 1.0).unwrap(), Backend::Analytic).unwrap();
        let scaled = HrvEvaluator::new(b.build_ensemble(k, p).unwrap(), Backend::Analytic).unwrap();
        prop_assert!(rel_diff(scaled.noiseless(&x), p * p * one.noiseless(&x), p * p * m.frobenius_norm()) <= 1e-10);
    }

    #[test]
    fn field_backend_matches_closed_form(
        (xi, x) in (1usize..40).prop_flat_map(|n| (vec(-2.0f64..2.0, n), spins(n))),
        block in prop_oneof![Just(1usize), Just(2), Just(4), Just(8)],
    ) {
        let cfg = MacropixelConfig::for_spins(xi.len(), block).unwrap();
        let field = field_intensity(&xi, &x, &cfg).unwrap();
        let scale: f64 = xi.iter().map(|v| v * v).sum();
        prop_assert!(rel_diff(field, analytic_intensity(&xi, &x), scale) <= 1e-9);
    }

    #[test]
    fn error_ratio_and_tail_shrink_with_k((m, _x) in model_and_state()) {
        let b = eigendecompose(&m).unwrap();
        let n = m.n();
        prop_assert_eq!(b.error_ratio(0).unwrap(), 1.0);
        prop_assert_eq!(b.error_ratio(n).unwrap(), 0.0);
        prop_assert_eq!(b.tail_frobenius(n).unwrap(), 0.0);
        prop_assert!(rel_diff(b.tail_frobenius(0).unwrap(), m.frobenius_norm(), 1.0) <= 1e-12);
        for k in 0..n {
            let mu = b.error_ratio(k + 1).unwrap();
            prop_assert!((0.0..=1.0).contains(&mu));
            prop_assert!(mu <= b.error_ratio(k).unwrap());
            prop_assert!(b.tail_frobenius(k + 1).unwrap() <= b.tail_frobenius(k).unwrap());
        }
    }

    #[test]
    fn truncated_reconstruction_error_is_the_tail((m, _x) in model_and_state(), k in 0usize..12) {
        let b = eigendecompose(&m).unwrap();
        let k = k % (m.n() + 1);
        let r = b.reconstruct(k);
        let err = r.iter().zip(m.data()).map(|(a, c)| (a - c).powi(2)).sum::<f64>().sqrt();
        prop_assert!((err - b.tail_frobenius(k).unwrap()).abs() <= 1e-10 * m.frobenius_norm().max(1.0));
    }

    #[test]
    fn rudy_round_trip((g, _x) in graph_and_state()) {
        prop_assert_eq!(Graph::from_rudy(&g.to_rudy()).unwrap(), g.clone());
        prop_assert_eq!(Graph::from_json(&g.to_json()).unwrap(), g);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn anneal_records_track_the_cut((g, _x) in graph_and_state(), seed in any::<u64>()) {
        let m = Model::from_graph(&g);
        let n = g.n();
        let ev = HrvEvaluator::new(eigendecompose(&m).unwrap().build_ensemble(n, 1.0).unwrap(), Backend::Analytic)
            .unwrap();
        let s = Schedule::new(2.0, 0.98, 200, 1).unwrap();
        let t = anneal(&ev, &g, &s, seed).unwrap();
        let w = g.total_weight();
        for r in &t.records {
            prop_assert!((r.cut - (w + r.hrv) / 2.0).abs() <= 1e-9 * w.abs().max(1.0));
            prop_assert!(r.flips >= 1 && r.flips <= n);
        }
        prop_assert_eq!(t.replay(), t.final_state.clone());
    }
}

#[test]
fn random_states_cover_both_signs() {
    let mut rng = rng_from_seed(0);
    let x = SpinState::random(64, &mut rng);
    let up = x.spins().iter().filter(|&&s| s == 1).count();
    assert!(up > 16 && up < 48);
}
