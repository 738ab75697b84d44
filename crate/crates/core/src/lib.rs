//! Simulator for a general spatial photonic Ising machine.
//!
//! An arbitrary symmetric interaction matrix is eigendecomposed into signed
//! intensity vectors. Each vector is displayed as one amplitude frame on a
//! single simulated SLM; the detector readings of all frames are summed with
//! the recorded eigenvalue signs into the Hamiltonian representative value
//! (HRV). Keeping only the `K` strongest components gives a cheaper, lossy
//! machine, and the [`experiments`] module measures what that costs.
//!
//! The numerical core (`graph`, `ising`, `spectral`, `optics`, `anneal`) is
//! generic over the scalar type through [`Real`]; the aliases below fix it to
//! `f64` (the default everywhere in the experiments) or `f32`.

// `!(x > 0.0)` style checks reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod anneal;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod ising;
pub mod optics;
pub mod rng;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Real;

pub use anneal::{anneal, AnnealTrace, HrvSource, Schedule};
pub use graph::{GraphFormat, WeightedGraph};
pub use ising::{IsingModel, SpinState};
pub use optics::{Backend, HrvEvaluator, MacropixelConfig, NoiseModel};
pub use spectral::{EigenBundle, IntensityEnsemble};

/// Double precision graph.
pub type Graph = WeightedGraph<f64>;
/// Double precision Ising model.
pub type Model = IsingModel<f64>;
pub type Bundle = EigenBundle<f64>;
pub type Ensemble = IntensityEnsemble<f64>;
pub type Evaluator = HrvEvaluator<f64>;
pub type Trace = AnnealTrace<f64>;

pub type GraphF32 = WeightedGraph<f32>;
pub type ModelF32 = IsingModel<f32>;
pub type BundleF32 = EigenBundle<f32>;
pub type EnsembleF32 = IntensityEnsemble<f32>;
pub type EvaluatorF32 = HrvEvaluator<f32>;
