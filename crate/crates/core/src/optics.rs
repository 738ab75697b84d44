//! Optical readout of the machine: per-frame detector intensity, time-division
//! accumulation into the HRV, and the Gaussian detection noise channel.
//!
//! Two backends compute the center-point intensity of one frame. The analytic
//! one uses the closed form `(Σ ξ_i x_i)²`. The field one builds the complex
//! SLM plane out of macropixels, runs a 2D FFT and reads the zero-frequency
//! bin, which is what the lens and detector do physically.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::ising::SpinState;
use crate::scalar::Real;
use crate::spectral::{IntensityEnsemble, Sign};

/// Default number of random states used to estimate the HRV span.
pub const DEFAULT_SPAN_SAMPLES: usize = 1000;

/// Default macropixel side length.
pub const DEFAULT_BLOCK: usize = 8;

/// Closed-form center intensity `(Σ ξ_i x_i)²` for phases in `{0, π}`.
///
/// A negative `ξ_i` stands for an extra π phase on that pixel, which the
/// signed product captures exactly.
pub fn analytic_intensity<T: Real>(xi: &[T], x: &SpinState) -> T {
    assert_eq!(xi.len(), x.len(), "intensity vector / spin state dimension");
    let amp: T = xi.iter().zip(x.spins()).map(|(&a, &s)| if s > 0 { a } else { -a }).sum();
    amp * amp
}

/// Layout of spins on the SLM plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MacropixelConfig {
    /// Pixels per macropixel side.
    pub block: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Side of the (square) transform plane.
    pub pad: usize,
}

impl MacropixelConfig {
    pub fn new(block: usize, grid_rows: usize, grid_cols: usize, pad: usize) -> Result<Self> {
        if block == 0 || grid_rows == 0 || grid_cols == 0 {
            return Err(Error::invalid("macropixel block and grid must be positive"));
        }
        let need = grid_rows.max(grid_cols) * block;
        if pad < need || !pad.is_power_of_two() {
            return Err(Error::invalid(format!("transform plane {pad} must be a power of two >= {need}")));
        }
        Ok(Self { block, grid_rows, grid_cols, pad })
    }

    /// Smallest square grid holding `n` spins, plane padded to a power of two.
    pub fn for_spins(n: usize, block: usize) -> Result<Self> {
        let mut side = 1;
        while side * side < n {
            side += 1;
        }
        Self::new(block, side, side, (side * block).next_power_of_two())
    }

    pub fn capacity(&self) -> usize {
        self.grid_rows * self.grid_cols
    }

    /// `(block²)²`: the zero-frequency bin sums `block²` pixels per spin.
    pub fn calibration(&self) -> f64 {
        let b2 = (self.block * self.block) as f64;
        b2 * b2
    }
}

/// Field backend with a cached FFT plan.
#[derive(Clone)]
pub struct FieldBackend<T: Real> {
    cfg: MacropixelConfig,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Real> fmt::Debug for FieldBackend<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldBackend").field("cfg", &self.cfg).finish()
    }
}

impl<T: Real> FieldBackend<T> {
    pub fn new(cfg: MacropixelConfig) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(cfg.pad);
        Self { cfg, fft }
    }

    pub fn config(&self) -> &MacropixelConfig {
        &self.cfg
    }

    /// Complex SLM plane: spin `i` occupies macropixel `i` in row-major order
    /// with uniform amplitude `ξ_i x_i`.
    pub fn field_plane(&self, xi: &[T], x: &SpinState) -> Result<Vec<Complex<T>>> {
        let n = xi.len();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: x.len() });
        }
        if n > self.cfg.capacity() {
            return Err(Error::invalid(format!(
                "{n} spins do not fit a {}x{} macropixel grid",
                self.cfg.grid_rows, self.cfg.grid_cols
            )));
        }
        let MacropixelConfig { block, grid_cols, pad, .. } = self.cfg;
        let mut plane = vec![Complex::new(T::zero(), T::zero()); pad * pad];
        for (i, (&a, &s)) in xi.iter().zip(x.spins()).enumerate() {
            let amp = if s > 0 { a } else { -a };
            let (r0, c0) = ((i / grid_cols) * block, (i % grid_cols) * block);
            for r in r0..r0 + block {
                for px in &mut plane[r * pad + c0..r * pad + c0 + block] {
                    *px = Complex::new(amp, T::zero());
                }
            }
        }
        Ok(plane)
    }

    /// In-place unnormalized 2D DFT of a `pad × pad` plane.
    pub fn transform(&self, plane: &mut [Complex<T>]) {
        let pad = self.cfg.pad;
        self.fft.process(plane);
        // transpose, transform rows again, transpose back
        for r in 0..pad {
            for c in r + 1..pad {
                plane.swap(r * pad + c, c * pad + r);
            }
        }
        self.fft.process(plane);
        for r in 0..pad {
            for c in r + 1..pad {
                plane.swap(r * pad + c, c * pad + r);
            }
        }
    }

    /// Calibrated intensity of the zero-frequency bin.
    pub fn intensity(&self, xi: &[T], x: &SpinState) -> Result<T> {
        let mut plane = self.field_plane(xi, x)?;
        self.transform(&mut plane);
        Ok(plane[0].norm_sqr() / T::of(self.cfg.calibration()))
    }
}

/// One-shot field intensity (plans a fresh FFT).
pub fn field_intensity<T: Real>(xi: &[T], x: &SpinState, cfg: &MacropixelConfig) -> Result<T> {
    FieldBackend::new(*cfg).intensity(xi, x)
}

#[derive(Debug, Clone)]
pub enum Backend<T: Real> {
    Analytic,
    Field(FieldBackend<T>),
}

impl<T: Real> Backend<T> {
    pub fn field(cfg: MacropixelConfig) -> Self {
        Backend::Field(FieldBackend::new(cfg))
    }

    pub fn intensity(&self, xi: &[T], x: &SpinState) -> T {
        match self {
            Backend::Analytic => analytic_intensity(xi, x),
            Backend::Field(f) => f.intensity(xi, x).expect("field backend sized for the ensemble"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Analytic => "analytic",
            Backend::Field(_) => "field",
        }
    }
}

/// Where the Gaussian perturbation enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// One draw on the accumulated HRV.
    #[default]
    PerHrv,
    /// One draw per frame intensity.
    PerFrame,
}

/// Gaussian detection noise, `sigma = level × span`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T> {
    pub level: T,
    pub sigma: T,
    pub span_samples: usize,
    pub mode: NoiseMode,
}

impl<T: Real> NoiseModel<T> {
    pub fn none() -> Self {
        Self { level: T::zero(), sigma: T::zero(), span_samples: 0, mode: NoiseMode::PerHrv }
    }

    pub fn from_span(level: T, span: T, span_samples: usize) -> Result<Self> {
        if !(level >= T::zero()) || !(span >= T::zero()) {
            return Err(Error::invalid(format!("noise level {level} and span {span} must be >= 0")));
        }
        let sigma = if level == T::zero() { T::zero() } else { level * span };
        Ok(Self { level, sigma, span_samples, mode: NoiseMode::PerHrv })
    }

    pub fn with_mode(mut self, mode: NoiseMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn is_silent(&self) -> bool {
        self.sigma == T::zero()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        let z: f64 = rng.sample(StandardNormal);
        self.sigma * T::of(z)
    }
}

/// One TDM frame of an HRV evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRecord<T> {
    pub frame: usize,
    pub sign: Sign,
    pub intensity: T,
}

/// Maps spin states to HRVs: `Σ_n g_n I_n` over the ensemble's frames, plus noise.
#[derive(Debug, Clone)]
pub struct HrvEvaluator<T: Real> {
    ensemble: IntensityEnsemble<T>,
    backend: Backend<T>,
    noise: NoiseModel<T>,
}

impl<T: Real> HrvEvaluator<T> {
    pub fn new(ensemble: IntensityEnsemble<T>, backend: Backend<T>) -> Result<Self> {
        if let Backend::Field(f) = &backend {
            if f.config().capacity() < ensemble.n() {
                return Err(Error::invalid(format!(
                    "macropixel grid holds {} spins, model has {}",
                    f.config().capacity(),
                    ensemble.n()
                )));
            }
        }
        Ok(Self { ensemble, backend, noise: NoiseModel::none() })
    }

    pub fn with_noise(mut self, noise: NoiseModel<T>) -> Self {
        self.noise = noise;
        self
    }

    pub fn ensemble(&self) -> &IntensityEnsemble<T> {
        &self.ensemble
    }

    pub fn backend(&self) -> &Backend<T> {
        &self.backend
    }

    pub fn noise(&self) -> &NoiseModel<T> {
        &self.noise
    }

    pub fn n(&self) -> usize {
        self.ensemble.n()
    }

    pub fn frames(&self, x: &SpinState) -> Vec<FrameRecord<T>> {
        self.ensemble
            .xi()
            .iter()
            .zip(self.ensemble.signs())
            .enumerate()
            .map(|(frame, (xi, &sign))| FrameRecord { frame, sign, intensity: self.backend.intensity(xi, x) })
            .collect()
    }

    pub fn noiseless(&self, x: &SpinState) -> T {
        self.ensemble
            .xi()
            .iter()
            .zip(self.ensemble.signs())
            .map(|(xi, g)| g.value::<T>() * self.backend.intensity(xi, x))
            .sum()
    }

    /// HRV of `x`. No random numbers are drawn when the noise is silent.
    pub fn hrv<R: Rng + ?Sized>(&self, x: &SpinState, rng: &mut R) -> T {
        if self.noise.is_silent() {
            return self.noiseless(x);
        }
        match self.noise.mode {
            NoiseMode::PerHrv => self.noiseless(x) + self.noise.draw(rng),
            NoiseMode::PerFrame => self
                .ensemble
                .xi()
                .iter()
                .zip(self.ensemble.signs())
                .map(|(xi, g)| g.value::<T>() * (self.backend.intensity(xi, x) + self.noise.draw(rng)))
                .sum(),
        }
    }

    /// `max - min` of the noiseless HRV over `samples` uniform random states.
    pub fn estimate_span<R: Rng + ?Sized>(&self, samples: usize, rng: &mut R) -> T {
        estimate_span(&self.ensemble, &self.backend, samples, rng)
    }

    /// CSV `frame,g,intensity` for one state.
    pub fn write_frame_trace<W: Write>(&self, x: &SpinState, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["frame", "g", "intensity"])?;
        for f in self.frames(x) {
            w.write_record([f.frame.to_string(), f.sign.value::<T>().to_string(), f.intensity.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn estimate_span<T: Real, R: Rng + ?Sized>(
    ensemble: &IntensityEnsemble<T>,
    backend: &Backend<T>,
    samples: usize,
    rng: &mut R,
) -> T {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for _ in 0..samples {
        let x = SpinState::random(ensemble.n(), rng);
        let v: T =
            ensemble.xi().iter().zip(ensemble.signs()).map(|(xi, g)| g.value::<T>() * backend.intensity(xi, &x)).sum();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if samples == 0 {
        T::zero()
    } else {
        hi - lo
    }
}
