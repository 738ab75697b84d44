//! Scalar abstraction shared by the numerical modules.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, Signed, ToPrimitive};

/// Floating point type the simulator can run on: `f32` or `f64`.
///
/// The bounds cover what the FFT planner needs, so any `Real` can also drive
/// the field backend.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Signed
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for constants and sampled weights.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Real")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Relative difference with an absolute floor, `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_diff<T: Real>(a: T, b: T, floor: T) -> T {
    let scale = a.abs().max(b.abs()).max(floor);
    if scale == T::zero() {
        T::zero()
    } else {
        (a - b).abs() / scale
    }
}
