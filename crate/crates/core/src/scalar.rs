//! Scalar abstraction for the numeric core.
//!
//! Everything downstream (environment physics, network math, trainers) is
//! generic over the float width through [`Scalar`]. The crate root exposes
//! `f64`-backed aliases, which is what the CLI and the experiment harness use.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating-point scalar the simulator and trainers operate on.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into this scalar type.
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("f64 constant must be representable")
    }

    /// Widens to `f64` (exact for f32/f64).
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
