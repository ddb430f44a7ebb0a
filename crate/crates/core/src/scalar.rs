//! Scalar abstraction shared by energies, weights and rates.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;

/// Floating point type used for energies and probabilities: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal or intermediate into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable in every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    /// Draws from U[0, 1). Always consumes exactly one `f64` from the stream so
    /// chains with different scalar types see the same random sequence.
    #[inline]
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::lit(rng.gen::<f64>())
    }
}

impl Real for f32 {}
impl Real for f64 {}
