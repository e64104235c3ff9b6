use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the detectors and metrics are computed in.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from a count. Exact for counts below 2^24 (`f32`) or 2^53 (`f64`).
    fn from_count(c: u64) -> Self {
        Self::from_u64(c).expect("count representable as float")
    }

    /// Conversion from a signed exact integer accumulator.
    fn from_wide(v: i128) -> Self {
        Self::from_i128(v).expect("accumulator representable as float")
    }

    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("length representable as float")
    }

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable as float")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
