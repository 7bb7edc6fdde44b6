//! Scalar abstraction for the numeric core.
//!
//! All closed-form and solver code is generic over [`Real`], so the same
//! routines run in `f32` or `f64`. Concrete aliases live at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
    /// Shorthand for lossy conversion from `f64` constants.
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// `self` as `f64`, for reporting and RNG boundaries.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cast_round_trips() {
        let x: f64 = Real::cast(0.25);
        assert_eq!(x, 0.25);
        let y: f32 = Real::cast(0.5);
        assert_eq!(y, 0.5f32);
    }
}
