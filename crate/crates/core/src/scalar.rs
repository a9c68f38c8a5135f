//! Scalar abstraction shared by every model in the crate.
//!
//! All geometry, statics and solver code is written against [`Real`], so the
//! same models run in `f32` or `f64`. The concrete `f64` aliases exported from
//! the crate root are what the command-line front end uses.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar usable by the models: `f32` or `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + Default + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    #[inline]
    fn from_count(value: usize) -> Self {
        Self::from_usize(value).expect("count representable in scalar type")
    }

    /// Lossy conversion to `f64`, for reporting.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// `true` when `self` and `other` agree to `rel` relative tolerance
    /// (absolute near zero).
    #[inline]
    fn approx_eq(self, other: Self, rel: Self) -> bool {
        let scale = Self::one().max(self.abs()).max(other.abs());
        (self - other).abs() <= rel * scale
    }
}

impl<T> Real for T where T: Float + FloatConst + FromPrimitive + Default + Debug + Display + Send + Sync + 'static {}

#[cfg(test)]
mod tests {
    use super::*;

    fn half<T: Real>() -> T {
        T::lit(0.5)
    }

    #[test]
    fn both_float_widths_are_real() {
        assert_eq!(half::<f32>(), 0.5f32);
        assert_eq!(half::<f64>(), 0.5f64);
        assert_eq!(f64::from_count(7), 7.0);
    }

    #[test]
    fn approx_eq_is_relative_away_from_zero() {
        assert!(1.0e6f64.approx_eq(1.0e6 + 0.5, 1e-6));
        assert!(!1.0f64.approx_eq(1.1, 1e-3));
        assert!(1e-14f64.approx_eq(0.0, 1e-12));
    }
}
