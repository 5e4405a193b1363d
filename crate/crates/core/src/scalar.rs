//! Scalar abstraction shared by the numeric kernels.
//!
//! Metric extraction, scoring curves and the waterfall simulator are written
//! once against [`Scalar`] and instantiated for `f64` (the default everywhere
//! in the I/O layers) and `f32`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type usable by the metric, scoring and simulation code.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Converts an `f64` literal. Panics only if the target cannot represent
    /// finite `f64` values, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Scalar for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Standard normal CDF, `Φ(x) = erfc(-x/√2) / 2`.
pub fn std_normal_cdf<T: Scalar>(x: T) -> T {
    let half = T::lit(0.5);
    half * (-x * T::lit(std::f64::consts::FRAC_1_SQRT_2)).erfc()
}

/// Upper tail `1 - Φ(x)`, evaluated without cancellation.
pub fn std_normal_sf<T: Scalar>(x: T) -> T {
    T::lit(0.5) * (x * T::lit(std::f64::consts::FRAC_1_SQRT_2)).erfc()
}

/// `Φ⁻¹(0.9)`.
pub const PROBIT_0_9: f64 = 1.281_551_565_544_600_5;

/// Rounds half away from zero to `decimals` places.
pub fn round_half_away(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    let scaled = x * scale;
    // Snap values that are a hair below .5 only because of binary representation.
    let nudged = scaled + scaled.signum() * scaled.abs() * 4.0 * f64::EPSILON;
    nudged.round() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probit_constant_inverts_cdf() {
        assert!((std_normal_cdf(PROBIT_0_9) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn cdf_symmetry_f32() {
        let a = std_normal_cdf(1.5f32);
        let b = std_normal_cdf(-1.5f32);
        assert!((a + b - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rounding_half_away_from_zero() {
        assert_eq!(round_half_away(38.720_833, 1), 38.7);
        assert_eq!(round_half_away(63.5725, 1), 63.6);
        assert_eq!(round_half_away(2.675, 2), 2.68);
        assert_eq!(round_half_away(-2.5, 0), -3.0);
        assert_eq!(round_half_away(84.61, 2), 84.61);
        assert_eq!(round_half_away(1.005, 2), 1.01);
    }
}
