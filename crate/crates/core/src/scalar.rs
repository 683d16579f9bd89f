use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the closed-form layer is written against.
///
/// The special functions are evaluated in `f64` and cast back, so `f32`
/// instantiations carry `f32` rounding on top of `f64`-accurate kernels.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Natural log of the gamma function for positive arguments.
    fn ln_gamma(self) -> Self;

    /// Standard normal cumulative distribution function.
    fn norm_cdf(self) -> Self;

    /// Lossless-enough conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Standard normal density.
    #[inline]
    fn norm_pdf(self) -> Self {
        (-(self * self) / Self::lit(2.0)).exp() / (Self::TAU()).sqrt()
    }
}

/// N(x) = erfc(-x/sqrt 2)/2. The erfc kernel is a minimax rational
/// approximation accurate to a few ulps over the whole real line, so the
/// absolute error of N stays below 1e-15.
#[inline]
fn norm_cdf_f64(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

impl Scalar for f64 {
    #[inline]
    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self)
    }

    #[inline]
    fn norm_cdf(self) -> Self {
        norm_cdf_f64(self)
    }
}

impl Scalar for f32 {
    #[inline]
    fn ln_gamma(self) -> Self {
        statrs::function::gamma::ln_gamma(self as f64) as f32
    }

    #[inline]
    fn norm_cdf(self) -> Self {
        norm_cdf_f64(self as f64) as f32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_cdf_reference_points() {
        assert_eq!(0.0f64.norm_cdf(), 0.5);
        // N(1) and N(-3) to 16 digits.
        assert!((1.0f64.norm_cdf() - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!(((-3.0f64).norm_cdf() - 0.001_349_898_031_630_094_6).abs() < 1e-17);
        assert!((1.0f32.norm_cdf() - 0.841_344_75).abs() < 1e-6);
    }

    #[test]
    fn ln_gamma_half_integers() {
        // Gamma(2.5) = 3 sqrt(pi) / 4
        let expected = (0.75 * std::f64::consts::PI.sqrt()).ln();
        assert!((Scalar::ln_gamma(2.5f64) - expected).abs() < 1e-14);
        assert!((Scalar::ln_gamma(2.5f32) - expected as f32).abs() < 1e-6);
    }
}
