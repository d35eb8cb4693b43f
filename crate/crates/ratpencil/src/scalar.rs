use nalgebra::RealField;
use num_complex::Complex;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar type underlying all complex matrix data.
///
/// `RealField` brings the arithmetic and elementary functions, the num-traits
/// bounds the conversions from/to plain `f64` used for constants, tolerances
/// and text output.
pub trait Scalar: RealField + FromPrimitive + ToPrimitive + Copy + Default {
    /// Machine epsilon of the underlying representation.
    fn eps() -> Self;

    /// Conversion from an `f64` constant (lossy for narrower types).
    fn fr(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Lossy view as `f64`, for diagnostics and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("real scalar representable as f64")
    }

    /// Complex number from real/imaginary `f64` parts.
    fn cx(re: f64, im: f64) -> Complex<Self> {
        Complex::new(Self::fr(re), Self::fr(im))
    }
}

impl Scalar for f64 {
    fn eps() -> Self {
        f64::EPSILON
    }
}

impl Scalar for f32 {
    fn eps() -> Self {
        f32::EPSILON
    }
}
