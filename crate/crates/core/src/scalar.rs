//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("count representable in scalar type")
    }

    /// Lossless widening used for text serialization.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean<T: Real>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().copied().sum::<T>() / T::from_usize_lossy(xs.len()))
}

/// Sample standard deviation with the `n - 1` divisor; `None` below two samples.
pub fn sample_sd<T: Real>(xs: &[T]) -> Option<T> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: T = xs.iter().map(|&x| (x - m) * (x - m)).sum();
    Some((ss / T::from_usize_lossy(xs.len() - 1)).sqrt())
}

/// Formats a value with 17 significant digits, enough to round-trip an `f64`.
pub fn fmt17<T: Real>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_sd_uses_n_minus_one() {
        assert_eq!(sample_sd(&[1.0_f64, 2.0, 3.0]), Some(1.0));
        assert_eq!(sample_sd(&[1.0_f64]), None);
    }

    #[test]
    fn fmt17_round_trips() {
        for v in [0.1_f64, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
        }
    }
}
