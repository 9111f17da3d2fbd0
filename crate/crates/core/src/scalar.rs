//! Scalar abstraction used by the closed-form rate and capacity arithmetic.
//!
//! Simulation time never goes through these types: the event clock is
//! integer picoseconds. Rates, ratios and statistics do, and they can be
//! evaluated in `f32`, `f64`, or exactly with a rational type.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Numeric type the analytic models are generic over.
pub trait Scalar:
    Num + Copy + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    fn from_u64_exact(value: u64) -> Self {
        Self::from_u64(value).expect("u64 value representable in scalar type")
    }

    fn ratio(numerator: u64, denominator: u64) -> Self {
        Self::from_u64_exact(numerator) / Self::from_u64_exact(denominator)
    }

    /// Lossy view for printing.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

impl Scalar for Ratio<i128> {}
impl Scalar for Ratio<i64> {}

/// Formats a value with a fixed number of decimals.
pub fn format_fixed<T: Scalar>(value: T, decimals: usize) -> String {
    format!("{:.*}", decimals, value.to_f64_lossy())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_is_exact() {
        let third = <Ratio<i128> as Scalar>::ratio(1, 3);
        assert_eq!(third + third + third, Ratio::from_integer(1));
    }

    #[test]
    fn min_of_picks_smaller() {
        assert_eq!(2.0f64.min_of(1.5), 1.5);
        assert_eq!(<Ratio<i64>>::new(1, 2).min_of(Ratio::new(2, 3)), Ratio::new(1, 2));
    }
}
