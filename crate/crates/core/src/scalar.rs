use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by every numerical routine: f32 or f64.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal fits the scalar type")
    }

    /// Converts a count.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits the scalar type")
    }

    /// Base-2 logarithm that maps 0 to 0, for `x·log x` style sums.
    fn xlog2x(self) -> Self {
        if self <= Self::zero() {
            Self::zero()
        } else {
            self * self.log2()
        }
    }

    /// Tolerance used for stochasticity checks at this precision.
    fn stochastic_tol() -> Self {
        let eps = Self::epsilon().to_f64().unwrap_or(1e-12);
        Self::lit(1e-12f64.max(eps * 64.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shannon entropy in bits of a probability vector, with 0·log 0 = 0.
pub(crate) fn entropy<F: Scalar>(p: &[F]) -> F {
    -p.iter().map(|&x| x.xlog2x()).sum::<F>()
}

/// Binary entropy h_b(x) in bits.
pub(crate) fn binary_entropy<F: Scalar>(x: F) -> F {
    -(x.xlog2x() + (F::one() - x).xlog2x())
}
