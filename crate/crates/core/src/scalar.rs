//! Scalar abstraction: the whole library is generic over the floating-point
//! type through [`Real`], with `f32`/`f64` as the concrete choices.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar used for fields, operators and solvers.
pub trait Real:
    Float + FromPrimitive + Sum + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` constant into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Kahan-compensated summation.
///
/// Mass bookkeeping asserts per-step drifts near machine precision, which a
/// plain sequential sum over a 64x64 grid cannot deliver.
pub(crate) fn kahan_sum<T: Real, I: IntoIterator<Item = T>>(items: I) -> T {
    let mut sum = T::zero();
    let mut comp = T::zero();
    for x in items {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}
