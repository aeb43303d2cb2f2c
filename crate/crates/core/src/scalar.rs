//! Scalar abstraction for the numeric core.
//!
//! Everything numeric in this crate is generic over [`Real`] so the same
//! estimators and solvers run in `f32` or `f64`. The crate root exports
//! `f64` aliases, which is what the harness uses end to end.

use rand::Rng;
use rand_distr::StandardNormal;

/// Floating-point scalar the library computes in.
///
/// Extends the `num_traits` arithmetic surface with the two random
/// primitives the samplers need, so generic code never names a
/// distribution type.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + core::fmt::Debug
    + core::fmt::Display
    + core::iter::Sum
    + core::ops::AddAssign
    + Send
    + Sync
    + 'static
{
    /// Converts a configuration literal. Finite `f64` input always fits.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal must be representable")
    }

    /// Widens back to `f64` for reporting. Exact for `f32` and `f64`.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must convert to f64")
    }

    /// One standard normal draw from the given stream.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// One uniform draw from `[0, 1)`.
    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.sample(StandardNormal)
    }

    fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random()
    }
}
