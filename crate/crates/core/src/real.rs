//! Scalar abstraction shared by the tree, LP and sampler code.
//!
//! Everything numeric in the model is generic over [`Real`]. The trait pins
//! down the float operations we need plus the handful of random draws whose
//! implementations differ per concrete type, so that generic code never has
//! to carry `where StandardNormal: Distribution<T>` bounds around.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};

pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Absolute slack accepted on LP constraint violations.
    fn feasibility_tol() -> Self;

    /// Smallest pivot magnitude the simplex will divide by.
    fn pivot_tol() -> Self;

    /// Slack on `|phi| == 1` checks.
    fn norm_tol() -> Self;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform on the open interval (0, 1).
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Gamma(shape, 1).
    fn sample_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self;

    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for finite literals and IEEE floats.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize converts to float")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }

    /// Uniform on the closed interval [lo, hi].
    #[inline]
    fn sample_uniform<R: Rng + ?Sized>(lo: Self, hi: Self, rng: &mut R) -> Self {
        let u = Self::sample_open01(rng);
        let v = lo + (hi - lo) * u;
        v.max(lo).min(hi)
    }

    /// Beta(a, b) via the gamma ratio.
    fn sample_beta<R: Rng + ?Sized>(a: Self, b: Self, rng: &mut R) -> Self {
        let x = Self::sample_gamma(a, rng);
        let y = Self::sample_gamma(b, rng);
        x / (x + y)
    }

    /// Inverse-gamma with the given shape and scale.
    fn sample_inv_gamma<R: Rng + ?Sized>(shape: Self, scale: Self, rng: &mut R) -> Self {
        scale / Self::sample_gamma(shape, rng)
    }
}

macro_rules! impl_real {
    ($ty:ty, feas = $feas:expr, pivot = $pivot:expr, norm = $norm:expr) => {
        impl Real for $ty {
            #[inline]
            fn feasibility_tol() -> Self {
                $feas
            }

            #[inline]
            fn pivot_tol() -> Self {
                $pivot
            }

            #[inline]
            fn norm_tol() -> Self {
                $norm
            }

            #[inline]
            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            #[inline]
            fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            fn sample_gamma<R: Rng + ?Sized>(shape: Self, rng: &mut R) -> Self {
                Gamma::new(shape, 1.0)
                    .expect("gamma shape must be positive and finite")
                    .sample(rng)
            }
        }
    };
}

impl_real!(f64, feas = 1e-9, pivot = 1e-12, norm = 1e-12);
impl_real!(f32, feas = 1e-4, pivot = 1e-6, norm = 1e-5);

/// Euclidean dot product.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}
