//! Scalar abstraction: the numeric kernels are generic over [`Real`] so the
//! same code runs in `f32` or `f64`. Concrete aliases live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point scalar usable by every module in this crate.
///
/// Beyond the `num-traits` surface this adds seeded draws of the two
/// primitive randoms the samplers need (standard normal, uniform on `[0,1)`)
/// so that generic code never has to name `rand_distr` bounds.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Display + Debug + Send + Sync + 'static
{
    fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self;
    fn uniform_01<G: Rng + ?Sized>(rng: &mut G) -> Self;

    /// Shorthand for embedding an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f64 {
    #[inline]
    fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self {
        StandardNormal.sample(rng)
    }
    #[inline]
    fn uniform_01<G: Rng + ?Sized>(rng: &mut G) -> Self {
        rng.random::<f64>()
    }
}

impl Real for f32 {
    #[inline]
    fn standard_normal<G: Rng + ?Sized>(rng: &mut G) -> Self {
        StandardNormal.sample(rng)
    }
    #[inline]
    fn uniform_01<G: Rng + ?Sized>(rng: &mut G) -> Self {
        rng.random::<f32>()
    }
}

/// Kahan–Neumaier compensated accumulator.
///
/// Long weighted averages (10^7 steps and more) lose digits under naive
/// summation; the running sums `Γ_n^(ℓ)` and the averaging recursion keep a
/// compensation term instead.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<R: Real> {
    sum: R,
    comp: R,
}

impl<R: Real> CompensatedSum<R> {
    pub fn new() -> Self {
        Self {
            sum: R::zero(),
            comp: R::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, v: R) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> R {
        self.sum + self.comp
    }
}

impl<R: Real> From<R> for CompensatedSum<R> {
    fn from(v: R) -> Self {
        let mut s = Self::new();
        s.add(v);
        s
    }
}
