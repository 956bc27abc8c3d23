//! Floating-point scalar abstraction.
//!
//! Everything that cannot be exact (bound formulas, irrational phases,
//! regression) is written against [`Real`], implemented for `f32` and `f64`.
//! The crate root exposes `f64` aliases for the common case.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn from_wide(x: u128) -> Self {
        <Self as FromPrimitive>::from_u128(x).expect("u128 representable")
    }

    /// Bits in the significand including the hidden bit.
    const MANTISSA_BITS: u32;
}

impl Real for f32 {
    const MANTISSA_BITS: u32 = 24;
}

impl Real for f64 {
    const MANTISSA_BITS: u32 = 53;
}

/// Neumaier compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum<F> {
    sum: F,
    carry: F,
}

impl<F: Real> CompensatedSum<F> {
    pub fn new() -> Self {
        Self {
            sum: F::zero(),
            carry: F::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, v: F) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry = self.carry + ((self.sum - t) + v);
        } else {
            self.carry = self.carry + ((v - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> F {
        self.sum + self.carry
    }
}

impl<F: Real> FromIterator<F> for CompensatedSum<F> {
    fn from_iter<I: IntoIterator<Item = F>>(iter: I) -> Self {
        let mut acc = Self::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

pub fn compensated_sum<F: Real>(values: impl IntoIterator<Item = F>) -> F {
    values.into_iter().collect::<CompensatedSum<F>>().value()
}

/// Error-free product: returns `(p, e)` with `p + e == a * b` exactly.
#[inline]
pub fn two_product<F: Real>(a: F, b: F) -> (F, F) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

#[inline]
fn wrap_unit<F: Real>(x: F) -> F {
    let f = x - x.floor();
    // x slightly negative can round up to exactly 1
    if f >= F::one() {
        F::zero()
    } else {
        f
    }
}

/// Fractional part of `m * alpha` for an integer `m`, keeping the full
/// precision of `alpha`.
///
/// `m` is split into chunks that fit the significand exactly; each chunk
/// product is formed error-free and reduced mod 1 before the pieces are
/// recombined, so the integer part of `m * alpha` never swamps the fraction.
pub fn frac_mul<F: Real>(m: u128, alpha: F) -> F {
    let alpha_frac = wrap_unit(alpha);
    let chunk_bits = F::MANTISSA_BITS - 1;
    let mask = (1u128 << chunk_bits) - 1;
    let mut acc = F::zero();
    let mut rest = m;
    // alpha * 2^shift reduced mod 1, maintained exactly by doubling
    let mut scaled = alpha_frac;
    while rest != 0 {
        let chunk = rest & mask;
        if chunk != 0 {
            let (p, e) = two_product(F::from_wide(chunk), scaled);
            acc = wrap_unit(acc + wrap_unit(p) + e);
        }
        rest >>= chunk_bits;
        if rest != 0 {
            for _ in 0..chunk_bits {
                scaled = wrap_unit(scaled + scaled);
            }
        }
    }
    wrap_unit(acc)
}

/// `psi(x) = x - floor(x) - 1/2` in floating point, given the fractional part.
#[inline]
pub fn psi_from_frac<F: Real>(frac: F) -> F {
    frac - F::lit(0.5)
}

/// Distance to the nearest integer, given the fractional part.
#[inline]
pub fn dist_from_frac<F: Real>(frac: F) -> F {
    frac.min(F::one() - frac)
}
