//! Exact ψ and distance-to-nearest-integer on rationals, plus the tagged
//! α parameter (exact rational or floating real).

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::Fraction;

fn half<I: Integer + Clone>() -> Ratio<I> {
    Ratio::new_raw(I::one(), I::one() + I::one())
}

/// ψ(x) = x − ⌊x⌋ − 1/2, exact. Result lies in [−1/2, 1/2).
pub fn psi<I: Integer + Clone>(x: &Ratio<I>) -> Ratio<I> {
    x - x.floor() - half()
}

/// ‖x‖ = min(1/2 − ψ(x), 1/2 + ψ(x)), exact. Result lies in [0, 1/2].
pub fn dist_nearest_int<I: Integer + Clone>(x: &Ratio<I>) -> Ratio<I> {
    let p = psi(x);
    let h = half::<I>();
    let lo = h.clone() - p.clone();
    let hi = h + p;
    if lo < hi {
        lo
    } else {
        hi
    }
}

/// ψ(numer/denom) as the unreduced pair `(2r − denom, 2·denom)` with
/// `r = numer mod denom`. Inner loops sum these numerators over a shared
/// denominator.
#[inline]
pub fn psi_mod_parts(numer: u128, denom: u128) -> (i128, u128) {
    debug_assert!(denom > 0 && denom <= (u128::MAX >> 2));
    let r = numer % denom;
    (2 * r as i128 - denom as i128, 2 * denom)
}

/// ψ(numer/denom) computed through `numer mod denom`.
pub fn psi_mod(numer: u128, denom: u128) -> Result<Fraction> {
    if denom == 0 {
        return invalid("psi_mod: denominator is zero");
    }
    if denom > (u128::MAX >> 2) {
        return psi_mod_big(&BigUint::from(numer), &BigUint::from(denom));
    }
    let (n, d) = psi_mod_parts(numer, denom);
    Ok(Fraction::new(BigInt::from(n), BigInt::from(d)))
}

/// Arbitrary-precision fallback of [`psi_mod`].
pub fn psi_mod_big(numer: &BigUint, denom: &BigUint) -> Result<Fraction> {
    if denom.is_zero() {
        return invalid("psi_mod: denominator is zero");
    }
    let r = BigInt::from(numer % denom);
    let d = BigInt::from(denom.clone());
    Ok(Fraction::new(2 * r - &d, 2 * d))
}

/// The α parameter: exact rational or an approximation of an arbitrary real.
#[derive(Clone, Debug, PartialEq)]
pub enum Alpha<F> {
    Rational(Fraction),
    Real(F),
}

impl<F: Real> Alpha<F> {
    pub fn rational(num: i64, den: i64) -> Self {
        Alpha::Rational(Fraction::new(num.into(), den.into()))
    }

    pub fn to_real(&self) -> F {
        match self {
            Alpha::Rational(r) => ratio_to_real(r),
            Alpha::Real(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Alpha::Rational(_))
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Alpha::Rational(r) => r.is_positive(),
            Alpha::Real(x) => *x > F::zero() && x.is_finite(),
        }
    }

    /// Fractional part of `m·α`.
    pub fn frac_mul(&self, m: u128) -> F {
        match self {
            Alpha::Rational(r) => {
                let (p, q) = (r.numer(), r.denom());
                match (p.to_u128(), q.to_u128()) {
                    (Some(p), Some(q)) if q <= u64::MAX as u128 && p < (1u128 << 64) => {
                        let rem = mul_mod(m % q, p % q, q);
                        F::from_wide(rem) / F::from_wide(q)
                    }
                    _ => {
                        let prod = BigInt::from(m) * p;
                        let rem = prod.mod_floor(q);
                        ratio_to_real(&Fraction::new(rem, q.clone()))
                    }
                }
            }
            Alpha::Real(x) => crate::scalar::frac_mul(m, *x),
        }
    }
}

impl<F: fmt::Display> fmt::Display for Alpha<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Alpha::Real(x) => write!(f, "{x}"),
        }
    }
}

/// `a·b mod m` for operands below `m ≤ 2^64`.
#[inline]
pub(crate) fn mul_mod(a: u128, b: u128, m: u128) -> u128 {
    debug_assert!(m <= u64::MAX as u128 + 1);
    (a * b) % m
}

/// `base^exp mod m` with `m ≤ 2^64`.
pub(crate) fn pow_mod(base: u128, mut exp: u32, m: u128) -> u128 {
    if m == 1 {
        return 0;
    }
    let mut b = base % m;
    let mut acc = 1u128;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        exp >>= 1;
    }
    acc
}

/// Nearest floating value of an exact rational, also for huge operands.
pub fn ratio_to_real<F: Real>(r: &Fraction) -> F {
    if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
        if n.unsigned_abs() < (1 << 53) && d < (1 << 53) {
            return F::from_f64(n as f64 / d as f64).expect("finite");
        }
    }
    // scale so the quotient carries 64 significant bits
    let shift = r.numer().bits() as i64 - r.denom().bits() as i64 - 64;
    let (n, d) = if shift > 0 {
        (r.numer().clone(), r.denom() << shift as usize)
    } else {
        (r.numer() << (-shift) as usize, r.denom().clone())
    };
    let q = (n / d).to_f64().unwrap_or(f64::NAN);
    F::from_f64(q * 2f64.powi(shift as i32)).unwrap_or(F::nan())
}

/// Fractional part of the golden ratio, (√5 − 1)/2.
pub const GOLDEN_FRAC: f64 = 0.618_033_988_749_894_9;
/// 1/√2.
pub const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Parses `p/q`, a decimal, or a named irrational (`golden`, `invsqrt2`, `sqrt2`).
///
/// `p/q` is always exact. Decimals become exact rationals only when `exact` is
/// set; named irrationals are rejected in exact mode.
pub fn parse_alpha(s: &str, exact: bool) -> Result<Alpha<f64>> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p
            .trim()
            .parse()
            .or_else(|_| invalid(format!("bad numerator in {s:?}")))?;
        let q: BigInt = q
            .trim()
            .parse()
            .or_else(|_| invalid(format!("bad denominator in {s:?}")))?;
        if q.is_zero() {
            return invalid(format!("zero denominator in {s:?}"));
        }
        return Ok(Alpha::Rational(Fraction::new(p, q)));
    }
    let named = match s {
        "golden" | "phi" => Some(GOLDEN_FRAC),
        "invsqrt2" => Some(INV_SQRT2),
        "sqrt2" => Some(std::f64::consts::SQRT_2),
        _ => None,
    };
    if let Some(v) = named {
        if exact {
            return invalid(format!("{s:?} is irrational and has no exact representation"));
        }
        return Ok(Alpha::Real(v));
    }
    if exact {
        return parse_decimal(s).map(Alpha::Rational);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Alpha::Real(v)),
        _ => invalid(format!("cannot parse {s:?} as p/q or decimal")),
    }
}

/// Exact value of a terminating decimal such as `-1.25e-3`.
pub fn parse_decimal(s: &str) -> Result<Fraction> {
    let bad = || Error::InvalidArgument(format!("{s:?} is not a terminating decimal"));
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int, fr) = mant.split_once('.').unwrap_or((mant, ""));
    if int.is_empty() && fr.is_empty()
        || !int.bytes().chain(fr.bytes()).all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits: BigInt = format!("{int}{fr}0").parse::<BigInt>().map_err(|_| bad())? / 10;
    let scale = exp - fr.len() as i32;
    let ten = BigInt::from(10);
    let mut r = if scale >= 0 {
        Fraction::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        Fraction::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fr(n: i64, d: i64) -> Fraction {
        Fraction::new(n.into(), d.into())
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(&fr(7, 4)), fr(1, 4));
        assert_eq!(psi(&fr(3, 1)), fr(-1, 2));
        assert_eq!(psi(&fr(1, 2)), fr(0, 1));
        assert_eq!(psi(&fr(-1, 3)), fr(1, 6));
        // fixed-width rationals work too
        assert_eq!(psi(&Ratio::new(7i64, 4)), Ratio::new(1, 4));
    }

    #[test]
    fn dist_examples() {
        assert_eq!(dist_nearest_int(&fr(1, 3)), fr(1, 3));
        assert_eq!(dist_nearest_int(&fr(5, 3)), fr(1, 3));
        assert_eq!(dist_nearest_int(&fr(1, 2)), fr(1, 2));
        assert_eq!(dist_nearest_int(&fr(4, 1)), fr(0, 1));
    }

    #[test]
    fn psi_mod_examples() {
        assert_eq!(psi_mod(9, 4).unwrap(), fr(-1, 4));
        assert_eq!(psi_mod(0, 7).unwrap(), fr(-1, 2));
        let e15 = 1_000_000_000_000_000u128;
        assert_eq!(
            psi_mod(e15 + 1, e15).unwrap(),
            fr(1, e15 as i64) - fr(1, 2)
        );
        assert!(psi_mod(1, 0).is_err());
        // beyond the fixed-width guard the wide path kicks in
        let big = u128::MAX - 5;
        assert_eq!(psi_mod(big - 1, big).unwrap(), psi(&Fraction::new((big - 1).into(), big.into())));
    }

    #[test]
    fn parse_alpha_forms() {
        assert_eq!(parse_alpha("1/7", false).unwrap(), Alpha::rational(1, 7));
        assert_eq!(parse_alpha("2/4", true).unwrap(), Alpha::rational(1, 2));
        assert_eq!(parse_alpha("0.125", true).unwrap(), Alpha::rational(1, 8));
        assert_eq!(parse_alpha("1.5e-3", true).unwrap(), Alpha::rational(3, 2000));
        assert_eq!(parse_alpha("25e1", true).unwrap(), Alpha::rational(250, 1));
        assert_eq!(parse_alpha("0.1", false).unwrap(), Alpha::Real(0.1));
        assert_eq!(parse_alpha("golden", false).unwrap(), Alpha::Real(GOLDEN_FRAC));
        assert!(parse_alpha("golden", true).is_err());
        assert!(parse_alpha("1/0", false).is_err());
        assert!(parse_alpha("abc", false).is_err());
        assert!(parse_alpha("1.2.3", true).is_err());
        assert!(parse_alpha("nan", false).is_err());
    }

    #[test]
    fn ratio_to_real_handles_huge_operands() {
        let big = BigInt::from(3) * num_traits::pow(BigInt::from(10), 400);
        let r = Fraction::new(big.clone() + 1, big * 2);
        let x: f64 = ratio_to_real(&r);
        assert!((x - 0.5).abs() < 1e-15);
        let y: f64 = ratio_to_real(&fr(-3, 4));
        assert_eq!(y, -0.75);
    }

    #[test]
    fn frac_mul_rational_is_exact() {
        let a = Alpha::<f64>::rational(1, 3);
        assert_eq!(a.frac_mul(9), 0.0);
        assert_eq!(a.frac_mul(10), 1.0 / 3.0);
        let huge = Alpha::<f64>::Rational(Fraction::new(1.into(), BigInt::from(u64::MAX) * 4));
        assert!(huge.frac_mul(3) > 0.0);
    }

    #[test]
    fn pow_mod_matches_naive() {
        for b in 0..20u128 {
            for e in 0..6u32 {
                for m in 1..30u128 {
                    assert_eq!(pow_mod(b, e, m), b.pow(e) % m);
                }
            }
        }
    }

    fn arb_fraction() -> impl Strategy<Value = Fraction> {
        (-10_000i64..10_000, 1i64..5_000).prop_map(|(n, d)| fr(n, d))
    }

    proptest! {
        #[test]
        fn psi_in_range_and_offset_integral(x in arb_fraction()) {
            let p = psi(&x);
            prop_assert!(p >= fr(-1, 2) && p < fr(1, 2));
            prop_assert!((x - p - fr(1, 2)).is_integer());
        }

        #[test]
        fn psi_reflection(x in arb_fraction()) {
            prop_assert_eq!(psi(&x) + psi(&-x.clone()), if x.is_integer() { fr(-1, 1) } else { fr(0, 1) });
        }

        #[test]
        fn psi_periodic(x in arb_fraction(), n in -1000i64..1000) {
            prop_assert_eq!(psi(&(x.clone() + fr(n, 1))), psi(&x));
        }

        #[test]
        fn dist_is_min_over_neighbours(x in arb_fraction()) {
            let lo = x.floor();
            let hi = x.ceil();
            let brute = std::cmp::min((x.clone() - lo).abs(), (hi - x.clone()).abs());
            let d = dist_nearest_int(&x);
            prop_assert_eq!(d.clone(), brute);
            prop_assert!(d >= fr(0, 1) && d <= fr(1, 2));
        }

        #[test]
        fn psi_mod_agrees_with_psi(n in 0u64..u64::MAX, d in 1u64..u64::MAX) {
            prop_assert_eq!(psi_mod(n as u128, d as u128).unwrap(), psi(&Fraction::new(BigInt::from(n), BigInt::from(d))));
        }
    }
}
