//! Farey fractions of order T: in-order enumeration, cardinality, the second
//! moment over [0, 1/2], and a Möbius/floor-sum rank function.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::scalar::{CompensatedSum, Real};
use crate::sieve::ArithTables;
use crate::Fraction;

/// Iterator over ℱ(T) = {a/b : 0 ≤ a < b ≤ T, gcd(a, b) = 1} in increasing order.
///
/// Consecutive terms a/b < c/d are advanced with the next-neighbour
/// recurrence `k = ⌊(T + b)/d⌋`, `(a, b, c, d) ← (c, d, kc − a, kd − b)`.
#[derive(Clone, Debug)]
pub struct FareyIter {
    order: u64,
    cur: (u64, u64),
    next: (u64, u64),
}

impl Iterator for FareyIter {
    type Item = Ratio<u64>;

    fn next(&mut self) -> Option<Self::Item> {
        let (a, b) = self.cur;
        if a >= b {
            return None;
        }
        let (c, d) = self.next;
        let k = (self.order + b) / d;
        self.cur = (c, d);
        self.next = (k * c - a, k * d - b);
        Some(Ratio::new_raw(a, b))
    }
}

impl std::iter::FusedIterator for FareyIter {}

pub fn enumerate(order: u64) -> Result<FareyIter> {
    if order < 1 {
        return invalid(format!("Farey order must be >= 1, got {order}"));
    }
    Ok(FareyIter {
        order,
        cur: (0, 1),
        next: (1, order),
    })
}

fn check_order(tables: &ArithTables, order: u64) -> Result<()> {
    if order < 1 || order > tables.limit() {
        return invalid(format!(
            "order {order} outside table range 1..={}",
            tables.limit()
        ));
    }
    Ok(())
}

/// F(T) = #ℱ(T) = Σ_{b ≤ T} φ(b).
pub fn farey_cardinality(tables: &ArithTables, order: u64) -> Result<u64> {
    check_order(tables, order)?;
    (1..=order).map(|b| tables.phi(b).map(u64::from)).sum()
}

/// Per-denominator contributions to ℐ(T) = ℱ(T) ∩ [0, 1/2].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HalfRow {
    pub den: u64,
    /// #{a : 0 ≤ a ≤ b/2, gcd(a, b) = 1}
    pub count: u64,
    /// Σ a² over the same a
    pub square_sum: u128,
}

pub fn half_rows(order: u64) -> Vec<HalfRow> {
    (1..=order)
        .into_par_iter()
        .map(|b| {
            let mut count = 0;
            let mut square_sum = 0u128;
            for a in 0..=b / 2 {
                if a.gcd(&b) == 1 {
                    count += 1;
                    square_sum += (a as u128) * (a as u128);
                }
            }
            HalfRow {
                den: b,
                count,
                square_sum,
            }
        })
        .collect()
}

/// #ℐ(T).
pub fn half_count(order: u64) -> u64 {
    half_rows(order).iter().map(|r| r.count).sum()
}

/// G(T) = Σ_{ξ ∈ ℱ(T), ξ ≤ 1/2} ξ², exact.
pub fn second_moment_half(order: u64) -> Result<Fraction> {
    if order < 1 {
        return invalid(format!("Farey order must be >= 1, got {order}"));
    }
    Ok(half_rows(order)
        .into_iter()
        .filter(|r| r.square_sum != 0)
        .fold(Fraction::zero(), |acc, r| {
            let b = BigInt::from(r.den);
            acc + Fraction::new(BigInt::from(r.square_sum), &b * &b)
        }))
}

/// Floating twin of [`second_moment_half`] using compensated summation.
pub fn second_moment_half_real<F: Real>(order: u64) -> Result<F> {
    if order < 1 {
        return invalid(format!("Farey order must be >= 1, got {order}"));
    }
    Ok(moment_from_rows(&half_rows(order), F::one()))
}

/// `scale · Σ_b s_b / b²` from precomputed rows.
pub(crate) fn moment_from_rows<F: Real>(rows: &[HalfRow], scale: F) -> F {
    rows.iter()
        .map(|r| {
            let b = F::from_u64(r.den).expect("small");
            scale * F::from_wide(r.square_sum) / (b * b)
        })
        .collect::<CompensatedSum<F>>()
        .value()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FareyStats {
    pub order: u64,
    pub cardinality: u64,
    pub half_count: u64,
    pub second_moment: Fraction,
}

pub fn farey_stats(tables: &ArithTables, order: u64) -> Result<FareyStats> {
    let cardinality = farey_cardinality(tables, order)?;
    Ok(FareyStats {
        order,
        cardinality,
        half_count: half_count(order),
        second_moment: second_moment_half(order)?,
    })
}

/// Σ_{i < n} ⌊(a·i + b)/m⌋ by Euclidean reduction, with overflow checks.
fn floor_sum_affine(mut n: u128, mut m: u128, mut a: u128, mut b: u128) -> Option<u128> {
    let mut acc = 0u128;
    loop {
        if a >= m {
            let tri = if n.is_multiple_of(2) {
                (n / 2).checked_mul(n.checked_sub(1)?)?
            } else {
                n.checked_mul((n - 1) / 2)?
            };
            acc = acc.checked_add(tri.checked_mul(a / m)?)?;
            a %= m;
        }
        if b >= m {
            acc = acc.checked_add(n.checked_mul(b / m)?)?;
            b %= m;
        }
        let y_max = a.checked_mul(n)?.checked_add(b)?;
        if y_max < m {
            return Some(acc);
        }
        n = y_max / m;
        b = y_max % m;
        std::mem::swap(&mut m, &mut a);
    }
}

/// Σ_{m=1}^{K} ⌊p·m/q⌋ in O(log max(p, q)) steps.
pub fn floor_sum(k: u64, p: u64, q: u64) -> Result<u128> {
    if q == 0 {
        return invalid("floor_sum: q must be >= 1");
    }
    if k == 0 {
        return Ok(0);
    }
    floor_sum_affine(k as u128, q as u128, p as u128, p as u128)
        .ok_or(Error::Overflow("floor_sum"))
}

/// Blocks of equal ⌊T/d⌋ with their Möbius weight Σ μ(d) over the block.
#[derive(Clone, Debug)]
pub(crate) struct MobiusBlocks {
    /// (⌊T/d⌋, Σ_{d in block} μ(d)), zero weights dropped
    pub blocks: Vec<(u64, i64)>,
}

impl MobiusBlocks {
    pub fn new(tables: &ArithTables, order: u64) -> Result<Self> {
        check_order(tables, order)?;
        let t = order as usize;
        let mut blocks = Vec::new();
        let mut l = 1usize;
        while l <= t {
            let k = t / l;
            let r = t / k;
            let w = tables.mertens_raw(r) - tables.mertens_raw(l - 1);
            if w != 0 {
                blocks.push((k as u64, w));
            }
            l = r + 1;
        }
        Ok(Self { blocks })
    }

    /// #{ξ ∈ ℱ(T) : ξ ≤ p/q} for 0 ≤ p < q.
    pub fn rank(&self, p: u64, q: u64) -> Result<u64> {
        debug_assert!(p < q);
        let mut acc: i128 = 1;
        for &(k, w) in &self.blocks {
            let s = floor_sum(k, p, q)?;
            let s = i128::try_from(s).map_err(|_| Error::Overflow("rank"))?;
            acc = acc
                .checked_add(s.checked_mul(w as i128).ok_or(Error::Overflow("rank"))?)
                .ok_or(Error::Overflow("rank"))?;
        }
        u64::try_from(acc).map_err(|_| Error::Overflow("rank"))
    }
}

pub(crate) fn fraction_parts_u64(x: &Fraction) -> Result<(u64, u64)> {
    match (x.numer().to_u64(), x.denom().to_u64()) {
        (Some(p), Some(q)) => Ok((p, q)),
        _ => Err(Error::Overflow("fraction exceeds 64-bit parts")),
    }
}

/// #{ξ ∈ ℱ(T) : ξ ≤ x} for 0 ≤ x < 1, via
/// `1 + Σ_{d ≤ T} μ(d) Σ_{m ≤ ⌊T/d⌋} ⌊x·m⌋`.
pub fn rank(tables: &ArithTables, order: u64, x: &Fraction) -> Result<u64> {
    if *x < Fraction::zero() || *x >= Fraction::from_integer(1.into()) {
        return invalid(format!("rank: x = {x} outside [0, 1)"));
    }
    let (p, q) = fraction_parts_u64(x)?;
    MobiusBlocks::new(tables, order)?.rank(p, q)
}
