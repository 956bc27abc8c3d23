//! C(T), the error term E(T) = C(T) − F(T)·G(T), and the Möbius-weighted
//! ψ-sum Σ(T), all exact.
//!
//! Σ(T) = −Σ_{a/b ∈ ℐ(T)} Σ_{d ≤ T} M(⌊T/d⌋) ψ(d·a²/b²) and the definitional
//! E(T) are tied by E(T) = Σ(T) − #ℐ(T)/2; [`error_term`] records the residual
//! of that identity.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::farey::{self, fraction_parts_u64, half_rows, HalfRow, MobiusBlocks};
use crate::scalar::{CompensatedSum, Real};
use crate::sieve::ArithTables;
use crate::{Fraction, Value};

/// #(ℱ(T) ∩ [y, 1]) for 0 ≤ y ≤ 1.
pub fn count_interval(tables: &ArithTables, order: u64, y: &Fraction) -> Result<u64> {
    if y.is_negative() || *y > Fraction::one() {
        return invalid(format!("count_interval: y = {y} outside [0, 1]"));
    }
    let total = farey::farey_cardinality(tables, order)?;
    if y.is_one() {
        return Ok(0);
    }
    let (p, q) = fraction_parts_u64(y)?;
    let below_or_at = MobiusBlocks::new(tables, order)?.rank(p, q)?;
    Ok(total - below_or_at + u64::from(q <= order))
}

/// C(T) by double enumeration; quadratic in F(T), used as the reference.
pub fn c_naive(order: u64) -> Result<u64> {
    let all: Vec<(u64, u64)> = farey::enumerate(order)?
        .map(|r| (*r.numer(), *r.denom()))
        .collect();
    let mut total = 0u64;
    for &(a, b) in all.iter().filter(|(a, b)| 2 * a <= *b) {
        // ξ = c/e ≥ 1 − a²/b²  ⇔  c·b² ≥ e·(b² − a²)
        let b2 = (b * b) as u128;
        let gap = b2 - (a * a) as u128;
        total += all
            .iter()
            .filter(|&&(c, e)| c as u128 * b2 >= e as u128 * gap)
            .count() as u64;
    }
    Ok(total)
}

/// C(T) with each #𝒞_{a,b}(T) obtained from the floor-sum rank.
pub fn c_fast(tables: &ArithTables, order: u64) -> Result<u64> {
    let total = farey::farey_cardinality(tables, order)?;
    let blocks = MobiusBlocks::new(tables, order)?;
    let per_den: Vec<Result<u64>> = (2..=order)
        .into_par_iter()
        .map(|b| {
            let b2 = b * b;
            let member = u64::from(b2 <= order);
            let mut acc = 0u64;
            // a = 0 only occurs for b = 1 and contributes the empty [1, 1]
            for a in 1..=b / 2 {
                if a.gcd(&b) != 1 {
                    continue;
                }
                // (b² − a²)/b² is already reduced when gcd(a, b) = 1
                let below_or_at = blocks.rank(b2 - a * a, b2)?;
                acc += total - below_or_at + member;
            }
            Ok(acc)
        })
        .collect();
    per_den.into_iter().sum()
}

/// Per-denominator numerators of Σ(T) over the common denominator 2b².
fn sigma_numerators(tables: &ArithTables, order: u64) -> Result<Vec<(u64, i128)>> {
    if order < 1 || order > tables.limit() {
        return invalid(format!(
            "order {order} outside table range 1..={}",
            tables.limit()
        ));
    }
    let t = order as usize;
    let weights: Vec<i64> = (1..=t).map(|d| tables.mertens_raw(t / d)).collect();
    Ok((1..=order)
        .into_par_iter()
        .map(|b| {
            let b2 = (b as i128) * (b as i128);
            let mut s = 0i128;
            for a in 0..=b / 2 {
                if a.gcd(&b) != 1 {
                    continue;
                }
                let a2 = (a as i128 * a as i128) % b2;
                // r runs through d·a² mod b² for d = 1, 2, ...
                let mut r = 0i128;
                for &w in &weights {
                    r += a2;
                    if r >= b2 {
                        r -= b2;
                    }
                    if w != 0 {
                        s += w as i128 * (2 * r - b2);
                    }
                }
            }
            // Σ carries an overall minus sign
            (b, -s)
        })
        .collect())
}

/// Σ(T), exact. Partial sums share the denominator 2b² per b and are
/// combined in ascending b.
pub fn sigma_exact(tables: &ArithTables, order: u64) -> Result<Fraction> {
    Ok(sigma_numerators(tables, order)?
        .into_iter()
        .filter(|(_, s)| *s != 0)
        .fold(Fraction::zero(), |acc, (b, s)| {
            let b = BigInt::from(b);
            acc + Fraction::new(BigInt::from(s), 2 * &b * &b)
        }))
}

/// Σ(T) in floating point; the per-b numerators are still exact integers.
pub fn sigma_real<F: Real>(tables: &ArithTables, order: u64) -> Result<F> {
    Ok(sigma_numerators(tables, order)?
        .into_iter()
        .map(|(b, s)| {
            let b = F::from_u64(b).expect("small");
            F::from_i128(s).expect("finite") / (F::lit(2.0) * b * b)
        })
        .collect::<CompensatedSum<F>>()
        .value())
}

pub fn sigma_t(tables: &ArithTables, order: u64, exact: bool) -> Result<Value<f64>> {
    if exact {
        sigma_exact(tables, order).map(Value::Exact)
    } else {
        sigma_real(tables, order).map(Value::Float)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LatticeCountResult {
    pub order: u64,
    pub c: u64,
    pub f: u64,
    pub g: Fraction,
    pub e: Fraction,
    pub sigma: Fraction,
    pub half_count: u64,
    /// E(T) − Σ(T) + #ℐ(T)/2, zero when the identity holds.
    pub identity_residual: Fraction,
}

impl LatticeCountResult {
    pub fn identity_holds(&self) -> bool {
        self.identity_residual.is_zero()
    }
}

pub fn error_term(tables: &ArithTables, order: u64) -> Result<LatticeCountResult> {
    let c = c_fast(tables, order)?;
    let f = farey::farey_cardinality(tables, order)?;
    let g = farey::second_moment_half(order)?;
    let half_count = farey::half_count(order);
    let e = Fraction::from_integer(c.into()) - Fraction::from_integer(f.into()) * &g;
    let sigma = sigma_exact(tables, order)?;
    let identity_residual =
        &e - &sigma + Fraction::new(BigInt::from(half_count), BigInt::from(2));
    Ok(LatticeCountResult {
        order,
        c,
        f,
        g,
        e,
        sigma,
        half_count,
        identity_residual,
    })
}

/// Floating E(T) for orders where the exact moment is too costly.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeRealResult<F> {
    pub order: u64,
    pub c: u64,
    pub f: u64,
    pub half_count: u64,
    pub g: F,
    pub e: F,
}

pub fn error_term_real<F: Real>(tables: &ArithTables, order: u64) -> Result<LatticeRealResult<F>> {
    let c = c_fast(tables, order)?;
    let f = farey::farey_cardinality(tables, order)?;
    let rows: Vec<HalfRow> = half_rows(order);
    let half_count = rows.iter().map(|r| r.count).sum();
    let g = farey::moment_from_rows(&rows, F::one());
    // C − F·G accumulated term by term so the cancellation stays compensated
    let f_real = F::from_u64(f).expect("small");
    let mut acc = CompensatedSum::new();
    acc.add(F::from_u64(c).expect("small"));
    for r in &rows {
        let b = F::from_u64(r.den).expect("small");
        acc.add(-(f_real * F::from_wide(r.square_sum) / (b * b)));
    }
    Ok(LatticeRealResult {
        order,
        c,
        f,
        half_count,
        g,
        e: acc.value(),
    })
}
