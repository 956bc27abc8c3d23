//! Constrained ψ-sums over dyadic ranges, the min(L, 1/‖nα‖) sum, near-integer
//! counts and exponential sums, with the closed-form right-hand sides they are
//! measured against.
//!
//! Three bounds are provided, each as a list of named terms:
//!
//! * the ψ-sum bound, with e = 2^{1−k},
//!   `(Nκ)^ε · (N α^e F_{1−ke}(q) + N^{1−e} F_{1−e}(q) + N^{1−ke} F_1(q) α^{−e})`,
//!   κ = max(α, 1/α);
//! * the Van der Corput form `N α^{1/(2^k−1)} + N^{1−e} + N^{1−e−2^{4−2k}} α^{−e}`;
//! * the min-sum bound `LNα + (N + 1/α) log L + L`.
//!
//! Implied constants are never assumed; reports carry the ratio lhs/rhs.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::frac::{mul_mod, pow_mod, Alpha};
use crate::scalar::{psi_from_frac, CompensatedSum, Real};
use crate::sieve::ArithTables;
use crate::{Fraction, Value};

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct PsiSumParams<F> {
    pub n: u64,
    pub k: u32,
    pub alpha: Alpha<F>,
    pub q: u64,
    pub epsilon: F,
}

impl<F: Real> PsiSumParams<F> {
    pub fn new(n: u64, k: u32, alpha: Alpha<F>, q: u64) -> Self {
        Self {
            n,
            k,
            alpha,
            q,
            epsilon: F::lit(DEFAULT_EPSILON),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return invalid("N must be >= 1");
        }
        if self.k < 2 {
            return invalid(format!("k must be >= 2, got {}", self.k));
        }
        if self.q < 1 {
            return invalid("q must be >= 1");
        }
        if !self.alpha.is_positive() {
            return invalid(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.epsilon > F::zero() && self.epsilon <= F::lit(0.5)) {
            return invalid(format!("epsilon must lie in (0, 1/2], got {}", self.epsilon));
        }
        Ok(())
    }

    /// κ = max(α, 1/α) ≥ 1.
    pub fn kappa(&self) -> F {
        let a = self.alpha.to_real();
        a.max(a.recip())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsiSumResult<F> {
    pub value: Value<F>,
    /// Number of n in (N, 2N] coprime to q.
    pub terms: u64,
}

/// Σ_{N < n ≤ 2N, gcd(n, q) = 1} ψ(n^k α).
///
/// With `exact` the sum is an exact rational (α must be rational). Otherwise
/// each n^k α is reduced mod 1 at full precision (integer modular arithmetic
/// for rational α, error-free float products for real α) and the ψ values are
/// summed with compensation.
pub fn psi_sum<F: Real>(params: &PsiSumParams<F>, exact: bool) -> Result<PsiSumResult<F>> {
    params.validate()?;
    let range = (params.n + 1)..=(2 * params.n);
    let coprime = |n: &u64| n.gcd(&params.q) == 1;
    if exact {
        let Alpha::Rational(alpha) = &params.alpha else {
            return invalid("exact psi_sum needs a rational alpha");
        };
        let (value, terms) = psi_sum_exact(range.filter(coprime), params.k, alpha)?;
        return Ok(PsiSumResult {
            value: Value::Exact(value),
            terms,
        });
    }
    let mut acc = CompensatedSum::new();
    let mut terms = 0;
    for n in range.filter(coprime) {
        let frac = match (n as u128).checked_pow(params.k) {
            Some(m) => params.alpha.frac_mul(m),
            None => match &params.alpha {
                Alpha::Rational(r) => {
                    let m = num_traits::pow(BigInt::from(n), params.k as usize) * r.numer();
                    crate::frac::ratio_to_real(&Fraction::new(m.mod_floor(r.denom()), r.denom().clone()))
                }
                Alpha::Real(_) => return Err(Error::Overflow("n^k exceeds 128 bits")),
            },
        };
        acc.add(psi_from_frac(frac));
        terms += 1;
    }
    Ok(PsiSumResult {
        value: Value::Float(acc.value()),
        terms,
    })
}

fn psi_sum_exact(ns: impl Iterator<Item = u64>, k: u32, alpha: &Fraction) -> Result<(Fraction, u64)> {
    let fits = |x: &BigInt| x.to_u128().filter(|&v| v <= u64::MAX as u128);
    let mut terms = 0u64;
    if let (Some(p), Some(r)) = (fits(alpha.numer()), fits(alpha.denom())) {
        // fixed-width path: Σ (2·(n^k p mod r) − r) over the common denominator 2r
        let mut num: i128 = 0;
        for n in ns {
            let rem = mul_mod(pow_mod(n as u128, k, r), p % r, r);
            let term = 2 * rem as i128 - r as i128;
            num = num.checked_add(term).ok_or(Error::Overflow("psi_sum accumulator"))?;
            terms += 1;
        }
        return Ok((Fraction::new(num.into(), BigInt::from(2 * r)), terms));
    }
    let p = alpha.numer().to_biguint().ok_or(Error::Overflow("psi_sum: negative alpha"))?;
    let r = alpha.denom().to_biguint().expect("positive denominator");
    let mut num = BigInt::zero();
    for n in ns {
        let rem: BigUint = BigUint::from(n).modpow(&BigUint::from(k), &r) * &p % &r;
        num += 2 * BigInt::from(rem) - BigInt::from(r.clone());
        terms += 1;
    }
    Ok((Fraction::new(num, 2 * BigInt::from(r)), terms))
}

/// Right-hand side of a bound: named terms and a common prefactor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rhs<F> {
    pub terms: Vec<(&'static str, F)>,
    pub prefactor: F,
}

impl<F: Real> Rhs<F> {
    /// prefactor · Σ terms.
    pub fn total(&self) -> F {
        self.prefactor * self.terms.iter().map(|t| t.1).sum::<F>()
    }

    pub fn term(&self, name: &str) -> Option<F> {
        self.terms.iter().find(|t| t.0 == name).map(|t| t.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport<F> {
    pub bound: &'static str,
    /// (name, value) pairs describing the instance.
    pub params: Vec<(&'static str, String)>,
    pub lhs: F,
    pub rhs: Rhs<F>,
    pub rhs_total: F,
    /// |lhs| / rhs_total.
    pub ratio: F,
}

impl<F: Real> BoundReport<F> {
    pub fn new(bound: &'static str, params: Vec<(&'static str, String)>, lhs: F, rhs: Rhs<F>) -> Self {
        let rhs_total = rhs.total();
        Self {
            bound,
            params,
            lhs,
            ratio: lhs.abs() / rhs_total,
            rhs,
            rhs_total,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lhs.is_finite()
            && self.rhs_total.is_finite()
            && self.ratio.is_finite()
            && self.rhs.terms.iter().all(|t| t.1.is_finite())
    }
}

fn real_u64<F: Real>(x: u64) -> F {
    F::from_u64(x).expect("representable")
}

/// 2^{1−k}.
fn weyl_exponent<F: Real>(k: u32) -> F {
    F::lit(2.0).powi(1 - k as i32)
}

/// N^{1 − 2^{1−k}}, shared by both ψ-sum bounds so the values coincide bit for bit.
fn secondary_power<F: Real>(n: F, k: u32) -> F {
    n.powf(F::one() - weyl_exponent::<F>(k))
}

/// Exponents of α in the two main terms, exactly: (2^{1−k}, 1/(2^k − 1)).
pub fn main_term_exponents(k: u32) -> (Ratio<u64>, Ratio<u64>) {
    assert!((2..64).contains(&k));
    (Ratio::new(1, 1u64 << (k - 1)), Ratio::new(1, (1u64 << k) - 1))
}

/// The three terms of the ψ-sum bound and the (Nκ)^ε prefactor.
pub fn prop31_rhs<F: Real>(tables: &ArithTables, params: &PsiSumParams<F>) -> Result<Rhs<F>> {
    params.validate()?;
    let n: F = real_u64(params.n);
    let k = F::from_u32(params.k).expect("small");
    let e = weyl_exponent::<F>(params.k);
    let alpha = params.alpha.to_real();
    let alpha_e = alpha.powf(e);
    let main = n * alpha_e * tables.f_beta(params.q, F::one() - k * e)?;
    let secondary = secondary_power(n, params.k) * tables.f_beta(params.q, F::one() - e)?;
    let tertiary = n.powf(F::one() - k * e) * tables.f_beta(params.q, F::one())? / alpha_e;
    Ok(Rhs {
        terms: vec![("main", main), ("secondary", secondary), ("tertiary", tertiary)],
        prefactor: (n * params.kappa()).powf(params.epsilon),
    })
}

/// The Van der Corput ψ-sum estimate (no q-restriction, no prefactor).
pub fn vdc_rhs<F: Real>(n: u64, k: u32, alpha: F) -> Result<Rhs<F>> {
    if k < 2 {
        return invalid(format!("k must be >= 2, got {k}"));
    }
    if !(alpha > F::zero()) {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    let nr: F = real_u64(n);
    let e = weyl_exponent::<F>(k);
    let main_exp = F::one() / (F::lit(2.0).powi(k as i32) - F::one());
    let last_exp = F::one() - e - F::lit(2.0).powi(4 - 2 * k as i32);
    Ok(Rhs {
        terms: vec![
            ("main", nr * alpha.powf(main_exp)),
            ("secondary", secondary_power(nr, k)),
            ("tertiary", nr.powf(last_exp) * alpha.powf(-e)),
        ],
        prefactor: F::one(),
    })
}

fn psi_params_desc<F: Real>(p: &PsiSumParams<F>) -> Vec<(&'static str, String)> {
    vec![
        ("N", p.n.to_string()),
        ("k", p.k.to_string()),
        ("alpha", p.alpha.to_string()),
        ("q", p.q.to_string()),
        ("epsilon", p.epsilon.to_string()),
        ("kappa", p.kappa().to_string()),
    ]
}

/// |ψ-sum| against the ψ-sum bound. The sum is exact when α is rational.
pub fn prop31_report<F: Real>(tables: &ArithTables, params: &PsiSumParams<F>) -> Result<BoundReport<F>> {
    let lhs = psi_sum(params, params.alpha.is_exact())?.value.to_real();
    let rhs = prop31_rhs(tables, params)?;
    Ok(BoundReport::new("prop31", psi_params_desc(params), lhs, rhs))
}

/// |ψ-sum| (q = 1) against the Van der Corput form.
pub fn vdc_report<F: Real>(n: u64, k: u32, alpha: &Alpha<F>) -> Result<BoundReport<F>> {
    let params = PsiSumParams::new(n, k, alpha.clone(), 1);
    let lhs = psi_sum(&params, alpha.is_exact())?.value.to_real();
    let rhs = vdc_rhs(n, k, alpha.to_real())?;
    let desc = vec![
        ("N", n.to_string()),
        ("k", k.to_string()),
        ("alpha", alpha.to_string()),
    ];
    Ok(BoundReport::new("vdc", desc, lhs, rhs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinSumParams<F> {
    pub m: u64,
    pub n: u64,
    pub l: u64,
    pub alpha: Alpha<F>,
}

impl<F: Real> MinSumParams<F> {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return invalid("N must be >= 1");
        }
        if self.l < 4 {
            return invalid(format!("L must be >= 4, got {}", self.l));
        }
        if !self.alpha.is_positive() {
            return invalid(format!("alpha must be positive, got {}", self.alpha));
        }
        Ok(())
    }
}

/// Σ_{M < n ≤ M+N} min(L, 1/‖nα‖), with ‖nα‖ = 0 capped at L.
pub fn min_sum<F: Real>(params: &MinSumParams<F>) -> Result<F> {
    params.validate()?;
    let l: F = real_u64(params.l);
    let range = (params.m + 1)..=(params.m + params.n);
    let mut acc = CompensatedSum::new();
    match &params.alpha {
        Alpha::Rational(r) if r.denom().to_u64().is_some() && r.numer().to_u64().is_some() => {
            let p = r.numer().to_u64().unwrap() as u128;
            let q = r.denom().to_u64().unwrap() as u128;
            for n in range {
                let rem = mul_mod(n as u128 % q, p % q, q);
                let d = rem.min(q - rem);
                // 1/‖nα‖ = q/d, capped at L exactly
                if d == 0 || params.l as u128 * d <= q {
                    acc.add(l);
                } else {
                    acc.add(F::from_wide(q) / F::from_wide(d));
                }
            }
        }
        alpha => {
            for n in range {
                let f = alpha.frac_mul(n as u128);
                let d = f.min(F::one() - f);
                acc.add(if d * l <= F::one() { l } else { d.recip() });
            }
        }
    }
    Ok(acc.value())
}

/// `LNα + (N + 1/α) log L + L`, natural log.
pub fn lemma33_rhs<F: Real>(params: &MinSumParams<F>) -> Result<Rhs<F>> {
    params.validate()?;
    let (n, l): (F, F) = (real_u64(params.n), real_u64(params.l));
    let alpha = params.alpha.to_real();
    Ok(Rhs {
        terms: vec![
            ("LNalpha", l * n * alpha),
            ("log", (n + alpha.recip()) * l.ln()),
            ("L", l),
        ],
        prefactor: F::one(),
    })
}

pub fn lemma33_report<F: Real>(params: &MinSumParams<F>) -> Result<BoundReport<F>> {
    let lhs = min_sum(params)?;
    let rhs = lemma33_rhs(params)?;
    let desc = vec![
        ("M", params.m.to_string()),
        ("N", params.n.to_string()),
        ("L", params.l.to_string()),
        ("alpha", params.alpha.to_string()),
    ];
    Ok(BoundReport::new("lemma33", desc, lhs, rhs))
}

fn check_delta<F: Real>(delta: F) -> Result<()> {
    if !(delta > F::zero() && delta <= F::lit(0.25)) {
        return invalid(format!("delta must lie in (0, 1/4], got {delta}"));
    }
    Ok(())
}

/// #{n ∈ (M, M+N] : ‖nα‖ < δ}.
pub fn count_near_integers<F: Real>(m: u64, n: u64, alpha: &Alpha<F>, delta: F) -> Result<u64> {
    check_delta(delta)?;
    if !alpha.is_positive() {
        return invalid(format!("alpha must be positive, got {alpha}"));
    }
    let range = (m + 1)..=(m + n);
    let count = match alpha {
        Alpha::Rational(r) if r.denom().to_u64().is_some() && r.numer().to_u64().is_some() => {
            let p = r.numer().to_u64().unwrap() as u128;
            let q = r.denom().to_u64().unwrap() as u128;
            // ‖nα‖ = d/q < δ compared exactly against δ's binary value
            let delta = Fraction::from_float(delta.to_f64().expect("finite"))
                .expect("finite delta");
            let below = |d: u128| Fraction::new(BigInt::from(d), BigInt::from(q)) < delta;
            // d ranges over 0..=q/2; find the first d that is not below δ
            let mut threshold = 0u128;
            while threshold <= q / 2 && below(threshold) {
                threshold += 1;
            }
            range
                .filter(|&i| {
                    let rem = mul_mod(i as u128 % q, p % q, q);
                    rem.min(q - rem) < threshold
                })
                .count() as u64
        }
        alpha => range
            .filter(|&i| {
                let f = alpha.frac_mul(i as u128);
                f.min(F::one() - f) < delta
            })
            .count() as u64,
    };
    Ok(count)
}

/// Envelope `Nα + δN + δ/α + 1` for the near-integer count.
pub fn rcount_envelope<F: Real>(n: u64, alpha: F, delta: F) -> Result<Rhs<F>> {
    check_delta(delta)?;
    let nr: F = real_u64(n);
    Ok(Rhs {
        terms: vec![
            ("Nalpha", nr * alpha),
            ("deltaN", delta * nr),
            ("delta_over_alpha", delta / alpha),
            ("one", F::one()),
        ],
        prefactor: F::one(),
    })
}

pub fn rcount_report<F: Real>(m: u64, n: u64, alpha: &Alpha<F>, delta: F) -> Result<BoundReport<F>> {
    let lhs = F::from_u64(count_near_integers(m, n, alpha, delta)?).expect("small");
    let rhs = rcount_envelope(n, alpha.to_real(), delta)?;
    let desc = vec![
        ("M", m.to_string()),
        ("N", n.to_string()),
        ("alpha", alpha.to_string()),
        ("delta", delta.to_string()),
    ];
    Ok(BoundReport::new("rcount", desc, lhs, rhs))
}

/// |Σ_{N/d < n ≤ 2N/d} e(h·n^k·d^k·α)| with e(x) = exp(2πix).
///
/// Diagnostic only. Phases are reduced mod 1 before the trigonometric
/// evaluation so large n^k do not destroy them.
pub fn weyl_exp_sum<F: Real>(n: u64, k: u32, h: u64, d: u64, alpha: &Alpha<F>) -> Result<F> {
    if h < 1 || d < 1 {
        return invalid("h and d must be >= 1");
    }
    let scale = (h as u128)
        .checked_mul((d as u128).checked_pow(k).ok_or(Error::Overflow("d^k"))?)
        .ok_or(Error::Overflow("h·d^k"))?;
    let tau = F::lit(2.0) * F::PI();
    let mut re = CompensatedSum::new();
    let mut im = CompensatedSum::new();
    for i in (n / d + 1)..=(2 * n / d) {
        let m = (i as u128)
            .checked_pow(k)
            .and_then(|v| v.checked_mul(scale))
            .ok_or(Error::Overflow("h·n^k·d^k"))?;
        let (s, c) = (tau * alpha.frac_mul(m)).sin_cos();
        re.add(c);
        im.add(s);
    }
    Ok(re.value().hypot(im.value()))
}
