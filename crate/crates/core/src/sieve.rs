//! Multiplicative-function tables from a linear sieve.
//!
//! [`ArithTables`] holds μ, φ, ω, the smallest prime factor and the Mertens
//! prefix sums for every `n ≤ limit`. Tables are immutable once built and are
//! shared freely between scan workers.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

pub const MAX_LIMIT: u64 = 100_000_000;

#[derive(Clone, Debug)]
pub struct ArithTables {
    limit: usize,
    // index 0 is padding so that arrays are indexed by n directly
    mu: Vec<i8>,
    phi: Vec<u32>,
    omega: Vec<u8>,
    spf: Vec<u32>,
    mertens: Vec<i32>,
    primes: Vec<u32>,
}

fn alloc<T: Clone>(len: usize, fill: T, what: &str) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len)
        .map_err(|e| Error::Resource(format!("allocating {what} table of {len} entries: {e}")))?;
    v.resize(len, fill);
    Ok(v)
}

/// Builds all tables up to `limit` with a linear sieve.
pub fn build_tables(limit: u64) -> Result<ArithTables> {
    if limit < 1 {
        return invalid(format!("table limit must be >= 1, got {limit}"));
    }
    if limit > MAX_LIMIT {
        return invalid(format!("table limit {limit} exceeds {MAX_LIMIT}"));
    }
    let n = limit as usize;
    let mut mu = alloc(n + 1, 0i8, "mu")?;
    let mut phi = alloc(n + 1, 0u32, "phi")?;
    let mut omega = alloc(n + 1, 0u8, "omega")?;
    let mut spf = alloc(n + 1, 0u32, "spf")?;
    let mut mertens = alloc(n + 1, 0i32, "mertens")?;
    let mut primes: Vec<u32> = Vec::new();

    mu[1] = 1;
    phi[1] = 1;
    spf[1] = 1;
    for i in 2..=n {
        if spf[i] == 0 {
            spf[i] = i as u32;
            phi[i] = (i - 1) as u32;
            mu[i] = -1;
            omega[i] = 1;
            primes.push(i as u32);
        }
        let spf_i = spf[i];
        for &p in &primes {
            if p > spf_i {
                break;
            }
            let Some(j) = i.checked_mul(p as usize).filter(|&j| j <= n) else {
                break;
            };
            spf[j] = p;
            if p == spf_i {
                phi[j] = phi[i] * p;
                mu[j] = 0;
                omega[j] = omega[i];
            } else {
                phi[j] = phi[i] * (p - 1);
                mu[j] = -mu[i];
                omega[j] = omega[i] + 1;
            }
        }
    }
    let mut acc = 0i32;
    for i in 1..=n {
        acc += mu[i] as i32;
        mertens[i] = acc;
    }
    Ok(ArithTables {
        limit: n,
        mu,
        phi,
        omega,
        spf,
        mertens,
        primes,
    })
}

impl ArithTables {
    pub fn limit(&self) -> u64 {
        self.limit as u64
    }

    fn check(&self, n: u64, what: &str) -> Result<usize> {
        if n < 1 || n > self.limit as u64 {
            return invalid(format!("{what}: {n} outside table range 1..={}", self.limit));
        }
        Ok(n as usize)
    }

    pub fn mu(&self, n: u64) -> Result<i8> {
        Ok(self.mu[self.check(n, "mu")?])
    }

    pub fn phi(&self, n: u64) -> Result<u32> {
        Ok(self.phi[self.check(n, "phi")?])
    }

    pub fn omega(&self, n: u64) -> Result<u8> {
        Ok(self.omega[self.check(n, "omega")?])
    }

    pub fn spf(&self, n: u64) -> Result<u32> {
        Ok(self.spf[self.check(n, "spf")?])
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// M(t) = Σ_{n ≤ t} μ(n).
    pub fn mertens(&self, t: u64) -> Result<i64> {
        Ok(self.mertens[self.check(t, "mertens")?] as i64)
    }

    /// Unchecked M(t) with M(0) = 0, for inner loops whose bounds are already validated.
    #[inline]
    pub(crate) fn mertens_raw(&self, t: usize) -> i64 {
        if t == 0 {
            0
        } else {
            self.mertens[t] as i64
        }
    }

    /// Distinct prime factors of `n`, ascending.
    pub fn distinct_primes(&self, n: u64) -> Result<Vec<u64>> {
        let mut m = self.check(n, "factorization")?;
        let mut out = Vec::new();
        while m > 1 {
            let p = self.spf[m] as usize;
            out.push(p as u64);
            while m % p == 0 {
                m /= p;
            }
        }
        Ok(out)
    }

    /// F_0(n) = 2^ω(n), exact.
    pub fn f_zero(&self, n: u64) -> Result<u64> {
        Ok(1u64 << self.omega(n)?)
    }

    /// F_β(n) = Π_{p | n} (1 + p^{-β}).
    pub fn f_beta<F: Real>(&self, n: u64, beta: F) -> Result<F> {
        if !(beta >= F::zero()) {
            return invalid(format!("f_beta: beta must be >= 0, got {beta}"));
        }
        let primes = self.distinct_primes(n)?;
        if beta == F::zero() {
            return Ok(F::from_u64(1u64 << primes.len()).expect("small power of two"));
        }
        Ok(primes.into_iter().fold(F::one(), |acc, p| {
            let p = F::from_u64(p).expect("prime representable");
            acc * (F::one() + p.powf(-beta))
        }))
    }

    /// Σ_{d ≤ T} M(⌊T/d⌋), which equals 1 for every T ≥ 1.
    pub fn mertens_dirichlet_identity(&self, t: u64) -> Result<i64> {
        let t = self.check(t, "mertens_dirichlet_identity")?;
        Ok((1..=t).map(|d| self.mertens[t / d] as i64).sum())
    }

    /// CSV dump `n,mu,phi,omega,mertens` for `1..=upto`.
    pub fn to_table(&self, upto: u64) -> Result<crate::report::Table> {
        let upto = self.check(upto, "table dump")?;
        let mut t = crate::report::Table::new(["n", "mu", "phi", "omega", "mertens"]);
        for n in 1..=upto {
            t.push_row([
                n.to_string(),
                self.mu[n].to_string(),
                self.phi[n].to_string(),
                self.omega[n].to_string(),
                self.mertens[n].to_string(),
            ]);
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trial-division factorization, independent of the sieve.
    fn factor(mut n: u64) -> Vec<(u64, u32)> {
        let mut out = Vec::new();
        let mut p = 2;
        while p * p <= n {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            if e > 0 {
                out.push((p, e));
            }
            p += 1;
        }
        if n > 1 {
            out.push((n, 1));
        }
        out
    }

    fn mu_oracle(n: u64) -> i8 {
        let f = factor(n);
        if f.iter().any(|&(_, e)| e > 1) {
            0
        } else if f.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    #[test]
    fn mu_first_ten() {
        let t = build_tables(10).unwrap();
        let mu: Vec<i8> = (1..=10).map(|n| t.mu(n).unwrap()).collect();
        assert_eq!(mu, [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
        assert_eq!(t.mertens(10).unwrap(), -1);
    }

    #[test]
    fn limit_one() {
        let t = build_tables(1).unwrap();
        assert_eq!(t.mu(1).unwrap(), 1);
        assert_eq!(t.mertens(1).unwrap(), 1);
        assert_eq!(t.phi(1).unwrap(), 1);
        assert_eq!(t.omega(1).unwrap(), 0);
    }

    #[test]
    fn bad_limits() {
        assert!(matches!(build_tables(0), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_tables(MAX_LIMIT + 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn mertens_examples() {
        let t = build_tables(100).unwrap();
        assert_eq!(t.mertens(1).unwrap(), 1);
        assert_eq!(t.mertens(5).unwrap(), -2);
        assert_eq!(t.mertens(10).unwrap(), -1);
        assert_eq!(t.mertens(16).unwrap(), -1);
        assert!(t.mertens(0).is_err());
        assert!(t.mertens(101).is_err());
    }

    #[test]
    fn tables_match_trial_division() {
        let t = build_tables(3000).unwrap();
        let mut m = 0i64;
        for n in 1..=3000u64 {
            let f = factor(n);
            assert_eq!(t.mu(n).unwrap(), mu_oracle(n), "mu({n})");
            let phi: u64 = f.iter().map(|&(p, e)| (p - 1) * p.pow(e - 1)).product();
            assert_eq!(t.phi(n).unwrap() as u64, phi, "phi({n})");
            assert_eq!(t.omega(n).unwrap() as usize, f.len(), "omega({n})");
            if n > 1 {
                assert_eq!(t.spf(n).unwrap() as u64, f[0].0);
            }
            m += mu_oracle(n) as i64;
            assert_eq!(t.mertens(n).unwrap(), m);
        }
    }

    #[test]
    fn phi_is_multiplicative() {
        use num_integer::Integer;
        let t = build_tables(10_000).unwrap();
        for m in 1..100u64 {
            for n in 1..100u64 {
                if m.gcd(&n) == 1 {
                    assert_eq!(t.phi(m * n).unwrap(), t.phi(m).unwrap() * t.phi(n).unwrap());
                    assert_eq!(
                        t.mu(m * n).unwrap(),
                        t.mu(m).unwrap() * t.mu(n).unwrap()
                    );
                    assert_eq!(t.omega(m * n).unwrap(), t.omega(m).unwrap() + t.omega(n).unwrap());
                }
            }
        }
    }

    #[test]
    fn dirichlet_identity_small() {
        let t = build_tables(10_000).unwrap();
        assert_eq!(t.mertens_dirichlet_identity(1).unwrap(), 1);
        assert_eq!(t.mertens_dirichlet_identity(3).unwrap(), 1);
        // brute-force double sum Σ_{n ≤ T} Σ_{d | n} μ(d)
        let big = 10_000u64;
        let brute: i64 = (1..=big)
            .map(|n| (1..=n).filter(|d| n % d == 0).map(|d| t.mu(d).unwrap() as i64).sum::<i64>())
            .sum();
        assert_eq!(brute, 1);
        assert_eq!(t.mertens_dirichlet_identity(big).unwrap(), 1);
        assert!(t.mertens_dirichlet_identity(0).is_err());
    }

    #[test]
    fn f_beta_examples() {
        let t = build_tables(100).unwrap();
        assert_eq!(t.f_beta(12, 0.0f64).unwrap(), 4.0);
        assert_eq!(t.f_zero(12).unwrap(), 4);
        assert!((t.f_beta(6, 1.0f64).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(t.f_beta(1, 0.7f64).unwrap(), 1.0);
        assert_eq!(t.f_beta(1, 0.0f32).unwrap(), 1.0);
        assert!(t.f_beta(6, -1.0f64).is_err());
        assert!(t.f_beta(101, 1.0f64).is_err());
    }

    #[test]
    fn f_zero_is_two_to_omega_and_monotone_in_beta() {
        let t = build_tables(100_000).unwrap();
        for n in 1..=100_000u64 {
            assert_eq!(t.f_beta(n, 0.0f64).unwrap(), (1u64 << t.omega(n).unwrap()) as f64);
        }
        for n in (1..=100_000u64).step_by(97) {
            let a = t.f_beta(n, 0.25f64).unwrap();
            let b = t.f_beta(n, 0.5f64).unwrap();
            let c = t.f_beta(n, 1.0f64).unwrap();
            assert!(t.f_zero(n).unwrap() as f64 >= a && a >= b && b >= c, "n={n}");
        }
    }

    #[test]
    fn table_dump() {
        let t = build_tables(10).unwrap();
        let csv = t.to_table(3).unwrap().to_csv_string().unwrap();
        assert_eq!(csv, "n,mu,phi,omega,mertens\n1,1,1,0,1\n2,-1,1,1,0\n3,-1,2,1,-1\n");
    }
}
