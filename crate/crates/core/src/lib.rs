//! Exact Farey-fraction lattice counts and fractional-part sum bounds.
//!
//! The crate computes the Farey sets ℱ(T) and ℐ(T) = ℱ(T) ∩ [0, 1/2], the
//! lattice count C(T) = Σ_{a/b ∈ ℐ(T)} #(ℱ(T) ∩ [1 − a²/b², 1]), the moments
//! F(T) and G(T), the error term E(T) = C(T) − F(T)·G(T) and the Mertens-
//! weighted ψ-sum Σ(T), together with constrained ψ-sums over dyadic ranges
//! and the closed-form upper bounds they are compared against.
//!
//! Exact quantities use [`Fraction`] (arbitrary-precision rationals). Every
//! floating routine is generic over [`Real`]; the `*64` aliases below fix it
//! to `f64`.

// NaN must fail range checks, so `!(x > 0)` is intended
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod farey;
pub mod frac;
pub mod fracsum;
pub mod lattice;
pub mod report;
pub mod scalar;
pub mod sieve;

use num_bigint::BigInt;
use num_rational::Ratio;

pub use error::{Error, Result};
pub use frac::{dist_nearest_int, parse_alpha, psi, psi_mod, Alpha};
pub use report::Table;
pub use scalar::{CompensatedSum, Real};
pub use sieve::{build_tables, ArithTables};

/// Exact rational in lowest terms with a positive denominator.
pub type Fraction = Ratio<BigInt>;

/// An evaluated quantity: exact when the inputs allowed it, floating otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Value<F> {
    Exact(Fraction),
    Float(F),
}

impl<F: Real> Value<F> {
    pub fn to_real(&self) -> F {
        match self {
            Value::Exact(r) => frac::ratio_to_real(r),
            Value::Float(x) => *x,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }
}

impl<F: std::fmt::Display> std::fmt::Display for Value<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

pub type Alpha64 = Alpha<f64>;
pub type Value64 = Value<f64>;
pub type BoundReport64 = fracsum::BoundReport<f64>;
pub type PsiSumParams64 = fracsum::PsiSumParams<f64>;
pub type PsiSumResult64 = fracsum::PsiSumResult<f64>;
pub type MinSumParams64 = fracsum::MinSumParams<f64>;
pub type FitResult64 = analysis::FitResult<f64>;
pub type LatticeRealResult64 = lattice::LatticeRealResult<f64>;
