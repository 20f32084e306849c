//! Closed-form sphere moments in exact rational arithmetic.
//!
//! Each quantity has (at least) two derivations here that share no code
//! beyond big-integer arithmetic, so they can be used as mutual oracles:
//! double-factorial closed forms on one side, Gaussian/chi-square moment
//! ratios or hypergeometric sums on the other.

use std::f64::consts::PI;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::combinatorics::{binomial, dfact, factorial, product_of_factorials, ratio};
use crate::error::{check_dim, Error, Result};
use crate::field::FieldTag;

/// Exponents `(n_1, ..., n_d)` of the monomial `x_1^{n_1} ... x_d^{n_d}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    /// `x_i^power` in `dim` variables.
    pub fn single(dim: usize, i: usize, power: u32) -> Self {
        let mut v = vec![0; dim];
        v[i] = power;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total degree.
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&n| u64::from(n)).sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn all_even(&self) -> bool {
        self.0.iter().all(|n| n % 2 == 0)
    }
}

impl From<Vec<u32>> for ExponentVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, n) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

fn i(n: u64) -> i64 {
    n as i64
}

/// Average of `x_1^l` over `S(R^d)`: `(l-1)!! (d-2)!! / (l+d-2)!!`.
///
/// Only even `l` is accepted (odd moments vanish and are the caller's
/// business). The formula is valid for every `d >= 1`.
pub fn alpha(l: u64, d: u64) -> Result<BigRational> {
    if l % 2 == 1 {
        return Err(Error::Domain(format!("alpha needs an even degree, got {l}")));
    }
    check_dim(d as usize)?;
    Ok(ratio(dfact(i(l) - 1) * dfact(i(d) - 2), dfact(i(l + d) - 2)))
}

/// Average of `|z_1|^{2l}` over `S(C^d)`: `1 / binom(l+d-1, l)`.
pub fn beta(l: u64, d: u64) -> Result<BigRational> {
    check_dim(d as usize)?;
    Ok(ratio(BigUint::one(), binomial(l + d - 1, l)))
}

/// The same constant through the polar-coordinate route:
/// `(2l)!! (2d-2)!! / (2d+2l-2)!!`.
pub fn beta_via_double_factorials(l: u64, d: u64) -> Result<BigRational> {
    check_dim(d as usize)?;
    Ok(ratio(
        dfact(2 * i(l)) * dfact(2 * i(d) - 2),
        dfact(2 * i(d) + 2 * i(l) - 2),
    ))
}

/// `sum_k binom(l,k)^2 / binom(2l, 2k)`.
pub fn hypergeometric_sum(l: u64) -> BigRational {
    (0..=l).fold(BigRational::zero(), |acc, k| {
        let b = binomial(l, k);
        acc + ratio(&b * &b, binomial(2 * l, 2 * k))
    })
}

/// Checks `sum_k binom(l,k)^2 / binom(2l,2k) = 4^l / binom(2l,l)` exactly.
pub fn verify_hypergeometric_identity(l: u64) -> bool {
    let rhs = ratio(BigUint::from(4u32).pow(l as u32), binomial(2 * l, l));
    hypergeometric_sum(l) == rhs
}

/// The same constant through the real sphere in dimension `2d`:
/// `alpha_{2l,2d} * sum_k binom(l,k)^2 / binom(2l,2k)`.
pub fn beta_via_hypergeometric_sum(l: u64, d: u64) -> Result<BigRational> {
    Ok(alpha(2 * l, 2 * d)? * hypergeometric_sum(l))
}

fn check_moment_dim(n: &ExponentVector) -> Result<u64> {
    check_dim(n.dim())?;
    Ok(n.dim() as u64)
}

/// Average of `x_1^{n_1} ... x_d^{n_d}` over `S(R^d)`:
/// zero if any exponent is odd, else `(d-2)!! prod (n_j-1)!! / (d+l-2)!!`.
pub fn real_monomial_moment(n: &ExponentVector) -> Result<BigRational> {
    let d = check_moment_dim(n)?;
    if !n.all_even() {
        return Ok(BigRational::zero());
    }
    let l = n.degree();
    let num = n
        .exponents()
        .iter()
        .fold(dfact(i(d) - 2), |acc, &nj| acc * dfact(i64::from(nj) - 1));
    Ok(ratio(num, dfact(i(d + l) - 2)))
}

/// Average of `|z_1|^{2 n_1} ... |z_d|^{2 n_d}` over `S(C^d)`:
/// `(d-1)! prod n_j! / (l+d-1)!` with `l = sum n_j`.
pub fn complex_monomial_moment(n: &ExponentVector) -> Result<BigRational> {
    let d = check_moment_dim(n)?;
    let l = n.degree();
    let num = factorial(d - 1) * product_of_factorials(n.exponents().iter().map(|&k| u64::from(k)));
    Ok(ratio(num, factorial(l + d - 1)))
}

/// Average of `prod z_j^{n_j} conj(z_j)^{m_j}` over `S(C^d)`; vanishes unless
/// `n == m` coordinatewise (invariance under diagonal phases).
pub fn complex_mixed_moment(n: &ExponentVector, m: &ExponentVector) -> Result<BigRational> {
    if n.dim() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: n.dim(),
            actual: m.dim(),
        });
    }
    if n != m {
        check_moment_dim(n)?;
        return Ok(BigRational::zero());
    }
    complex_monomial_moment(n)
}

/// `a (a+s) (a+2s) ...` with `count` factors.
fn rising(a: u64, step: u64, count: u64) -> BigUint {
    (0..count).fold(BigUint::one(), |acc, k| acc * (a + k * step))
}

/// Sphere moments from Gaussian moments: for `Y = Z X` with `Y` standard
/// Gaussian, `Z = |Y|` and `X` uniform and independent,
/// `E P(X) = E P(Y) / E Z^l`.
///
/// Real: `E Y^n = (n-1)!!` (even `n`), `E Z^l = d (d+2) ... (d+l-2)`.
/// Complex (with `E|w|^2 = 1`): `E |w|^{2n} = n!`, `E Z^{2l} = d (d+1) ... (d+l-1)`;
/// the exponents are those of `|z_j|^2`.
pub fn gaussianization_moment_oracle(n: &ExponentVector, field: FieldTag) -> Result<BigRational> {
    let d = check_moment_dim(n)?;
    let l = n.degree();
    match field {
        FieldTag::Real => {
            if n.exponents().iter().any(|k| k % 2 == 1) {
                return Ok(BigRational::zero());
            }
            let gaussian: BigUint = n
                .exponents()
                .iter()
                .map(|&k| rising(1, 2, u64::from(k) / 2))
                .product();
            Ok(ratio(gaussian, rising(d, 2, l / 2)))
        }
        FieldTag::Complex => {
            let gaussian: BigUint = n.exponents().iter().map(|&k| rising(1, 1, u64::from(k))).product();
            Ok(ratio(gaussian, rising(d, 1, l)))
        }
    }
}

/// `alpha_{l,d}` in floating point as a product of `l/2` ratios; usable
/// for any `d`, where the exact form would be needlessly large.
pub fn alpha_f64(l: u64, d: u64) -> f64 {
    debug_assert!(l % 2 == 0);
    (0..l / 2).map(|k| (2 * k + 1) as f64 / (d + 2 * k) as f64).product()
}

/// `beta_{l,d}` in floating point.
pub fn beta_f64(l: u64, d: u64) -> f64 {
    (1..=l).map(|k| k as f64 / (d + k - 1) as f64).product()
}

/// Floating-point sphere moment of a monomial given by its nonzero
/// exponents, for `S(R^d)` (`field = Real`) or of `prod |z_j|^{2 n_j}` for
/// `S(C^d)`.
pub fn monomial_moment_f64(nonzero_exponents: &[u32], dim: usize, field: FieldTag) -> f64 {
    let d = dim as f64;
    match field {
        FieldTag::Real => {
            if nonzero_exponents.iter().any(|k| k % 2 == 1) {
                return 0.0;
            }
            // prod_j (n_j - 1)!! / (d (d+2) ... (d+l-2)), interleaved to stay in range
            let mut acc = 1.0;
            let mut k = 0.0;
            for &nj in nonzero_exponents {
                let mut f = f64::from(nj) - 1.0;
                while f > 0.0 {
                    acc *= f / (d + k);
                    k += 2.0;
                    f -= 2.0;
                }
            }
            acc
        }
        FieldTag::Complex => {
            let mut acc = 1.0;
            let mut k = 0.0;
            for &nj in nonzero_exponents {
                for f in 1..=nj {
                    acc *= f64::from(f) / (d + k);
                    k += 1.0;
                }
            }
            acc
        }
    }
}

/// Surface area of `S(R^n)` as `g(n) / (n-2)!!`, with `g(n) = c(1) ... c(n)`,
/// `c(k) = 2` for odd `k` and `pi` for even `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceArea {
    pub n: u64,
    /// `g(n) = 2^two_power * pi^pi_power`.
    pub two_power: u64,
    pub pi_power: u64,
    /// `(n-2)!!`.
    pub double_factorial: BigUint,
    pub value: f64,
}

fn c_factor_is_pi(k: u64) -> bool {
    k % 2 == 0
}

/// Exponents `(a, b)` with `g(n) = 2^a pi^b`.
fn g_exponents(n: u64) -> (u64, u64) {
    (1..=n).fold((0, 0), |(a, b), k| if c_factor_is_pi(k) { (a, b + 1) } else { (a + 1, b) })
}

pub fn sphere_surface_area(n: u64) -> Result<SurfaceArea> {
    if n < 2 {
        return Err(Error::Domain(format!("surface area needs n >= 2, got {n}")));
    }
    let (two_power, pi_power) = g_exponents(n);
    let df = dfact(i(n) - 2);
    // log space: (2pi)^{n/2} overflows long before the ratio does
    let ln_df: f64 = (1..=n.saturating_sub(2)).rev().step_by(2).map(|k| (k as f64).ln()).sum();
    let ln_value = two_power as f64 * std::f64::consts::LN_2 + pi_power as f64 * PI.ln() - ln_df;
    Ok(SurfaceArea {
        n,
        two_power,
        pi_power,
        double_factorial: df,
        value: ln_value.exp(),
    })
}


/// Exact rational `1/n`.
pub fn reciprocal(n: u64) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(n))
}
